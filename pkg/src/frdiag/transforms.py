"""Analytic transforms of measures.

Cauchy transform G and its reciprocal F on the upper half-plane; the
moment generating pair psi/chi and the S-transform on the negative axis;
the Voiculescu transform phi evaluated on the imaginary axis (where it is
purely imaginary for symmetric laws) or through a free generating pair;
and the imaginary part of the R-transform used by the semigroup solvers.

Sign conventions on the imaginary axis, for a symmetric law mu:

    G_mu(i y)   = -i * gcal(y)          gcal(y) > 0
    F_mu(i y)   =  i * f(y)             f(y) >= y
    phi_mu(i v) =  i * phihat(v)        phihat(v) <= 0 for freely inf. div.
    Im R_mu(i y) = -phihat(1/y)

the last line following from the reflection extension f(conj z) = conj f(z).
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import minimize_scalar

from . import measures
from ._solvers import newton_bisect
from .errors import ConvergenceError, DegenerateMeasure, DomainError
from .measures import PositiveMeasure, RealMeasure, SymmetricMeasure


@dataclasses.dataclass(frozen=True)
class GeneratingPair:
    """Free generating pair (gamma, sigma) of a freely infinitely divisible law.

    ``sigma`` is stored as a symmetric probability measure scaled by
    ``sigma_mass`` (the pair of a t-fold convolution power is (t*gamma,
    t*sigma), so the mass is a first-class dial).  ``sigma=None`` with
    ``sigma_mass=0`` encodes the zero measure.
    """

    gamma: float
    sigma: SymmetricMeasure | None
    sigma_mass: float = 1.0

    def __post_init__(self):
        if self.sigma_mass < 0:
            raise DomainError("sigma must be a positive measure")
        if self.sigma is None and self.sigma_mass != 0.0:
            raise DomainError("nonzero mass requires a sigma shape")

    def scaled(self, t):
        return GeneratingPair(t * self.gamma, self.sigma, t * self.sigma_mass)


@dataclasses.dataclass(frozen=True)
class ImagAxisValue:
    """A real number attached to the evaluation height y > 0 on the axis."""

    y: float
    value: float

    def __post_init__(self):
        if self.y <= 0:
            raise DomainError("axis height must be positive")


# ---------------------------------------------------------------------------
# support flattening
# ---------------------------------------------------------------------------

def _weighted_support(mu):
    """Locations and weights representing the measure for transform sums."""
    if isinstance(mu, PositiveMeasure):
        locs = [np.zeros(1)] if mu.atom0 > 0 else []
        wts = [np.full(1, mu.atom0)] if mu.atom0 > 0 else []
        locs += [mu.atom_x, mu.x]
        wts += [mu.atom_m, mu.node_mass]
        return np.concatenate(locs), np.concatenate(wts)
    if isinstance(mu, RealMeasure):
        return (np.concatenate((mu.atom_x, mu.x)),
                np.concatenate((mu.atom_m, mu.node_mass)))
    if isinstance(mu, SymmetricMeasure):
        return _weighted_support(mu.half)
    raise DomainError(f"unsupported measure type {type(mu)!r}")


def _chunked_sum(kernel, z, ts, ws, chunk=1 << 22):
    """Sum_k ws[k] * kernel(z, ts[k]) without allocating huge outer products."""
    z = np.asarray(z)
    out = np.zeros(z.shape, dtype=complex)
    step = max(1, chunk // max(z.size, 1))
    for k0 in range(0, ts.size, step):
        t = ts[k0:k0 + step]
        w = ws[k0:k0 + step]
        out += (kernel(z[..., None], t) * w).sum(axis=-1)
    return out


# ---------------------------------------------------------------------------
# Cauchy transform and friends
# ---------------------------------------------------------------------------

def transform_GF(mu, z):
    """Cauchy transform G and reciprocal F = 1/G at z in the upper half-plane.

    Accepts scalars or arrays for ``z``.  Symmetric measures are evaluated
    through the even identity G(z) = int z/(z^2 - t^2) d(half)(t), which keeps
    G exactly odd along the imaginary axis.
    """
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag <= 0):
        raise DomainError("z must lie in the open upper half-plane")
    ts, ws = _weighted_support(mu)
    if isinstance(mu, SymmetricMeasure):
        G = _chunked_sum(lambda zz, t: zz / (zz * zz - t * t), z_arr, ts, ws)
    else:
        G = _chunked_sum(lambda zz, t: 1.0 / (zz - t), z_arr, ts, ws)
    F = 1.0 / G
    if np.isscalar(z) or z_arr.ndim == 0:
        return complex(G), complex(F)
    return G, F


def g_imag_modulus(mu_abs_sq: PositiveMeasure, y):
    """-Im G at i*y of the symmetrized modulus law, straight off mu_{|A|^2}.

    Uses the resolvent identity gcal(y) = y * int d mu_{|A|^2}(t) / (y^2 + t),
    which agrees with the Cauchy transform of symmetrize(sqrt_pushforward)
    evaluated at i*y.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise DomainError("y must be positive")
    ts, ws = _weighted_support(mu_abs_sq)
    vals = (ws / (y_arr[..., None] ** 2 + ts)).sum(axis=-1) * y_arr
    return float(vals) if np.isscalar(y) or y_arr.ndim == 0 else vals


def _gcal_symmetric(mu: SymmetricMeasure, y):
    """gcal(y) = -Im G_mu(i y) > 0 for a symmetric law, vectorized in y."""
    ts, ws = _weighted_support(mu)
    y_arr = np.asarray(y, dtype=float)
    return (ws / (y_arr[..., None] ** 2 + ts * ts)).sum(axis=-1) * y_arr


def imag_F(mu: SymmetricMeasure, y):
    """f(y) with F_mu(i y) = i f(y); satisfies f(y) >= y."""
    return 1.0 / _gcal_symmetric(mu, y)


# ---------------------------------------------------------------------------
# psi / chi / S
# ---------------------------------------------------------------------------

def psi_transform(mu: PositiveMeasure, z):
    """psi(z) = int z t / (1 - z t) d mu(t) for z < 0, vectorized."""
    ts, ws = _weighted_support(mu)
    z_arr = np.asarray(z, dtype=float)
    q = z_arr[..., None] * ts
    vals = (ws * (q / (1.0 - q))).sum(axis=-1)
    return float(vals) if np.isscalar(z) or z_arr.ndim == 0 else vals


def _psi_deriv_log(mu, zeta):
    # d/d zeta psi(-exp(zeta)) where zeta = log(-z)
    ts, ws = _weighted_support(mu)
    z = -math.exp(zeta)
    q = z * ts
    return float((ws * (q / (1.0 - q) ** 2)).sum())


def chi_transform(mu: PositiveMeasure, u):
    """Inverse of psi on (mu({0}) - 1, 0), by safeguarded Newton in log(-z)."""
    atom0 = mu.atom0
    if not (atom0 - 1.0 < u < 0.0):
        raise DomainError(f"u={u} outside (mu({{0}})-1, 0)")
    scale = _typical_scale(mu)
    # zeta = log(-z): psi(-e^zeta) decreases from 0 to atom0 - 1 as zeta grows
    lo, hi = math.log(scale) - 30.0, math.log(scale) + 30.0
    for _ in range(60):
        if psi_transform(mu, -math.exp(lo)) > u:
            break
        lo -= 30.0
    else:
        raise ConvergenceError("chi: no lower bracket")
    for _ in range(60):
        if psi_transform(mu, -math.exp(hi)) < u:
            break
        hi += 30.0
    else:
        raise ConvergenceError("chi: no upper bracket")
    zeta = newton_bisect(
        lambda t: u - psi_transform(mu, -math.exp(t)),
        lambda t: -_psi_deriv_log(mu, t),
        lo, hi, rtol=1e-14)
    return -math.exp(zeta)


def _typical_scale(mu):
    ts, ws = _weighted_support(mu)
    pos = ts > 0
    if not np.any(pos):
        return 1.0
    med = float(np.interp(0.5, np.cumsum(ws[pos]) / ws[pos].sum(), ts[pos]))
    return 1.0 / max(med, 1e-300)


def s_transform(mu: PositiveMeasure, u):
    """S(u) = (1+u)/u * chi(u) > 0 on (mu({0}) - 1, 0)."""
    if mu.is_point_mass() and mu.atom0 > 0.5:
        raise DegenerateMeasure("S-transform undefined for the point mass at 0")
    return (1.0 + u) / u * chi_transform(mu, u)


def s_limit_at_minus_one(mu: PositiveMeasure):
    """Limit of S at u = -1, which equals the first negative moment.

    Evaluated along u = -1 + 2^-j, j = 4..20.  Divergence is declared when
    the last three successive values each grow by >= 1.01; otherwise the
    linear-in-(1+u) trend is extrapolated to u = -1.
    """
    if mu.atom0 > 0:
        raise DomainError("requires mu({0}) = 0")
    hs = 2.0 ** -np.arange(4, 21)
    vals = np.array([s_transform(mu, -1.0 + h) for h in hs])
    ratios = vals[1:] / vals[:-1]
    if np.all(ratios[-3:] >= 1.01):
        return math.inf
    # the approach to the limit carries both h and h*log(h) corrections
    h = hs[-7:]
    basis = np.stack([np.ones_like(h), h, h * np.log(h)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, vals[-7:], rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# Voiculescu transform
# ---------------------------------------------------------------------------

def phi_imag_axis(mu: SymmetricMeasure, v, *, max_iter=200):
    """phihat(v) with phi(i v) = i phihat(v), by inverting f on the axis.

    The right inverse of F is the branch of f connected to infinity, so the
    solver walks down from y = v (always an upper bracket since f(y) >= y)
    and targets the largest solution of f(y) = v.  A tangency of f with the
    level v (the inversion boundary) is resolved through the minimizer.
    """
    if v <= 0:
        raise DomainError("v must be positive")
    if mu.is_point_mass():
        return 0.0

    def f(y):
        return float(imag_F(mu, y))

    y_hi = v
    f_hi = f(y_hi)
    if f_hi <= v * (1.0 + 1e-15):
        # f(v) == v only when mu = delta_0
        return f_hi - v if f_hi > v else 0.0
    y_lo = None
    y = v
    for _ in range(260):
        y *= 0.75
        fy = f(y)
        if fy <= v:
            y_lo = y
            break
        y_hi, f_hi = y, fy
    if y_lo is None:
        res = minimize_scalar(f, bounds=(v * 0.75 ** 260, v), method="bounded",
                              options={"xatol": 1e-13 * v})
        if res.fun <= v * (1.0 + 1e-9):
            return float(res.x) - v
        raise DomainError(f"v={v} below the invertible range of F on the axis")

    ts, ws = _weighted_support(mu)

    def fprime(y):
        g = float((ws * y / (y * y + ts * ts)).sum())
        gp = float((ws * (ts * ts - y * y) / (y * y + ts * ts) ** 2).sum())
        return -gp / (g * g)

    root = newton_bisect(lambda t: f(t) - v, fprime, y_lo, y_hi,
                         rtol=1e-13, max_iter=max_iter)
    return root - v


def _sigma_kernel_upper(z, s):
    # (1+sz)/(z-s) + mirror, per unit of half-line mass at s >= 0; stable for
    # huge s where the direct form overflows
    out = np.empty(np.broadcast(z, s).shape, dtype=complex)
    big = np.broadcast_to(s, out.shape) > 1.0
    zs = np.broadcast_to(z, out.shape)
    ss = np.broadcast_to(s, out.shape)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        direct = zs * (1.0 + ss * ss) / (zs * zs - ss * ss)
        scaled = zs * (1.0 / (ss * ss) + 1.0) / ((zs / ss) ** 2 - 1.0)
    out[~big] = direct[~big]
    out[big] = scaled[big]
    return out


def phi_from_pair(pair: GeneratingPair, z):
    """phi(z) = gamma + int (1+sz)/(z-s) d sigma(s) on the upper half-plane."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag <= 0):
        raise DomainError("z must lie in the open upper half-plane")
    out = np.full(z_arr.shape, complex(pair.gamma), dtype=complex)
    if pair.sigma_mass > 0:
        ts, ws = _weighted_support(pair.sigma)
        out = out + pair.sigma_mass * _chunked_sum(_sigma_kernel_upper, z_arr, ts, ws)
    if np.isscalar(z) or z_arr.ndim == 0:
        return complex(out)
    return out


def phi_hat_from_pair(pair: GeneratingPair, v):
    """phihat(v) = -v int (1+s^2)/(v^2+s^2) d sigma(s); requires gamma = 0."""
    if pair.gamma != 0.0:
        raise DomainError("imaginary-axis phihat requires gamma = 0")
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0):
        raise DomainError("v must be positive")
    if pair.sigma_mass == 0:
        vals = np.zeros(v_arr.shape)
    else:
        ts, ws = _weighted_support(pair.sigma)
        big = ts > 1.0
        vv = v_arr[..., None]
        with np.errstate(over="ignore", invalid="ignore"):
            kern = np.where(big,
                            (1.0 / np.where(big, ts, 1.0) ** 2 + 1.0)
                            / ((vv / np.where(big, ts, 1.0)) ** 2 + 1.0),
                            (1.0 + ts * ts) / (vv * vv + ts * ts))
        vals = -pair.sigma_mass * v_arr * (kern * ws).sum(axis=-1)
    return float(vals) if np.isscalar(v) or v_arr.ndim == 0 else vals


def r_imag(source, y):
    """Im R(i y) = -phihat(1/y), from a pair, a symmetric law, or a phihat callable."""
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0):
        raise DomainError("y must be positive")
    if isinstance(source, GeneratingPair):
        return -phi_hat_from_pair(source, 1.0 / y_arr) if y_arr.ndim else -phi_hat_from_pair(source, 1.0 / float(y_arr))
    if isinstance(source, SymmetricMeasure):
        if y_arr.ndim:
            return -np.asarray([phi_imag_axis(source, 1.0 / yy) for yy in y_arr])
        return -phi_imag_axis(source, 1.0 / float(y_arr))
    if callable(source):
        vals = -np.asarray(source(1.0 / y_arr))
        return float(vals) if y_arr.ndim == 0 else vals
    raise DomainError(f"cannot compute R from {type(source)!r}")
