"""Dynamics of the free-convolution semigroup of symmetrized modulus laws.

For a perturbation family whose symmetrized modulus law is the t-fold free
convolution power of a fixed law mu, everything needed on the imaginary
axis reduces to real scalar identities:

    W1 - eps    = t * R(gcal0(W1))            (fixed point, solved here)
    1 / gcal    = W1 + W2 - eps
    S(t,l,eps)  = tau log(|X0-l|^2 + W1^2) + t * I(gcal)
    dS/dt       = 2 * H(gcal) >= 0,   dS/deps = 2 * gcal

with H(y) the integral of Im R(i r) from 0 to y and I(y) = 2H(y) - 2yR(y).
The module also evaluates the first-order PDE satisfied by the radial
Brown-measure distribution function of the semigroup, and the five-way
log-integrability equivalence for a free generating pair.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import freeconv, measures, models, transforms
from .errors import (ConvergenceError, DomainError, MonotonicityViolation,
                     Unsupported)
from .measures import PositiveMeasure, SymmetricMeasure
from .models import (ModelSpec, MarchenkoPastur1, RDiagonalRadialX0, ScalarX0,
                     SelfAdjointX0, Semicircle, SymCauchy, SymFreeStable,
                     X0Spec, Xmk)
from .transforms import GeneratingPair

_RES_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class SemigroupState:
    """Imaginary-axis subordination state of the semigroup at (t, lambda, eps)."""

    t: float
    lam: complex
    eps: float
    W1: float
    W2: float
    Gval: float
    S_value: float
    r_of_g: float    # t * R(Gval), stored for the invariant check

    def __post_init__(self):
        if abs(self.W1 - self.eps - self.r_of_g) > _RES_TOL * (1.0 + self.W1):
            raise ConvergenceError("fixed-point identity violated")
        if abs(1.0 / self.Gval - (self.W1 + self.W2 - self.eps)) \
                > _RES_TOL * (1.0 + 1.0 / self.Gval):
            raise ConvergenceError("resolvent-sum identity violated")


@dataclasses.dataclass(frozen=True)
class HamiltonianTable:
    """H and I sampled on a y-grid; H nondecreasing with H(0) = I(0) = 0."""

    y: np.ndarray
    H: np.ndarray
    I: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.H) < -1e-12):
            raise DomainError("H must be nondecreasing")


def _stable_params(model: ModelSpec):
    if isinstance(model, Semicircle):
        return 0, model.t
    if isinstance(model, SymCauchy):
        return 1, model.t
    if isinstance(model, SymFreeStable):
        return model.k, model.t
    if isinstance(model, MarchenkoPastur1):
        return 0, 1.0
    if isinstance(model, Xmk) and model.m == 1:
        return model.k, 1.0
    raise Unsupported(f"no closed-form Hamiltonian for {model!r}")


def hamiltonian(model: ModelSpec, y: float):
    """(H(y), I(y)) for a catalog model, in closed form.

    Im R(i r) = t r^((1-k)/(k+1)) integrates to H = t(k+1)/2 * y^(2/(k+1)),
    hence I = 2H - 2yR = t(k-1) y^(2/(k+1)); k = 0 is the semicircle case
    and k = 1 the constant Cauchy case.
    """
    if y < 0:
        raise DomainError("y must be nonnegative")
    k, t = _stable_params(model)
    p = 2.0 / (k + 1)
    H = 0.5 * t * (k + 1) * y ** p
    I = t * (k - 1.0) * y ** p
    return H, I


def hamiltonian_table(model: ModelSpec, y_grid) -> HamiltonianTable:
    ys = np.asarray(y_grid, dtype=float)
    vals = np.array([hamiltonian(model, y) for y in ys])
    return HamiltonianTable(y=ys, H=vals[:, 0], I=vals[:, 1])


# ---------------------------------------------------------------------------
# resolvent data of the unperturbed part
# ---------------------------------------------------------------------------

class _PreparedX0:
    """gcal0(W) and tau log(|X0 - lam|^2 + W^2) for a fixed (X0, lam)."""

    def __init__(self, x0: X0Spec, lam):
        lam = complex(lam)
        self.lam = lam
        if isinstance(x0, ScalarX0):
            d = abs(x0.c - lam) ** 2

            self.g0 = lambda W: W / (W * W + d)
            self.trace_log = lambda W: math.log(d + W * W)
        elif isinstance(x0, SelfAdjointX0):
            shifted = measures.abs_sq_pushforward(x0.law, lam)

            self.g0 = lambda W: float(transforms.g_imag_modulus(shifted, W))
            self.trace_log = lambda W: _log_affine(shifted, W * W)
        elif isinstance(x0, RDiagonalRadialX0):
            sym = measures.symmetrize(x0.modulus)
            if lam == 0:
                mod_sq = measures.square_pushforward(x0.modulus)
                self.g0 = lambda W: float(transforms.g_imag_modulus(mod_sq, W))
                self.trace_log = lambda W: _log_affine(mod_sq, W * W)
            else:
                bern = measures.symmetric_point(abs(lam))

                def g0(W):
                    _, _, G = freeconv.subordinate_imag_symmetric(bern, sym, W)
                    return G

                from . import rdiag as _rdiag

                def trace_log(W):
                    return 2.0 * _rdiag.log_potential_decomposition(bern, sym, W).total

                self.g0 = g0
                self.trace_log = trace_log
        else:
            raise DomainError(f"unsupported initial condition {x0!r}")


def _log_affine(mu: PositiveMeasure, c):
    # integral of log(t + c) d mu(t) on [0, inf)
    total = mu.atom0 * math.log(c) if mu.atom0 > 0 else 0.0
    locs = np.concatenate((mu.atom_x, mu.x))
    mass = np.concatenate((mu.atom_m, mu.node_mass))
    if locs.size:
        total += float(mass @ np.log(locs + c))
    return total


# ---------------------------------------------------------------------------
# fixed point and potential
# ---------------------------------------------------------------------------

def solve_W1(x0: X0Spec, lam, model: ModelSpec, t, eps) -> SemigroupState:
    """Solve W = eps + t R(gcal0(W)) and assemble the semigroup state.

    The bracket [eps, hi] is expanded upward until the residual changes
    sign (the naive upper bound eps + t R(gcal0(eps)) can fail when gcal0
    is not yet decreasing at small heights), then bisected.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if t < 0:
        raise DomainError("t must be nonnegative")
    bundle = models.model_transforms(model)
    if bundle.r_imag is None:
        raise Unsupported(f"model {model!r} has no imaginary-axis R-transform")
    prep = _PreparedX0(x0, lam)

    def rfun(g):
        return float(bundle.r_imag(g))

    if t == 0.0:
        W1 = float(eps)
    else:
        def resid(W):
            return W - eps - t * rfun(prep.g0(W))

        lo, hi = float(eps), float(eps)
        r_hi = resid(hi)
        for _ in range(300):
            if r_hi >= 0:
                break
            lo = hi
            hi = 2.0 * hi if hi > 0 else 1.0
            r_hi = resid(hi)
        else:
            raise ConvergenceError("no upper bracket for the W fixed point")
        W1 = hi if r_hi == 0.0 else _bisect(resid, lo, hi)
    Gval = prep.g0(W1)
    W2 = 1.0 / Gval + eps - W1
    _, I_val = hamiltonian(model, Gval)
    S = prep.trace_log(W1) + t * I_val
    return SemigroupState(t=float(t), lam=complex(lam), eps=float(eps),
                          W1=float(W1), W2=float(W2), Gval=float(Gval),
                          S_value=float(S), r_of_g=(t * rfun(Gval) if t > 0 else 0.0))


def _bisect(fn, lo, hi, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-15 * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)


def potential_S(x0: X0Spec, lam, model: ModelSpec, t, eps) -> float:
    """Regularized log-potential tau log(|X_t - lam|^2 + eps^2)."""
    return solve_W1(x0, lam, model, t, eps).S_value


def potential_S_zero_eps(x0: X0Spec, lam, model: ModelSpec, t):
    """eps -> 0 limit of the potential, by linear extrapolation in eps.

    Solves at eps = 1e-4 .. 1e-8 and fits an affine trend.  When the
    extrapolated W1(0) is positive, the zero-height fixed-point identity
    W = t R(gcal0(W)) is verified and its residual returned.
    """
    eps_vals = np.array([10.0 ** (-k) for k in range(4, 9)])
    states = [solve_W1(x0, lam, model, t, e) for e in eps_vals]
    S_vals = np.array([s.S_value for s in states])
    W_vals = np.array([s.W1 for s in states])
    A = np.stack([np.ones_like(eps_vals), eps_vals], axis=1)
    S0 = float(np.linalg.lstsq(A, S_vals, rcond=None)[0][0])
    W0 = float(np.linalg.lstsq(A, W_vals, rcond=None)[0][0])
    resid = 0.0
    if W0 > 1e-9 and t > 0:
        bundle = models.model_transforms(model)
        prep = _PreparedX0(x0, lam)
        resid = abs(W0 - t * float(bundle.r_imag(prep.g0(W0))))
    return S0, W0, resid


@dataclasses.dataclass(frozen=True)
class HJResidual:
    finite_difference: float
    exact_gradient: float
    h: float


def hj_residual(x0: X0Spec, lam, model: ModelSpec, t, eps, h=None) -> HJResidual:
    """Residual of dS/dt = 2 H(dS/deps / 2) by central differences.

    ``exact_gradient`` replaces the eps-derivative by its identity value
    2*gcal, isolating the time-derivative discretization error.
    """
    if h is None:
        h = 1e-3 * max(t, eps)
    ht = min(h, 0.5 * t) if t > 0 else h
    he = min(h, 0.5 * eps)
    dSdt = (potential_S(x0, lam, model, t + ht, eps)
            - potential_S(x0, lam, model, t - ht, eps)) / (2.0 * ht)
    dSde = (potential_S(x0, lam, model, t, eps + he)
            - potential_S(x0, lam, model, t, eps - he)) / (2.0 * he)
    state = solve_W1(x0, lam, model, t, eps)
    H_fd, _ = hamiltonian(model, dSde / 2.0)
    H_ex, _ = hamiltonian(model, state.Gval)
    return HJResidual(finite_difference=abs(dSdt - 2.0 * H_fd),
                      exact_gradient=abs(dSdt - 2.0 * H_ex), h=h)


def det_monotonicity_scan(x0: X0Spec, lam, model: ModelSpec, t_grid, eps):
    """S along an increasing t-grid, plus dS/dt = 2 H(gcal) at each t.

    Raises MonotonicityViolation on any decrease beyond 1e-10 slack, which
    would signal a solver bug rather than genuine dynamics.
    """
    ts = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(ts) <= 0):
        raise DomainError("t grid must be increasing")
    S_vals, dS_vals = [], []
    for t in ts:
        state = solve_W1(x0, lam, model, float(t), eps)
        S_vals.append(state.S_value)
        dS_vals.append(2.0 * hamiltonian(model, state.Gval)[0])
    S_vals = np.asarray(S_vals)
    dS_vals = np.asarray(dS_vals)
    drops = np.diff(S_vals)
    bad = drops < -1e-10 * (1.0 + np.abs(S_vals[:-1]))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise MonotonicityViolation(
            f"S decreased by {-drops[i]} between t={ts[i]} and t={ts[i + 1]}")
    return S_vals, dS_vals


# ---------------------------------------------------------------------------
# radial-CDF PDE of the semigroup
# ---------------------------------------------------------------------------

def theta_t(model: ModelSpec, t, q):
    """theta_t(q) = 1 + t * phihat(q) / q."""
    if q <= 0:
        raise DomainError("q must be positive")
    bundle = models.model_transforms(model)
    if bundle.phi_imag is None:
        raise Unsupported(f"model {model!r} has no closed-form phihat")
    return 1.0 + t * float(bundle.phi_imag(q)) / q


def _radial_F(model, t, r):
    """F(t, r) by inverting the theta parametrization in q."""
    bundle = models.model_transforms(model)
    phih = bundle.phi_imag

    def theta(q):
        return 1.0 + t * float(phih(q)) / q

    def radius(q):
        th = theta(q)
        return q * math.sqrt(max(th * (1.0 - th), 0.0))

    # q0: zero of the increasing theta
    q = 1.0
    for _ in range(400):
        if theta(q) > 0:
            break
        q *= 2.0
    hi0 = q
    lo0 = None
    for _ in range(400):
        q *= 0.5
        if q < 1e-300:
            break
        if theta(q) <= 0:
            lo0 = q
            break
        hi0 = q
    q0 = 0.0 if lo0 is None else _bisect(theta, lo0, hi0)
    lo = max(q0 * (1.0 + 1e-12), 1e-300)
    hi = max(2.0 * q0, 1.0)
    for _ in range(400):
        if radius(hi) >= r:
            break
        hi *= 2.0
    else:
        raise DomainError(f"radius {r} beyond the radial range at t={t}")
    qr = _bisect(lambda qq: radius(qq) - r, lo, hi)
    return theta(qr)


def radial_pde_residual(model: ModelSpec, t, r, *, h_rel=1e-3, scaled=False):
    """Absolute residual of the radial-CDF transport equation.

    Unscaled form:  t F_t + r (2F-1)/(2F) F_r + 1 - F = 0.
    Scaled form (Fhat(t,r) = F(t, t r)):  t Fhat_t - r Fhat_r/(2 Fhat) + 1 - Fhat = 0.
    """
    if t <= 0 or r <= 0:
        raise DomainError("t and r must be positive")
    ht, hr = h_rel * t, h_rel * r
    if scaled:
        def Fh(tt, rr):
            return _radial_F(model, tt, tt * rr)

        F = Fh(t, r)
        Ft = (Fh(t + ht, r) - Fh(t - ht, r)) / (2.0 * ht)
        Fr = (Fh(t, r + hr) - Fh(t, r - hr)) / (2.0 * hr)
        return abs(t * Ft - r * Fr / (2.0 * F) + 1.0 - F)
    F = _radial_F(model, t, r)
    Ft = (_radial_F(model, t + ht, r) - _radial_F(model, t - ht, r)) / (2.0 * ht)
    Fr = (_radial_F(model, t, r + hr) - _radial_F(model, t, r - hr)) / (2.0 * hr)
    return abs(t * Ft + r * (2.0 * F - 1.0) / (2.0 * F) * Fr + 1.0 - F)


# ---------------------------------------------------------------------------
# log-integrability equivalences
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class LogIntegrabilityReport:
    mu_log_moment: float        # int log(1+x^2) d mu
    sigma_log_moment: float     # int log(1+x^2) d sigma
    phi_tail: float             # int_T^inf -Im phi(iy)/y^2 dy
    r_near_zero: float          # int_0^{1/T} Im R(iy) dy
    f_tail: float               # int_T^inf (Im F(iy) - y)/y^2 dy
    all_agree: bool

    @property
    def values(self):
        return (self.mu_log_moment, self.sigma_log_moment, self.phi_tail,
                self.r_near_zero, self.f_tail)


def _log1p_sq(x):
    x = np.abs(np.asarray(x, dtype=float))
    big = x > 1e8
    out = np.empty_like(x)
    out[~big] = np.log1p(x[~big] ** 2)
    out[big] = 2.0 * np.log(x[big])
    return out


def _measure_log_moment(sym: SymmetricMeasure, mass_scale=1.0):
    h = sym.half
    locs = np.concatenate((h.atom_x, h.x))
    mass = np.concatenate((h.atom_m, h.node_mass))
    contribs = mass * _log1p_sq(locs)
    return mass_scale * measures._improper_value(locs, mass, contribs, test_inf=True)


def _double_exp_edges(T):
    edges = [T]
    for j in range(12):
        if 2.0 ** j > 570.0:
            break
        e = T * math.exp(2.0 ** j)
        if e > 1e250:
            break
        edges.append(e)
    return np.asarray(edges)


def _tail_integral(fn, T):
    """int_T^inf fn(y) dy over doubly exponential blocks, with growth test."""
    edges = _double_exp_edges(T)
    u, w = np.polynomial.legendre.leggauss(32)
    blocks = []
    for a, b in zip(edges[:-1], edges[1:]):
        la, lb = math.log(a), math.log(b)
        yv = np.exp(0.5 * (la + lb) + 0.5 * (lb - la) * u)
        blocks.append(float(np.sum(w * fn(yv) * yv) * 0.5 * (lb - la)))
    partial = np.cumsum(blocks)
    if partial.size >= 4:
        prev = partial[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(prev > 0, partial[1:] / np.where(prev > 0, prev, 1.0),
                              math.inf)
        if np.all(ratios[-3:] >= 1.01):
            return math.inf
    return float(partial[-1])


def _f_from_pair(pair, y):
    """f(y) = Im F(i y) from the pair: the root v >= y of v + phihat(v) = y."""
    def lhs(v):
        return v + float(transforms.phi_hat_from_pair(pair, v))

    lo = y
    hi = max(2.0 * y, 1.0)
    for _ in range(400):
        if lhs(hi) >= y:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("F inversion from the pair failed")
    if lhs(lo) >= y:
        return lo
    return _bisect(lambda v: lhs(v) - y, lo, hi)


def log_integrability_report(pair: GeneratingPair, mu=None, T=1.0):
    """Five equivalent log-integrability diagnostics and their agreement flag.

    ``mu`` may be the symmetric law itself, a catalog model (whose pair is
    then ignored in favor of the materialized law for diagnostic 1), or
    None, in which case diagnostic 1 is evaluated through the reciprocal
    Cauchy transform reconstructed from the pair.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    if isinstance(mu, ModelSpec):
        mu = models.model_transforms(mu).mu_symm
    if isinstance(mu, SymmetricMeasure):
        mu_val = _measure_log_moment(mu)
    else:
        mu_val = 2.0 * _tail_integral(
            lambda ys: np.array([1.0 / y - 1.0 / _f_from_pair(pair, y) for y in ys]),
            max(T, 1.0))
    if pair.sigma_mass > 0:
        sigma_val = _measure_log_moment(pair.sigma, pair.sigma_mass)
    else:
        sigma_val = 0.0
    phihat = lambda ys: np.asarray(transforms.phi_hat_from_pair(pair, ys))
    phi_val = _tail_integral(lambda ys: -phihat(ys) * (1.0 / ys) ** 2, T)
    # R near zero, evaluated in its own variable on blocks shrinking to 0
    edges = _double_exp_edges(T)
    u, w = np.polynomial.legendre.leggauss(32)
    blocks = []
    for a, b in zip(edges[:-1], edges[1:]):
        la, lb = math.log(a), math.log(b)
        vv = np.exp(0.5 * (la + lb) + 0.5 * (lb - la) * u)
        r_vals = -phihat(vv)     # Im R at i/v equals -phihat(v)
        blocks.append(float(np.sum(w * r_vals / vv) * 0.5 * (lb - la)))
    partial = np.cumsum(blocks)
    if partial.size >= 4:
        prev = partial[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(prev > 0, partial[1:] / np.where(prev > 0, prev, 1.0),
                              math.inf)
        r_val = math.inf if np.all(ratios[-3:] >= 1.01) else float(partial[-1])
    else:
        r_val = float(partial[-1])
    f_val = _tail_integral(
        lambda ys: np.array([(_f_from_pair(pair, y) - y) * (1.0 / y) ** 2
                             for y in ys]), T)
    flags = [math.isinf(v) for v in (mu_val, sigma_val, phi_val, r_val, f_val)]
    return LogIntegrabilityReport(mu_val, sigma_val, phi_val, r_val, f_val,
                                  all(flags) or not any(flags))
