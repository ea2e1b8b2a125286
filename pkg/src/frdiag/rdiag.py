"""Brown measures of R-diagonal elements.

The radial distribution function is computed by two independent routes:

* from the modulus-squared law, by inverting its strictly decreasing
  S-transform (F(r) = 1 + S^{-1}(r^{-2}) inside the support annulus), and
* for freely infinitely divisible elements, from the Voiculescu transform
  of the symmetrized modulus law through the increasing parametrization
  theta(q) = 1 + phihat(q)/q with radius r(q)^2 = q^2 theta (1 - theta).

Their agreement on a common radial grid is the main cross-validation of
the toolkit.  The module also classifies points of the complex plane into
the support/degeneracy regions of an additively perturbed element, and
evaluates the subordination decomposition of the regularized log-potential.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import freeconv, measures, models, transforms
from ._solvers import bisect_root
from .errors import DegenerateMeasure, DomainError, ScalarOperand
from .measures import PositiveMeasure, SymmetricMeasure
from .models import (ModelSpec, RDiagonalRadialX0, ScalarX0, SelfAdjointX0,
                     X0Spec, Xmk)
from .transforms import GeneratingPair

_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class RadialCDF:
    """Radial distribution function of a rotationally invariant Brown measure."""

    radii: np.ndarray
    mass: np.ndarray
    inner_radius: float
    outer_radius: float
    atom0: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        F = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "mass", F)
        if np.any(np.diff(r) < 0) or np.any(np.diff(F) < -1e-12):
            raise DomainError("radial CDF must be nondecreasing")
        below = r < self.inner_radius - _TOL
        if np.any(np.abs(F[below] - self.atom0) > 1e-9):
            raise DomainError("mass below the inner radius must equal the atom")
        if math.isfinite(self.outer_radius):
            above = r > self.outer_radius + _TOL
            if np.any(np.abs(F[above] - 1.0) > 1e-9):
                raise DomainError("mass beyond the outer radius must be 1")

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("r,F\n")
            for r, F in zip(self.radii, self.mass):
                fh.write(f"{r:.17g},{F:.17g}\n")


class RegionLabel(enum.Enum):
    S = "S"
    F1 = "F1"
    F2 = "F2"
    OMEGA = "Omega"


# ---------------------------------------------------------------------------
# route 1: S-transform inversion
# ---------------------------------------------------------------------------

def support_annulus(mu_sq: PositiveMeasure):
    """(inner, outer) support radii from the +-1st moments of mu_{|X|^2}."""
    if mu_sq.is_point_mass():
        raise DegenerateMeasure("support annulus needs a non-Dirac modulus law")
    m_neg = measures.moment_p(mu_sq, -1.0)
    m_pos = measures.moment_p(mu_sq, 1.0)
    inner = 0.0 if math.isinf(m_neg) else m_neg ** -0.5
    outer = math.inf if math.isinf(m_pos) else math.sqrt(m_pos)
    return inner, outer


def radial_cdf_from_S(mu_sq: PositiveMeasure, r_grid) -> RadialCDF:
    """Radial CDF through the S-transform of the modulus-squared law.

    Interior radii solve S(u) = r^-2 for u in (mu({0})-1, 0); the solve runs
    in the psi-parametrization (one quadrature per iteration) and is
    vectorized over the grid.
    """
    if mu_sq.is_point_mass():
        raise DegenerateMeasure("radial CDF needs a non-Dirac modulus law")
    r = np.asarray(r_grid, dtype=float)
    inner, outer = support_annulus(mu_sq)
    F = np.empty_like(r)
    F[r <= inner + _TOL] = mu_sq.atom0
    if math.isfinite(outer):
        F[r >= outer - _TOL] = 1.0
    interior = (r > inner + _TOL) & (r < outer - _TOL)
    if np.any(interior):
        targets = r[interior] ** -2.0

        def s_along_psi(zeta):
            z = -np.exp(zeta)
            psi = transforms.psi_transform(mu_sq, z)
            return z * (1.0 + psi) / psi

        # bisect a coarse subset, then Newton-polish the full monotone family
        # from interpolated seeds (S is increasing in zeta = log(-z))
        coarse = np.unique(np.linspace(0, targets.size - 1,
                                       min(24, targets.size)).astype(int))
        tc = targets[coarse]
        base = math.log(transforms._typical_scale(mu_sq))
        lo = np.full(tc.shape, base)
        hi = np.full(tc.shape, base)
        for _ in range(40):
            mask = s_along_psi(lo) >= tc
            if not mask.any():
                break
            lo = np.where(mask, lo - 40.0, lo)
        for _ in range(40):
            mask = s_along_psi(hi) <= tc
            if not mask.any():
                break
            hi = np.where(mask, hi + 40.0, hi)
        zc = _bisect_arrays(lambda t: s_along_psi(t) - tc, lo, hi, iters=60)
        order = np.argsort(tc)
        zeta = np.interp(np.log(targets), np.log(tc[order]), zc[order])
        ts_, ws_ = transforms._weighted_support(mu_sq)
        for _ in range(6):
            z = -np.exp(zeta)
            q = z[:, None] * ts_
            r1 = 1.0 / (1.0 - q)
            psi = ((q * r1) * ws_).sum(axis=1)
            dpsi = ((q * r1 * r1) * ws_).sum(axis=1)   # d psi / d zeta
            S = z * (1.0 + psi) / psi
            dS = S + z * dpsi * (1.0 / psi - (1.0 + psi) / psi ** 2)
            step = np.clip((S - targets) / dS, -2.0, 2.0)
            zeta = zeta - step
            if np.all(np.abs(step) < 1e-14 * (1.0 + np.abs(zeta))):
                break
        F[interior] = 1.0 + transforms.psi_transform(mu_sq, -np.exp(zeta))
    F = np.maximum.accumulate(np.clip(F, 0.0, 1.0))
    return RadialCDF(radii=r, mass=F, inner_radius=inner, outer_radius=outer,
                     atom0=mu_sq.atom0)


def _bisect_arrays(fn, lo, hi, *, iters=90):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        take = np.sign(fm) == np.sign(flo)
        lo = np.where(take, mid, lo)
        flo = np.where(take, fm, flo)
        hi = np.where(take, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# route 2: theta parametrization
# ---------------------------------------------------------------------------

def _phihat_of(source):
    if isinstance(source, GeneratingPair):
        if source.gamma != 0.0:
            raise DomainError("theta route requires a pair with gamma = 0")
        return lambda q: transforms.phi_hat_from_pair(source, q)
    if callable(source):
        return source
    raise DomainError("need a generating pair or a phihat callable")


def radial_cdf_via_theta(source, r_grid=None, q_grid=None,
                         f_levels=4096) -> RadialCDF:
    """Radial CDF through theta(q) = 1 + phihat(q)/q.

    ``source`` is a generating pair with gamma = 0 or a callable phihat.
    With ``q_grid`` the curve is emitted at those parameters; otherwise the
    strictly increasing theta is inverted at ``f_levels`` mass levels, and
    the resulting monotone curve is resampled (monotone cubic) onto
    ``r_grid`` when one is given.
    """
    phihat = _phihat_of(source)

    def theta(q):
        return 1.0 + phihat(q) / np.asarray(q, dtype=float)

    q0 = _theta_zero(theta)
    if q_grid is not None:
        qs = np.asarray(q_grid, dtype=float)
        th = np.asarray(theta(qs))
        keep = (th > 0.0) & (th < 1.0)
        if not keep.any():
            raise DomainError("theta never lies in (0,1) on the given grid")
        qs, th = qs[keep], th[keep]
    else:
        levels = 1.0 / (1.0 + np.exp(-np.linspace(-14.0, 21.0, f_levels)))
        lo = np.full(levels.shape, max(q0, 1e-300))
        hi = np.full(levels.shape, max(2.0 * q0, 1.0))
        for _ in range(400):
            short = theta(hi) < levels
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise DomainError("theta does not reach the requested levels")
        qs = _bisect_arrays(lambda q: theta(q) - levels, lo, hi, iters=80)
        th = np.asarray(theta(qs))
    rr = qs * np.sqrt(np.maximum(th * (1.0 - th), 0.0))
    order = np.argsort(rr)
    rr, th = rr[order], th[order]
    keep = np.concatenate(([True], np.diff(rr) > 0))
    rr, th = rr[keep], th[keep]

    outer = _outer_radius_from_theta(phihat, q0)
    if r_grid is None:
        return RadialCDF(radii=rr, mass=th, inner_radius=0.0,
                         outer_radius=outer, atom0=0.0)
    r = np.asarray(r_grid, dtype=float)
    interp = PchipInterpolator(rr, th, extrapolate=False)
    F = interp(r)
    F = np.where(r <= rr[0], 0.0 if rr[0] > 1e-12 else th[0], F)
    F = np.where(np.isnan(F) & (r >= rr[-1]), 1.0 if math.isfinite(outer) else th[-1], F)
    F = np.clip(np.nan_to_num(F, nan=0.0), 0.0, 1.0)
    F = np.maximum.accumulate(F)
    return RadialCDF(radii=r, mass=F, inner_radius=0.0, outer_radius=outer,
                     atom0=0.0)


def _theta_zero(theta):
    q = 1.0
    for _ in range(400):
        if theta(q) > 0:
            break
        q *= 2.0
    else:
        raise DomainError("theta never positive")
    hi = q
    lo = None
    for _ in range(400):
        q *= 0.5
        if q < 1e-300:
            return 0.0
        if theta(q) <= 0:
            lo = q
            break
        hi = q
    if lo is None:
        return 0.0
    return bisect_root(theta, lo, hi, rtol=1e-15, max_iter=200)


def _outer_radius_from_theta(phihat, q0):
    # r^2 -> lim q^2 (1 - theta(q)) = lim -q phihat(q), finite exactly when
    # the second modulus moment is; evaluated without 1 - theta cancellation
    qa = max(q0, 1.0) * 1e6
    qb = qa * 1e3
    va = -qa * float(phihat(qa))
    vb = -qb * float(phihat(qb))
    if va <= 0 or vb <= 0:
        return math.inf
    return math.sqrt(vb) if abs(vb / va - 1.0) < 1e-3 else math.inf


# ---------------------------------------------------------------------------
# moment diagnostics
# ---------------------------------------------------------------------------

def _s_values_near_minus_one(S):
    return np.array([S(-1.0 + 2.0 ** (-j)) for j in range(4, 21)])


def fid_m_neg2_check(source):
    """The -2nd modulus moment via the S-transform limit at u = -1.

    Freely infinitely divisible inputs must return +inf; a finite value
    certifies the law is not in the class.  Accepts a materialized
    modulus-squared law, an x_{m,k} or catalog model spec, or a raw
    S-transform callable.
    """
    if isinstance(source, PositiveMeasure):
        if source.atom0 > 0:
            return math.inf
        return transforms.s_limit_at_minus_one(source)
    if isinstance(source, Xmk):
        S = lambda u: models.s_transform_xmk(source.m, source.k, u)
    elif isinstance(source, ModelSpec):
        mu_sq = models.model_transforms(source).mu_sq
        if mu_sq is None:
            raise DomainError(f"no modulus-squared law available for {source!r}")
        return fid_m_neg2_check(mu_sq)
    elif callable(source):
        S = source
    else:
        raise DomainError(f"cannot compute the limit from {type(source)!r}")
    vals = _s_values_near_minus_one(S)
    ratios = vals[1:] / vals[:-1]
    if np.all(ratios[-3:] >= 1.01):
        return math.inf
    return float(2.0 * vals[-1] - vals[-2])


def _second_moment_infinite(y_sq):
    if isinstance(y_sq, PositiveMeasure):
        return math.isinf(measures.moment_p(y_sq, 1.0))
    if isinstance(y_sq, Xmk):
        # mean of the squared law is 1/S(0-); S -> 0 iff k >= 1
        vals = np.array([models.s_transform_xmk(y_sq.m, y_sq.k, -2.0 ** (-j))
                         for j in range(4, 21)])
        return bool(np.all(vals[1:] / vals[:-1] <= 0.99))
    if isinstance(y_sq, ModelSpec):
        mu_sq = models.model_transforms(y_sq).mu_sq
        if mu_sq is None:
            raise DomainError(f"no modulus-squared law available for {y_sq!r}")
        return math.isinf(measures.moment_p(mu_sq, 1.0))
    raise DomainError(f"cannot read a second moment from {type(y_sq)!r}")


def property_H_predicate(kernel_mass, y_sq) -> bool:
    """Whether the perturbation forces strictly positive Brown density.

    True exactly when the kernel is trivial and the second modulus moment
    is infinite.
    """
    if not (0.0 <= kernel_mass <= 1.0):
        raise DomainError("kernel mass must lie in [0, 1]")
    if kernel_mass > _TOL:
        return False
    return _second_moment_infinite(y_sq)


# ---------------------------------------------------------------------------
# support classification for perturbed elements
# ---------------------------------------------------------------------------

def _leq(a, b):
    # a <= b resolved into the closed set with absolute/relative slack
    if math.isinf(b):
        return True
    if math.isinf(a):
        return False
    return a <= b + _TOL * (1.0 + abs(b))


def _limit_or_inf(vals):
    vals = np.asarray(vals, dtype=float)
    ratios = vals[1:] / vals[:-1]
    if np.all(ratios[-3:] >= 1.01):
        return math.inf
    return float(vals[-1])


def _x0_quantities(x0: X0Spec, lam: complex):
    """(kernel mass, m_2, m_-2) of X0 - lam."""
    if isinstance(x0, SelfAdjointX0):
        shifted = measures.abs_sq_pushforward(x0.law, lam)
        return shifted.atom0, measures.moment_p(shifted, 1.0), \
            measures.moment_p(shifted, -1.0)
    if isinstance(x0, RDiagonalRadialX0):
        mod_sq = measures.square_pushforward(x0.modulus)
        m2 = measures.moment_p(mod_sq, 1.0) + abs(lam) ** 2
        if lam == 0:
            kernel = x0.modulus.atom0
            vals = [transforms.g_imag_modulus(mod_sq, 2.0 ** (-j)) * 2.0 ** j
                    for j in range(10, 25)]
            return kernel, m2, _limit_or_inf(vals)
        sym = measures.symmetrize(x0.modulus)
        bern = measures.symmetric_point(abs(lam))
        gvals, yg = [], []
        for j in range(10, 25):
            y = 2.0 ** (-j)
            _, _, G = freeconv.subordinate_imag_symmetric(bern, sym, y)
            gvals.append(G / y)
            yg.append(G * y)
        kernel = float(yg[-1]) if yg[-1] > 1e-9 else 0.0
        return kernel, m2, _limit_or_inf(gvals)
    raise ScalarOperand("X0 must be non-scalar for support classification")


def classify_support_point(x0: X0Spec, y_sq, y_kernel_mass, lam) -> RegionLabel:
    """Label lam as S, F1, F2 or Omega for the sum X0 + Y.

    ``y_sq`` is the modulus-squared law of the R-diagonal perturbation and
    ``y_kernel_mass`` its kernel mass.  Boundary equalities resolve into
    the closed sets S, F1, F2; everything else is the open region Omega
    where the Brown density is strictly positive.
    """
    if isinstance(x0, ScalarX0):
        raise ScalarOperand("X0 must be non-scalar")
    lam = complex(lam)
    if isinstance(y_sq, ModelSpec) and not isinstance(y_sq, Xmk):
        y_sq = models.model_transforms(y_sq).mu_sq
    if isinstance(y_sq, Xmk):
        m2_y = math.inf if _second_moment_infinite(y_sq) else \
            1.0 / models.s_transform_xmk(y_sq.m, y_sq.k, -1e-9)
        mneg_y = fid_m_neg2_check(y_sq)
    else:
        m2_y = measures.moment_p(y_sq, 1.0)
        mneg_y = math.inf if y_sq.atom0 > 0 else measures.moment_p(y_sq, -1.0)
    ker_x0, m2_x0, mneg_x0 = _x0_quantities(x0, lam)
    if _leq(1.0, ker_x0 + y_kernel_mass):
        return RegionLabel.S
    if _leq(m2_y, 0.0 if math.isinf(mneg_x0) else 1.0 / mneg_x0):
        return RegionLabel.F1
    if _leq(m2_x0, 0.0 if math.isinf(mneg_y) else 1.0 / mneg_y):
        return RegionLabel.F2
    return RegionLabel.OMEGA


# ---------------------------------------------------------------------------
# log-potential decomposition
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class LogPotentialSplit:
    term1: float
    term2: float
    term3: float
    total: float
    W1: float
    W2: float


def log_potential_decomposition(mu1: SymmetricMeasure, mu2: SymmetricMeasure,
                                y) -> LogPotentialSplit:
    """Subordination split of the regularized log-potential at height y.

    term1 = tau(log(|X1 - lam|^2 + W1^2))/2 against mu1, term2 likewise for
    the perturbation, term3 = -log(W1 + W2 - y); the sum equals half the
    regularized log-potential of the free sum at height y.
    """
    if y <= 0:
        raise DomainError("y must be positive")
    W1, W2, _ = freeconv.subordinate_imag_symmetric(mu1, mu2, y)
    term1 = 0.5 * measures.log_moment(mu1.half, W1 * W1)
    term2 = 0.5 * measures.log_moment(mu2.half, W2 * W2)
    term3 = -math.log(W1 + W2 - y)
    return LogPotentialSplit(term1=term1, term2=term2, term3=term3,
                             total=term1 + term2 + term3, W1=W1, W2=W2)
