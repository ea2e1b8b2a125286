"""Closed-form model catalog.

Symmetrized modulus laws with explicit transforms: the semicircle law, the
symmetric Cauchy law, symmetric free stable laws of index 2/(k+1), the
Marchenko-Pastur law, and the family x_{m,k} built from m circular factors
and k inverse circular factors.  The modulus-squared law of x_{m,k} has

    S(u) = (-u)^k / (1+u)^m,

so psi solves the algebraic equation z = psi (-psi)^k / (1+psi)^(m+1);
densities for m+k <= 4 are materialized by tracking that root down to the
real axis (no smoothing parameter is needed: the equation is polynomial).
"""

from __future__ import annotations

import dataclasses
import math
from functools import lru_cache

import numpy as np

from . import measures, transforms
from .errors import DomainError, ThresholdExceeded, Unsupported
from .measures import PositiveMeasure, RealMeasure, SymmetricMeasure
from .transforms import GeneratingPair


# ---------------------------------------------------------------------------
# model and initial-condition descriptors
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Semicircle:
    t: float = 1.0

    def __post_init__(self):
        if self.t <= 0:
            raise DomainError("variance must be positive")


@dataclasses.dataclass(frozen=True)
class SymCauchy:
    t: float = 1.0

    def __post_init__(self):
        if self.t <= 0:
            raise DomainError("scale must be positive")


@dataclasses.dataclass(frozen=True)
class SymFreeStable:
    k: int
    t: float = 1.0

    def __post_init__(self):
        if self.k < 0 or self.t <= 0:
            raise DomainError("need k >= 0 and t > 0")


@dataclasses.dataclass(frozen=True)
class MarchenkoPastur1:
    pass


@dataclasses.dataclass(frozen=True)
class Xmk:
    m: int
    k: int

    def __post_init__(self):
        if self.m < 1 or self.k < 0:
            raise DomainError("need m >= 1 and k >= 0")


ModelSpec = Semicircle | SymCauchy | SymFreeStable | MarchenkoPastur1 | Xmk


@dataclasses.dataclass(frozen=True)
class ScalarX0:
    c: complex


@dataclasses.dataclass(frozen=True)
class SelfAdjointX0:
    law: RealMeasure


@dataclasses.dataclass(frozen=True)
class RDiagonalRadialX0:
    modulus: PositiveMeasure


X0Spec = ScalarX0 | SelfAdjointX0 | RDiagonalRadialX0


def parse_model(text) -> ModelSpec:
    """Parse the CLI model grammar, e.g. semicircle:t=1 or xmk:m=2,k=1."""
    name, _, args = text.partition(":")
    kv = {}
    if args:
        for item in args.split(","):
            key, _, val = item.partition("=")
            if not val:
                raise DomainError(f"malformed model argument {item!r}")
            kv[key.strip()] = val.strip()
    try:
        if name == "semicircle":
            return Semicircle(t=float(kv.pop("t", 1.0)), **kv)
        if name == "cauchy":
            return SymCauchy(t=float(kv.pop("t", 1.0)), **kv)
        if name == "fstable":
            return SymFreeStable(k=int(kv.pop("k")), t=float(kv.pop("t", 1.0)), **kv)
        if name == "xmk":
            return Xmk(m=int(kv.pop("m")), k=int(kv.pop("k")), **kv)
        if name == "mp1":
            if kv:
                raise DomainError("mp1 takes no arguments")
            return MarchenkoPastur1()
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"cannot parse model {text!r}: {exc}") from exc
    raise DomainError(f"unknown model {name!r}")


def parse_x0(text) -> X0Spec:
    """Parse initial-condition grammar: scalar:<complex> or bernoulli:a=<a>."""
    name, _, args = text.partition(":")
    try:
        if name == "scalar":
            return ScalarX0(complex(args or "0"))
        if name == "bernoulli":
            kv = dict(item.split("=") for item in args.split(",")) if args else {}
            a = float(kv.get("a", 1.0))
            return SelfAdjointX0(measures.real_from_atoms([(-a, 0.5), (a, 0.5)]))
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError(f"cannot parse x0 {text!r}: {exc}") from exc
    raise DomainError(f"unknown x0 kind {name!r}")


# ---------------------------------------------------------------------------
# catalog measures
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def semicircle_symmetric(t=1.0) -> SymmetricMeasure:
    r = 2.0 * math.sqrt(t)
    return measures.symmetric_from_density(
        lambda x: np.sqrt(np.maximum(r * r - x * x, 0.0)) / (2.0 * np.pi * t), r,
        max_panel_width=r / 16.0)


@lru_cache(maxsize=32)
def cauchy_symmetric(t=1.0) -> SymmetricMeasure:
    return measures.symmetric_from_density(
        lambda x: t / (np.pi * (t * t + x * x)), math.inf, scale=t)


@lru_cache(maxsize=32)
def marchenko_pastur_one() -> PositiveMeasure:
    return measures.from_density(
        lambda x: np.sqrt((4.0 - x) / x) / (2.0 * np.pi), 0.0, 4.0)


@lru_cache(maxsize=32)
def semicircle_sq(t=1.0) -> PositiveMeasure:
    # law of |Y|^2 when the symmetrized modulus law of Y is semicircle(t)
    return measures.from_density(
        lambda x: np.sqrt((4.0 * t - x) / x) / (2.0 * np.pi * t), 0.0, 4.0 * t)


@lru_cache(maxsize=32)
def cauchy_sq(t=1.0) -> PositiveMeasure:
    # |Y| is half-Cauchy(t); the squared law has density t/(pi sqrt(x)(t^2+x))
    return measures.from_density(
        lambda x: t / (np.pi * np.sqrt(x) * (t * t + x)), 0.0, math.inf,
        scale=t * t)


@lru_cache(maxsize=4)
def arcsine_symmetric() -> SymmetricMeasure:
    # exact node construction through x = 2 sin(theta)
    th, wt = np.polynomial.legendre.leggauss(512)
    th = (th + 1.0) * (np.pi / 4.0)
    wt = wt * (np.pi / 4.0)
    x = 2.0 * np.sin(th)
    order = np.argsort(x)
    x, wt = x[order], wt[order]
    half = PositiveMeasure(x=x, f=2.0 / (np.pi * np.sqrt(4.0 - x * x)),
                           w=wt * np.sqrt(4.0 - x * x))
    return SymmetricMeasure(half=half)


@lru_cache(maxsize=4)
def _standard_cauchy_sigma() -> SymmetricMeasure:
    return SymmetricMeasure(measures.from_density(
        lambda s: 2.0 / (np.pi * (1.0 + s * s)), 0.0, math.inf, scale=1.0))


def semicircle_pair(t=1.0) -> GeneratingPair:
    return GeneratingPair(0.0, measures.symmetric_point(0.0), t)


def cauchy_pair(t=1.0) -> GeneratingPair:
    return GeneratingPair(0.0, _standard_cauchy_sigma(), t)


# ---------------------------------------------------------------------------
# x_{m,k}: closed forms
# ---------------------------------------------------------------------------

def s_transform_xmk(m, k, u):
    """S-transform of the modulus-squared law: (-u)^k / (1+u)^m on (-1, 0)."""
    _check_mk(m, k)
    if not (-1.0 < u < 0.0):
        raise DomainError(f"u={u} outside (-1, 0)")
    return (-u) ** k / (1.0 + u) ** m


def radial_cdf_xmk(m, k, r):
    """Radial Brown-measure CDF: the root F of r^2 = F^m / (1-F)^k."""
    _check_mk(m, k)
    if r <= 0:
        raise DomainError("r must be positive")
    if k == 0:
        return min(r ** (2.0 / m), 1.0)
    lo, hi = 0.0, 1.0

    def g(F):
        return m * math.log(F) - k * math.log1p(-F) - 2.0 * math.log(r)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def w_of_s(m, k, s):
    """The root w in (0,1) of s^2 = w^(k+1) / (1-w)^(m+1)."""
    _check_mk(m, k)
    if s <= 0:
        raise DomainError("s must be positive")
    lo, hi = 0.0, 1.0

    def g(w):
        return (k + 1) * math.log(w) - (m + 1) * math.log1p(-w) - 2.0 * math.log(s)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lp_moment_xmk(m, k, p):
    """tau(|x_{m,k}|^p) for 0 < p < 2/(k+1), via beta-function evaluation."""
    _check_mk(m, k)
    if k < 1:
        raise DomainError("the moment formula needs k >= 1")
    if not (0.0 < p < 2.0 / (k + 1)):
        raise ThresholdExceeded(f"p={p} outside (0, {2.0 / (k + 1)})")

    def beta(a, b):
        return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))

    kp = (k + 1) * p / 2.0
    mp = (m + 1) * p / 2.0
    integral = 0.5 * (k + 1) * beta(1.0 - kp, 1.0 + mp) \
        + 0.5 * (m + 1) * beta(2.0 - kp, mp)
    return (2.0 / math.pi) * math.sin(math.pi * p / 2.0) * integral


def _check_mk(m, k):
    if m < 1 or k < 0:
        raise DomainError("need m >= 1 and k >= 0")


# ---------------------------------------------------------------------------
# x_{m,k}: density materialization
# ---------------------------------------------------------------------------

def xmk_psi_at(m, k, w):
    """psi of the modulus-squared law of x_{m,k}, evaluated at z = 1/w.

    ``w`` is an array of points with Im w >= 0 (the real axis is allowed).
    The algebraic branch is selected by continuation from high up the
    imaginary axis, where psi is given by its small-z asymptotics, and
    tracked down a vertical path by Newton steps.
    """
    w = np.asarray(w, dtype=complex)
    scale = np.abs(w) + 1.0
    Y = 1e4 * scale                       # per-point ladder top
    h_target = np.maximum(w.imag, 0.0)
    h_floor = np.maximum(h_target, 1e-12 * scale)
    psi = _xmk_psi_seed(m, k, 1.0 / (w.real + 1j * Y))
    n_steps = 120
    for s in np.arange(1, n_steps + 1) / n_steps:
        h = Y * (h_floor / Y) ** s
        psi = _xmk_newton(m, k, 1.0 / (w.real + 1j * h), psi)
    # land exactly on the requested points (the real axis is fine: the
    # tracked root stays complex in the bulk of the support)
    psi = _xmk_newton(m, k, 1.0 / (w.real + 1j * h_target), psi)
    return psi


def _xmk_psi_seed(m, k, z):
    if k == 0:
        return np.asarray(z, dtype=complex)
    return -((-np.asarray(z, dtype=complex)) ** (1.0 / (k + 1)))


def _xmk_newton(m, k, z, psi0, iters=40, tol=1e-14):
    sign = (-1.0) ** k
    psi = np.asarray(psi0, dtype=complex).copy()
    for _ in range(iters):
        P = sign * psi ** (k + 1) - z * (1.0 + psi) ** (m + 1)
        dP = sign * (k + 1) * psi ** k - z * (m + 1) * (1.0 + psi) ** m
        step = P / dP
        psi = psi - step
        if np.all(np.abs(step) <= tol * (1.0 + np.abs(psi))):
            break
    return psi


def xmk_density(m, k, x):
    """Density of the modulus-squared law of x_{m,k} on the positive axis."""
    x = np.asarray(x, dtype=float)
    psi = xmk_psi_at(m, k, x + 0.0j)
    rho = -np.imag(psi) / (np.pi * x)
    return np.maximum(rho, 0.0)


def xmk_right_edge(m):
    # right support edge of the m-fold multiplicative power of the MP law
    return (m + 1.0) ** (m + 1) / float(m) ** m


@lru_cache(maxsize=16)
def xmk_mu_sq(m, k) -> PositiveMeasure:
    """Materialized modulus-squared law of x_{m,k}; supported for m+k <= 4."""
    _check_mk(m, k)
    if m + k > 4:
        raise Unsupported("densities are materialized only for m + k <= 4")
    if (m, k) == (1, 0):
        return marchenko_pastur_one()
    pdf = lambda x: xmk_density(m, k, x)
    if k == 0:
        return measures.from_density(pdf, 0.0, xmk_right_edge(m),
                                     max_panel_width=xmk_right_edge(m) / 16.0)
    return measures.from_density(pdf, 0.0, math.inf)


def xmk_modulus_symmetric(m, k) -> SymmetricMeasure:
    """Symmetrized modulus law of x_{m,k} from the materialized squared law."""
    return measures.symmetrize(measures.sqrt_pushforward(xmk_mu_sq(m, k)))


# ---------------------------------------------------------------------------
# transform bundles
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class TransformBundle:
    """Imaginary-axis transforms and materialized laws for one model."""

    spec: object
    phi_imag: object            # v -> phihat(v), or None
    r_imag: object              # y -> Im R(i y)
    pair: GeneratingPair | None
    mu_sq: PositiveMeasure | None
    mu_symm: SymmetricMeasure | None


def _stable_phi(k, t):
    ex = (k - 1.0) / (k + 1.0)
    return lambda v: -t * np.asarray(v, dtype=float) ** ex


def _stable_r(k, t):
    ex = (1.0 - k) / (k + 1.0)
    return lambda y: t * np.asarray(y, dtype=float) ** ex


@lru_cache(maxsize=64)
def model_transforms(spec: ModelSpec) -> TransformBundle:
    """Closed-form transform bundle for a catalog model."""
    if isinstance(spec, Semicircle):
        t = spec.t
        return TransformBundle(spec, _stable_phi(0, t), _stable_r(0, t),
                               semicircle_pair(t), semicircle_sq(t),
                               semicircle_symmetric(t))
    if isinstance(spec, SymCauchy):
        t = spec.t
        return TransformBundle(spec, _stable_phi(1, t), _stable_r(1, t),
                               cauchy_pair(t), cauchy_sq(t), cauchy_symmetric(t))
    if isinstance(spec, SymFreeStable):
        k, t = spec.k, spec.t
        pair = semicircle_pair(t) if k == 0 else (cauchy_pair(t) if k == 1 else None)
        mu_sq = semicircle_sq(t) if k == 0 else (cauchy_sq(t) if k == 1 else None)
        mu_symm = semicircle_symmetric(t) if k == 0 else \
            (cauchy_symmetric(t) if k == 1 else None)
        return TransformBundle(spec, _stable_phi(k, t), _stable_r(k, t),
                               pair, mu_sq, mu_symm)
    if isinstance(spec, MarchenkoPastur1):
        return TransformBundle(spec, _stable_phi(0, 1.0), _stable_r(0, 1.0),
                               semicircle_pair(1.0), marchenko_pastur_one(),
                               semicircle_symmetric(1.0))
    if isinstance(spec, Xmk):
        m, k = spec.m, spec.k
        phi = _stable_phi(k, 1.0) if m == 1 else None
        r = _stable_r(k, 1.0) if m == 1 else None
        pair = None
        if m == 1 and k == 0:
            pair = semicircle_pair(1.0)
        elif m == 1 and k == 1:
            pair = cauchy_pair(1.0)
        mu_sq = xmk_mu_sq(m, k) if m + k <= 4 else None
        mu_symm = xmk_modulus_symmetric(m, k) if m + k <= 4 else None
        return TransformBundle(spec, phi, r, pair, mu_sq, mu_symm)
    raise Unsupported(f"no transform bundle for {spec!r}")
