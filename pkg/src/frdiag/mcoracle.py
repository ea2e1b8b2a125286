"""Finite-N random matrix oracle.

Independent Monte Carlo evidence for the analytic machinery: eigenvalue
moduli of Ginibre products and inverse products against the closed-form
radial laws, symmetrized singular values of additive perturbations against
the subordination solver, and the commutator law against the twofold free
convolution of the product modulus law.

Randomness is counter-based (Philox) with the per-trial key derived as
seed XOR trial index, so trials are independent, order-free, and the
merged sample is identical under any parallel schedule.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import freeconv, measures, models
from .errors import DomainError, EmptySample, SingularDraw
from .measures import SymmetricMeasure
from .models import ModelSpec, ScalarX0, SelfAdjointX0, Semicircle, X0Spec, Xmk

_COND_LIMIT = 1e12
_MAX_REDRAWS = 10


@dataclasses.dataclass(frozen=True)
class MCConfig:
    N: int
    trials: int
    seed: int
    model: object = None

    def __post_init__(self):
        if self.N < 2 or self.trials < 1:
            raise DomainError("need N >= 2 and trials >= 1")


@dataclasses.dataclass(frozen=True)
class EmpiricalLaw:
    values: np.ndarray        # sorted ascending
    kind: str                 # "eigen_moduli" or "symmetrized_singular"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.size == 0:
            raise EmptySample("empirical law with no samples")
        if np.any(np.diff(v) < 0):
            raise DomainError("samples must be sorted ascending")


def _rng_for(cfg: MCConfig, trial: int):
    return np.random.Generator(np.random.Philox(key=np.uint64(cfg.seed) ^ np.uint64(trial)))


def _ginibre(rng, N):
    return (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) \
        / math.sqrt(2.0 * N)


def _haar_unitary(rng, N):
    q, r = np.linalg.qr(_ginibre(rng, N))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _run_trials(cfg, worker):
    threads = int(os.environ.get("FRDIAG_THREADS", "1"))
    trials = range(cfg.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(worker, trials))
    else:
        parts = [worker(t) for t in trials]
    return np.sort(np.concatenate(parts))


def _inverse_product_sample(rng, N, m, k):
    for _ in range(_MAX_REDRAWS + 1):
        left = [_ginibre(rng, N) for _ in range(m)]
        right = [_ginibre(rng, N) for _ in range(k)]
        P = left[0]
        for g in left[1:]:
            P = P @ g
        if not right:
            return P
        Q = right[0]
        for g in right[1:]:
            Q = Q @ g
        if np.linalg.cond(Q) <= _COND_LIMIT:
            return np.linalg.solve(Q.T, P.T).T
    raise SingularDraw(f"inverse factor stayed ill-conditioned after {_MAX_REDRAWS} redraws")


def sample_xmk_eigen(cfg: MCConfig) -> EmpiricalLaw:
    """Eigenvalue moduli of m Ginibre factors times k inverse Ginibre factors."""
    spec = cfg.model
    if not isinstance(spec, Xmk):
        raise DomainError("sample_xmk_eigen needs an x_{m,k} model in the config")

    def worker(trial):
        rng = _rng_for(cfg, trial)
        A = _inverse_product_sample(rng, cfg.N, spec.m, spec.k)
        return np.abs(np.linalg.eigvals(A))

    return EmpiricalLaw(values=_run_trials(cfg, worker), kind="eigen_moduli")


def _realize_x0(x0: X0Spec, N):
    if isinstance(x0, ScalarX0):
        return x0.c * np.eye(N)
    if isinstance(x0, SelfAdjointX0):
        law = x0.law
        if law.x.size:
            raise DomainError("only atomic self-adjoint laws are realized at finite N")
        reps = np.round(law.atom_m * N).astype(int)
        reps[-1] = N - reps[:-1].sum()
        diag = np.repeat(law.atom_x, reps)
        return np.diag(diag.astype(complex))
    raise DomainError(f"cannot realize {x0!r} as a matrix")


def _realize_perturbation(spec, rng, N):
    if isinstance(spec, Semicircle):
        return math.sqrt(spec.t) * _ginibre(rng, N)
    if isinstance(spec, Xmk):
        return _inverse_product_sample(rng, N, spec.m, spec.k)
    raise DomainError(f"cannot realize {spec!r} as a matrix")


def _symmetrized_singular(S):
    s = np.sqrt(np.maximum(np.linalg.eigvalsh(S.conj().T @ S).real, 0.0))
    return np.concatenate((-s, s))


def free_add_oracle(a_spec: X0Spec, b_spec: ModelSpec, cfg: MCConfig) -> EmpiricalLaw:
    """Symmetrized singular values of A + U B U* with U Haar distributed."""

    def worker(trial):
        rng = _rng_for(cfg, trial)
        A = _realize_x0(a_spec, cfg.N)
        B = _realize_perturbation(b_spec, rng, cfg.N)
        U = _haar_unitary(rng, cfg.N)
        return _symmetrized_singular(A + U @ B @ U.conj().T)

    return EmpiricalLaw(values=_run_trials(cfg, worker), kind="symmetrized_singular")


@dataclasses.dataclass(frozen=True)
class CommutatorResult:
    law: EmpiricalLaw
    reference: SymmetricMeasure
    ks: float


def commutator_reference(points=2000, eta_rel=2e-3) -> SymmetricMeasure:
    """Twofold free additive convolution of the symmetrized product-modulus law."""
    base = models.xmk_modulus_symmetric(2, 0)
    edge = 2.0 * math.sqrt(models.xmk_right_edge(2))
    grid = np.linspace(-edge - 0.75, edge + 0.75, points)
    meas, _ = freeconv.convolve_density(base, base, grid, eta=eta_rel * 2 * edge)
    return meas


def commutator_oracle(cfg: MCConfig, *, anticommute=False,
                      reference: SymmetricMeasure | None = None) -> CommutatorResult:
    """Symmetrized singular values of g1 g2 -+ g2 g1 against the convolution law."""
    sign = 1.0 if anticommute else -1.0

    def worker(trial):
        rng = _rng_for(cfg, trial)
        g1 = _ginibre(rng, cfg.N)
        g2 = _ginibre(rng, cfg.N)
        return _symmetrized_singular(g1 @ g2 + sign * (g2 @ g1))

    law = EmpiricalLaw(values=_run_trials(cfg, worker), kind="symmetrized_singular")
    ref = commutator_reference() if reference is None else reference
    ks = ks_distance(law, lambda x: measures.cdf(ref, x))
    return CommutatorResult(law=law, reference=ref, ks=ks)


def ks_distance(sample: EmpiricalLaw, reference_cdf, domain=(None, None)) -> float:
    """Sup of |empirical CDF - reference CDF| over the sample points.

    Both CDFs are taken right-continuous, so a constant sample against its
    own point-mass CDF scores 0.  ``domain`` restricts which sample points
    enter the sup (the empirical CDF itself is always that of the full
    sample); heavy-tailed laws are compared on a truncated window this way.
    """
    xs = sample.values
    n = xs.size
    if n == 0:
        raise EmptySample("cannot compute a KS distance without samples")
    mask = np.ones(n, dtype=bool)
    lo, hi = domain
    if lo is not None:
        mask &= xs >= lo
    if hi is not None:
        mask &= xs <= hi
    if not mask.any():
        raise EmptySample("domain restriction removed every sample point")
    pts = xs[mask]
    emp = np.searchsorted(xs, pts, side="right") / n
    ref = np.asarray(reference_cdf(pts), dtype=float)
    return float(np.abs(emp - ref).max())
