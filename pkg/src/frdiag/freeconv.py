"""Free additive convolution via subordination.

The subordination pair (omega1, omega2) for mu1 [+] mu2 is computed by
damped Picard iteration of the upper-half-plane self-map

    w  ->  h2(h1(w) + z) + z,        h_j(w) = F_j(w) - w,

whose fixed point is omega1(z).  On the imaginary axis everything is purely
imaginary for symmetric laws, and the specialization reduces to a real
scalar equation solved by bracketed bisection.  Densities are recovered by
Stieltjes inversion with two-point Richardson extrapolation in the
regularization height.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import measures, transforms
from ._solvers import bisect_root
from .errors import ConvergenceError, DegenerateMeasure, DomainError, MassDefect
from .measures import PositiveMeasure, SymmetricMeasure

_STEP_TOL = 1e-12
_RESIDUAL_TOL = 1e-9
_MAX_ITER = 100_000


@dataclasses.dataclass(frozen=True)
class SubordinationPoint:
    """Subordination data at one point z of the upper half-plane."""

    z: complex
    omega1: complex
    omega2: complex
    F_value: complex
    residual_F: float
    residual_sum: float
    iterations: int = 0

    def __post_init__(self):
        if self.omega1.imag <= 0 or self.omega2.imag <= 0:
            raise ConvergenceError("subordination point left the upper half-plane")
        if self.residual_F > _RESIDUAL_TOL * (1.0 + abs(self.F_value)):
            raise ConvergenceError(f"F-residual {self.residual_F} too large")
        if self.residual_sum > _RESIDUAL_TOL * (1.0 + abs(self.z)):
            raise ConvergenceError(f"sum-residual {self.residual_sum} too large")


def _F_of(mu):
    def F(w):
        return transforms.transform_GF(mu, w)[1]
    return F


def _subordinate_array(mu1, mu2, zs, *, w0=None, step_tol=_STEP_TOL,
                       max_iter=_MAX_ITER):
    """Vectorized Picard iteration; returns (omega1, omega2, F, iterations)."""
    F1, F2 = _F_of(mu1), _F_of(mu2)
    zs = np.asarray(zs, dtype=complex)
    w = zs.copy() if w0 is None else np.asarray(w0, dtype=complex).copy()
    active = np.ones(zs.shape, dtype=bool)
    damping = np.ones(zs.shape)
    last_step = np.full(zs.shape, np.inf)
    stall = np.zeros(zs.shape, dtype=int)
    iters = np.zeros(zs.shape, dtype=int)
    for _ in range(max_iter):
        if not np.any(active):
            break
        wa = w[active]
        za = zs[active]
        u1 = F1(wa) - wa + za          # h1(w) + z
        t = F2(u1) - u1 + za           # h2(h1(w)+z) + z
        beta = damping[active]
        w_new = beta * t + (1.0 - beta) * wa
        step = np.abs(w_new - wa)
        # oscillation guard: halve the damping after 50 non-improving steps
        improved = step < last_step[active]
        stall_a = np.where(improved, 0, stall[active] + 1)
        need_damp = (stall_a >= 50) & (beta > 0.49)
        damping[active] = np.where(need_damp, 0.5, beta)
        stall[active] = np.where(need_damp, 0, stall_a)
        last_step[active] = step
        w[active] = w_new
        iters[active] += 1
        done = step <= step_tol * (1.0 + np.abs(w_new))
        sub = active.copy()
        sub[active] = ~done
        active = sub
    if np.any(active):
        raise ConvergenceError(
            f"subordination did not converge at {int(active.sum())} points")
    omega1 = w
    omega2 = F1(omega1) - omega1 + zs
    Fv = F1(omega1)
    return omega1, omega2, Fv, iters


def _check_not_point_mass(mu, who):
    if hasattr(mu, "is_point_mass") and mu.is_point_mass():
        raise DegenerateMeasure(
            f"{who} is a point mass; convolve by translating instead")


def subordinate(mu1, mu2, z, *, step_tol=_STEP_TOL, max_iter=_MAX_ITER):
    """Subordination point of mu1 [+] mu2 at a single z with Im z > 0."""
    if complex(z).imag <= 0:
        raise DomainError("z must lie in the open upper half-plane")
    _check_not_point_mass(mu1, "mu1")
    _check_not_point_mass(mu2, "mu2")
    o1, o2, Fv, iters = _subordinate_array(
        mu1, mu2, np.asarray([complex(z)]), step_tol=step_tol, max_iter=max_iter)
    F2v = transforms.transform_GF(mu2, complex(o2[0]))[1]
    res_F = abs(complex(Fv[0]) - F2v)
    res_sum = abs(complex(Fv[0]) + complex(z) - complex(o1[0]) - complex(o2[0]))
    return SubordinationPoint(
        z=complex(z), omega1=complex(o1[0]), omega2=complex(o2[0]),
        F_value=complex(Fv[0]), residual_F=res_F, residual_sum=res_sum,
        iterations=int(iters[0]))


def subordinate_imag_symmetric(mu1: SymmetricMeasure, mu2: SymmetricMeasure, eps):
    """Imaginary-axis subordination for symmetric laws.

    Returns (W1, W2, Gval) with F1(i W1) = F2(i W2) = F(i eps) and
    1/Gval = W1 + W2 - eps.  Solved as a real scalar root problem in W1,
    using f_j(y) = Im F_j(i y) and the exact relation
    W2 = f1(W1) - W1 + eps.  Point masses at 0 short-circuit exactly.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if mu1.is_point_mass() and mu2.is_point_mass():
        raise DegenerateMeasure("both inputs are point masses")
    if mu1.is_point_mass():
        W2 = float(eps)
        W1 = float(transforms.imag_F(mu2, W2))
        return W1, W2, 1.0 / (W1 + W2 - eps)
    if mu2.is_point_mass():
        W1 = float(eps)
        W2 = float(transforms.imag_F(mu1, W1))
        return W1, W2, 1.0 / (W1 + W2 - eps)

    def f1(y):
        return float(transforms.imag_F(mu1, y))

    def f2(y):
        return float(transforms.imag_F(mu2, y))

    def resid(W1):
        W2 = f1(W1) - W1 + eps
        return f2(W2) - f1(W1)

    lo = float(eps)
    r_lo = resid(lo)
    if r_lo == 0.0:
        W1 = lo
    else:
        hi, r_hi, found = lo, r_lo, False
        for _ in range(200):
            hi *= 2.0
            r_hi = resid(hi)
            if r_hi == 0.0 or (r_hi > 0) != (r_lo > 0):
                found = True
                break
            lo, r_lo = hi, r_hi
        if not found:
            raise ConvergenceError("imaginary-axis bracket expansion failed")
        W1 = bisect_root(resid, lo, hi, rtol=1e-14, max_iter=200)
    W2 = f1(W1) - W1 + eps
    return float(W1), float(W2), 1.0 / (W1 + W2 - eps)


def convolve_density(mu1, mu2, x_grid, eta, *, renorm_tol=1e-3):
    """Density of mu1 [+] mu2 on a grid by Stieltjes inversion.

    Evaluates -(1/pi) Im G at heights eta and eta/2 and extrapolates the
    Poisson smoothing away (error O(eta^2)).  Returns (measure, density);
    the measure is symmetric when both inputs are, else a real-line law.
    Raises MassDefect when the recovered mass deviates from 1 by more than
    ``renorm_tol``; smaller defects are renormalized away.
    """
    x = np.asarray(x_grid, dtype=float)
    if eta <= 0:
        raise DomainError("eta must be positive")
    _check_not_point_mass(mu1, "mu1")
    _check_not_point_mass(mu2, "mu2")
    o1_a, _, F_a, _ = _subordinate_array(mu1, mu2, x + 1j * eta)
    o1_b, _, F_b, _ = _subordinate_array(mu1, mu2, x + 1j * (eta / 2.0), w0=o1_a)
    rho_a = -np.imag(1.0 / F_a) / np.pi
    rho_b = -np.imag(1.0 / F_b) / np.pi
    rho = 2.0 * rho_b - rho_a
    rho = np.maximum(rho, 0.0)
    mass = float(np.trapezoid(rho, x))
    if abs(mass - 1.0) >= renorm_tol:
        raise MassDefect(f"recovered mass {mass} deviates from 1 beyond {renorm_tol}")
    rho_n = rho / mass

    symmetric = isinstance(mu1, SymmetricMeasure) and isinstance(mu2, SymmetricMeasure)
    if symmetric:
        pos = x > 0
        xs = x[pos]
        hs = 2.0 * rho_n[pos]
        ws = _trapezoid_weights(xs).copy()
        # fold the cell between 0 and the first positive grid point in
        if xs.size and (x <= 0).any():
            ws[0] += 0.5 * xs[0]
        half = PositiveMeasure(x=xs, f=hs / float(hs @ ws), w=ws)
        return SymmetricMeasure(half=half), rho_n
    ws = _trapezoid_weights(x)
    total = float(rho_n @ ws)
    return measures.RealMeasure(x=x, f=rho_n / total, w=ws), rho_n


def _trapezoid_weights(x):
    w = np.zeros_like(x)
    if x.size >= 2:
        dx = np.diff(x)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
    return w


def fid_H_map(mu0, pair: transforms.GeneratingPair, z):
    """H(z) = z + phi(F_mu0(z)) through the generating pair of the perturbation."""
    z_arr = np.asarray(z, dtype=complex)
    if np.any(z_arr.imag <= 0):
        raise DomainError("z must lie in the open upper half-plane")
    _, F = transforms.transform_GF(mu0, z_arr)
    out = z_arr + transforms.phi_from_pair(pair, F)
    return complex(out) if np.isscalar(z) or z_arr.ndim == 0 else out


def fid_H_in_domain(mu0, pair, z):
    """Membership in Omega_H = {z in C+ : Im H(z) > 0}."""
    H = fid_H_map(mu0, pair, z)
    return np.asarray(H).imag > 0 if not np.isscalar(H) else H.imag > 0
