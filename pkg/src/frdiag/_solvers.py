"""Safeguarded scalar root finding used throughout the toolkit.

All solvers assume a bracketed root and fall back to bisection whenever a
Newton step would leave the bracket, so they cannot diverge.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError


def bisect_root(fn, lo, hi, *, rtol=1e-13, max_iter=200):
    """Root of a scalar function on a sign-changing bracket [lo, hi]."""
    flo = fn(lo)
    if flo == 0.0:
        return lo
    fhi = fn(hi)
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ConvergenceError(f"no sign change on bracket [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)


def newton_bisect(fn, dfn, lo, hi, *, x0=None, rtol=1e-13, max_iter=200):
    """Safeguarded Newton iteration on a sign-changing bracket.

    ``fn`` must change sign on [lo, hi]; ``dfn`` is its derivative.  Newton
    steps that leave the current bracket are replaced by bisection.
    """
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ConvergenceError(f"no sign change on bracket [{lo}, {hi}]")
    x = 0.5 * (lo + hi) if x0 is None else float(np.clip(x0, lo, hi))
    fx = fn(x)
    for _ in range(max_iter):
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi = x
        d = dfn(x)
        step_ok = d != 0.0 and np.isfinite(d)
        if step_ok:
            x_new = x - fx / d
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= rtol * (1.0 + abs(x_new)):
            return x_new
        x = x_new
        fx = fn(x)
    raise ConvergenceError(f"no convergence after {max_iter} iterations")


def expand_bracket_decreasing(fn, start, *, factor=2.0, max_expand=200):
    """Bracket a root of an (eventually) sign-changing fn by expanding upward.

    Assumes fn(start) < 0 and fn -> +inf; returns (lo, hi) with a sign change.
    """
    lo = start
    hi = start if start > 0 else 1.0
    for _ in range(max_expand):
        hi = hi * factor if hi > 0 else 1.0
        if fn(hi) >= 0.0:
            return lo, hi
        lo = hi
    raise ConvergenceError("bracket expansion failed")


def bisect_vec(fn, lo, hi, *, iters=100):
    """Vectorized bisection: fn maps an array to an array of residuals.

    ``lo``/``hi`` are arrays bracketing a sign change componentwise.
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        take_lo = np.sign(fm) == np.sign(flo)
        lo = np.where(take_lo, mid, lo)
        flo = np.where(take_lo, fm, flo)
        hi = np.where(take_lo, hi, mid)
    return 0.5 * (lo + hi)
