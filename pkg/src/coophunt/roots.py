"""Scalar bracketing helpers."""
from __future__ import annotations

import math

from .errors import ConvergenceError


def bisect(fn, lo: float, hi: float, *, xtol: float = 1e-13, max_iter: int = 200,
           f_lo: float | None = None) -> tuple[float, float]:
    """Shrink a sign-change bracket of ``fn`` to width ``xtol``.

    Returns the final ``(lo, hi)``; the caller picks a point inside. Stops early
    on an exact zero or once the midpoint no longer moves.
    """
    if f_lo is None:
        f_lo = fn(lo)
    f_hi = fn(hi)
    if f_lo == 0:
        return lo, lo
    if f_hi == 0:
        return hi, hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={f_lo}, {f_hi}")
    for _ in range(max_iter):
        if hi - lo <= xtol:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        f_mid = fn(mid)
        if f_mid == 0:
            return mid, mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    raise ConvergenceError(f"bisection did not reach width {xtol} in {max_iter} steps")


def golden_min(fn, lo: float, hi: float, *, xtol: float = 1e-14, max_iter: int = 200):
    """Golden-section search for a minimiser of a unimodal ``fn`` on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)
