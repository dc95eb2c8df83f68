"""Steady states of the map, located through the isocline geometry.

Interior steady states are intersections of the predator isocline
``x = h(y)`` with the prey isocline ``x = f(y)`` on ``0 < y < y_c``.
Equivalently they solve ``w(y) = y`` with ``w(y) = beta f(y) (1 - e^{-D})``,
which is the form the root scan works with.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, RegimeError
from .model import Params, State, step
from .roots import bisect, golden_min

SCAN_POINTS = 4096
ROOT_XTOL = 1e-13
EDGE_GUARD = 1e-8
TOUCH_TOL = 1e-10
ORACLE_POINTS = 16384


class Kind(str, enum.Enum):
    ORIGIN = "E0"
    BOUNDARY_E1 = "E1"
    INTERIOR = "interior"


@dataclass(frozen=True)
class Equilibrium:
    state: State
    kind: Kind
    residual: float
    multiplicity: int = 1


class CountBound(str, enum.Enum):
    EXACTLY_0 = "exactly 0"
    EXACTLY_1 = "exactly 1"
    AT_MOST_2 = "at most 2"
    UNCLASSIFIED = "boundary - count not classified"

    def admits(self, count: int) -> bool:
        if self is CountBound.EXACTLY_0:
            return count == 0
        if self is CountBound.EXACTLY_1:
            return count == 1
        if self is CountBound.AT_MOST_2:
            return 0 <= count <= 2
        return True


@dataclass(frozen=True)
class RegimeReport:
    x_bar: float
    maximal_reproductive_number: float
    cooperation_excess: float
    predicted_count_bound: CountBound
    on_boundary: bool = False


@dataclass(frozen=True)
class TangencyResult:
    beta_star: float
    y_star: float
    x_star: float
    residual_value: float
    residual_slope: float
    method: str = "newton"


# --- isoclines -------------------------------------------------------------

def _one_minus_exp(d):
    return -np.expm1(-d)


def isocline_h(y, p: Params):
    """Predator isocline ``y / (beta (1 - e^{-D}))``; equals ``1/beta`` at 0."""
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    e1 = _one_minus_exp(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y > 0, y / (p.beta * e1), 1.0 / p.beta)
    return out[()] if out.ndim == 0 else out


def isocline_h_prime(y, p: Params):
    """Slope of the predator isocline; ``(1 - 2 alpha) / (2 beta)`` at 0."""
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    e1 = _one_minus_exp(d)
    num = e1 - y * np.exp(-d) * (1.0 + 2.0 * p.alpha * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y > 0, num / (p.beta * e1 * e1), (1.0 - 2.0 * p.alpha) / (2.0 * p.beta))
    return out[()] if out.ndim == 0 else out


def _isocline_h_second(y, p: Params):
    d = y * (1.0 + p.alpha * y)
    dp = 1.0 + 2.0 * p.alpha * y
    ed = math.exp(-d)
    e1 = -math.expm1(-d)
    e1p = ed * dp
    e1pp = ed * (2.0 * p.alpha - dp * dp)
    return (-y * e1pp * e1 - 2.0 * e1p * (e1 - y * e1p)) / (p.beta * e1 ** 3)


def isocline_f(y, p: Params):
    """Prey isocline ``lam e^{-D} - 1``; ``lam - 1`` at 0 and 0 at ``y_c``."""
    y = np.asarray(y, dtype=float)
    out = p.lam * np.exp(-y * (1.0 + p.alpha * y)) - 1.0
    return out[()] if out.ndim == 0 else out


def isocline_f_prime(y, p: Params):
    y = np.asarray(y, dtype=float)
    out = -p.lam * np.exp(-y * (1.0 + p.alpha * y)) * (1.0 + 2.0 * p.alpha * y)
    return out[()] if out.ndim == 0 else out


def _isocline_f_second(y, p: Params):
    dp = 1.0 + 2.0 * p.alpha * y
    return p.lam * math.exp(-y * (1.0 + p.alpha * y)) * (dp * dp - 2.0 * p.alpha)


def y_c(p: Params) -> float:
    """Predator density where the prey isocline reaches zero, ``e^{D(y_c)} = lam``."""
    if p.lam <= 1:
        raise RegimeError(f"y_c requires lam > 1, got lam={p.lam}")
    log_lam = math.log(p.lam)
    if p.alpha == 0:
        return log_lam
    # rationalised root of alpha y^2 + y - ln(lam) = 0; no cancellation for small alpha
    return 2.0 * log_lam / (1.0 + math.sqrt(1.0 + 4.0 * p.alpha * log_lam))


def w(y, p: Params):
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    out = p.beta * (p.lam * np.exp(-d) - 1.0) * _one_minus_exp(d)
    return out[()] if out.ndim == 0 else out


def w_prime(y, p: Params):
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    ed = np.exp(-d)
    out = p.beta * (1.0 + 2.0 * p.alpha * y) * ed * (2.0 * p.lam * ed - (p.lam + 1.0))
    return out[()] if out.ndim == 0 else out


def _gap_ratio(y, p: Params):
    """``w(y)/y - 1``: same sign as ``w(y) - y`` but finite at 0 (``beta x_bar - 1``)."""
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(y > 0, _one_minus_exp(d) / y, 1.0)
    out = p.beta * (p.lam * np.exp(-d) - 1.0) * ratio - 1.0
    return out[()] if out.ndim == 0 else out


# --- steady states ---------------------------------------------------------

def _interior_residual(y: float, p: Params) -> tuple[float, float]:
    x = float(isocline_f(y, p))
    iso_gap = abs(float(isocline_h(y, p)) - x)
    nx, ny = step((x, y), p)
    defect = max(abs(float(nx) - x), abs(float(ny) - y))
    return x, max(iso_gap, defect)


def boundary_equilibria(p: Params) -> list[Equilibrium]:
    out = [Equilibrium(State(0.0, 0.0), Kind.ORIGIN, 0.0)]
    if p.lam > 1:
        xb = p.lam - 1.0
        nx, ny = step((xb, 0.0), p)
        res = max(abs(float(nx) - xb), abs(float(ny)))
        out.append(Equilibrium(State(xb, 0.0), Kind.BOUNDARY_E1, res))
    return out


def _polish(lo: float, hi: float, p: Params) -> float:
    y = 0.5 * (lo + hi)
    r = float(w(y, p)) - y
    dr = float(w_prime(y, p)) - 1.0
    if dr != 0 and math.isfinite(dr):
        y_new = y - r / dr
        if abs(y_new - y) <= 10 * (hi - lo) + 1e-300 and abs(float(w(y_new, p)) - y_new) <= abs(r):
            return y_new
    return y


def interior_equilibria(p: Params, *, scan_points: int | None = None, xtol: float | None = None,
                        edge_guard: float | None = None, touch_tol: float | None = None
                        ) -> list[Equilibrium]:
    """All interior steady states, sorted by predator density.

    Scans the sign of ``w(y) - y`` on a uniform grid over ``(0, y_c)``,
    bisects each sign change, then takes one Newton step. Grid-local extrema
    that come close to zero are refined so that a pair of roots inside one
    grid cell, or a tangential touch, is not missed; a touch is reported once
    with ``multiplicity=2``.
    """
    if p.lam <= 1:
        return []
    # module settings are read per call so that run-time overrides apply
    scan_points = SCAN_POINTS if scan_points is None else scan_points
    xtol = ROOT_XTOL if xtol is None else xtol
    edge_guard = EDGE_GUARD if edge_guard is None else edge_guard
    touch_tol = TOUCH_TOL if touch_tol is None else touch_tol
    yc = y_c(p)
    ys = yc * np.arange(1, scan_points + 1) / (scan_points + 1)
    g = _gap_ratio(ys, p)
    # endpoints: g(0+) = beta*x_bar - 1, g(y_c) = -1
    g0 = p.beta * (p.lam - 1.0) - 1.0
    grid = np.concatenate(([0.0], ys, [yc]))
    vals = np.concatenate(([g0], g, [-1.0]))

    def gfun(y):
        return float(_gap_ratio(y, p))

    brackets: list[tuple[float, float]] = []
    touches: list[float] = []
    sign = np.sign(vals)
    nz = np.flatnonzero(sign != 0)
    flips = np.flatnonzero(sign[nz[:-1]] != sign[nz[1:]])
    for a, b in zip(nz[flips], nz[flips + 1]):
        brackets.append((float(grid[a]), float(grid[b])))
    # exact zeros on grid points (interior only)
    for i in np.flatnonzero(sign[1:-1] == 0) + 1:
        brackets.append((grid[i], grid[i]))

    # near-zero local extrema of |g| with no sign change on either side
    mag = np.abs(vals)
    mid = slice(1, -1)
    cand = ((sign[mid] != 0) & (sign[:-2] == sign[mid]) & (sign[2:] == sign[mid])
            & (mag[mid] <= mag[:-2]) & (mag[mid] <= mag[2:]))
    for i in np.flatnonzero(cand) + 1:
        s = sign[i]
        lo, hi = grid[i - 1], grid[i + 1]
        y_m, g_m = golden_min(lambda y: s * gfun(y), lo, hi)
        if g_m <= 0:
            brackets.append((lo, y_m))
            brackets.append((y_m, hi))
        elif abs(float(w(y_m, p)) - y_m) < touch_tol:
            touches.append(y_m)

    found: list[tuple[float, int]] = []
    for lo, hi in brackets:
        if lo == hi:
            y = lo
        else:
            a, b = bisect(gfun, lo, hi, xtol=xtol)
            y = _polish(a, b, p) if a != b else a
        found.append((y, 1))
    found.extend((y, 2) for y in touches)

    out = []
    for y, mult in sorted(found):
        y = float(y)
        if y <= edge_guard or y >= yc - edge_guard:
            continue
        x, res = _interior_residual(y, p)
        out.append(Equilibrium(State(x, y), Kind.INTERIOR, res, mult))
    return out


def all_equilibria(p: Params) -> list[Equilibrium]:
    return boundary_equilibria(p) + interior_equilibria(p)


def sign_change_count(p: Params, n: int | None = None, eps: float | None = None) -> int:
    """Count sign changes of ``w(y) - y`` on ``n`` uniform points in ``(eps, y_c - eps)``.

    A brute-force count used to audit ``interior_equilibria``.
    """
    yc = y_c(p)
    if n is None:
        n = ORACLE_POINTS
    if eps is None:
        eps = EDGE_GUARD
    ys = np.linspace(eps, yc - eps, n)
    s = np.sign(w(ys, p) - ys)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


# --- regimes ---------------------------------------------------------------

def regime(p: Params, *, boundary_band: float = 1e-12) -> RegimeReport:
    """Predicted number of interior steady states from ``beta x_bar`` and ``2 alpha``."""
    xb = p.x_bar
    r0 = p.beta * xb
    excess = 2.0 * p.alpha - p.cooperation_threshold
    on_boundary = abs(r0 - 1.0) <= boundary_band
    if on_boundary:
        if excess > 0:
            bound = CountBound.EXACTLY_1
        elif p.alpha > 0:
            bound = CountBound.EXACTLY_0
        else:
            bound = CountBound.UNCLASSIFIED
    elif r0 > 1:
        bound = CountBound.EXACTLY_1
    elif excess <= 0:
        bound = CountBound.EXACTLY_0
    else:
        bound = CountBound.AT_MOST_2
    return RegimeReport(xb, r0, excess, bound, on_boundary)


def _tangency_residuals(y: float, beta: float, p: Params) -> tuple[float, float]:
    q = p.with_beta(beta)
    return (float(isocline_h(y, q) - isocline_f(y, q)),
            float(isocline_h_prime(y, q) - isocline_f_prime(y, q)))


def beta_star(lam: float, alpha: float, *, scan_points: int | None = None,
              max_iter: int = 50, tol: float = 1e-14) -> TangencyResult:
    """Conversion rate at which the two isoclines first touch.

    Requires ``2 alpha > (3 lam - 1)/(lam - 1)``. For ``beta`` below the
    result there is no interior steady state; between it and ``1/x_bar``
    there are two.
    """
    probe = Params(lam, 1.0, alpha)
    if scan_points is None:
        scan_points = SCAN_POINTS
    if lam <= 1:
        raise RegimeError(f"beta_star requires lam > 1, got {lam}")
    if 2.0 * alpha <= probe.cooperation_threshold:
        raise RegimeError(
            f"beta_star requires 2*alpha > (3 lam - 1)/(lam - 1) = {probe.cooperation_threshold:.6g}")
    yc = y_c(probe)
    # beta that puts an intersection at y is y / (f(y)(1 - e^{-D})); its minimum is the seed
    ys = yc * np.arange(1, scan_points + 1) / (scan_points + 1)
    needed = ys / w(ys, probe)
    i = int(np.argmin(needed))
    y, beta = float(ys[i]), float(needed[i])

    converged = False
    for _ in range(max_iter):
        q = probe.with_beta(beta)
        f1, f2 = _tangency_residuals(y, beta, probe)
        hy = float(isocline_h(y, q))
        hpy = float(isocline_h_prime(y, q))
        jac = np.array([[f2, -hy / beta],
                        [_isocline_h_second(y, q) - _isocline_f_second(y, q), -hpy / beta]])
        try:
            dy, db = np.linalg.solve(jac, [-f1, -f2])
        except np.linalg.LinAlgError:
            break
        y, beta = y + dy, beta + db
        if not (0 < y < yc and beta > 0):
            break
        if abs(dy) <= tol * max(1.0, y) and abs(db) <= tol * max(1.0, beta):
            converged = True
            break

    method = "newton"
    if not converged or not (0 < y < yc and beta > 0):
        y, beta = _beta_star_by_count(probe, float(needed[i]))
        method = "bisection"
    r1, r2 = _tangency_residuals(y, beta, probe)
    if not (abs(r1) <= 1e-9 and abs(r2) <= 1e-9) and method == "newton":
        y, beta = _beta_star_by_count(probe, float(needed[i]))
        r1, r2 = _tangency_residuals(y, beta, probe)
        method = "bisection"
    if not (0 < y < yc):
        raise ConvergenceError(f"tangency ordinate {y} outside (0, {yc})")
    x = float(isocline_f(y, probe))
    return TangencyResult(float(beta), float(y), x, r1, r2, method)


def _beta_star_by_count(probe: Params, seed: float) -> tuple[float, float]:
    xb = probe.x_bar

    def count(beta):
        return len(interior_equilibria(probe.with_beta(beta)))

    lo, hi = seed * 0.5, min(seed * 1.5, 1.0 / xb * (1 - 1e-9))
    while count(lo) != 0:
        lo *= 0.5
    if count(hi) < 2:
        raise ConvergenceError("could not bracket the 0 -> 2 steady-state transition")
    for _ in range(200):
        if hi - lo <= 1e-15 * hi:
            break
        mid = 0.5 * (lo + hi)
        if count(mid) == 0:
            lo = mid
        else:
            hi = mid
    q = probe.with_beta(hi)
    yc = y_c(probe)
    ys = yc * np.arange(1, SCAN_POINTS + 1) / (SCAN_POINTS + 1)
    i = int(np.argmax(w(ys, q) - ys))
    y, _ = golden_min(lambda t: -(float(w(t, q)) - t), ys[max(i - 1, 0)], ys[min(i + 1, len(ys) - 1)])
    return y, hi


# --- ordering of the characteristic ordinates --------------------------------

@dataclass(frozen=True)
class OrderingChain:
    y_star: float
    y_e: float
    y_c: float
    beta_star: float
    beta: float
    y1: float | None = None
    y2: float | None = None
    y_unique: float | None = None
    values: list[float] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        v = self.values
        return len(v) >= 2 and all(a < b for a, b in zip(v[:-1], v[1:]))


def ordering_chain(p: Params) -> OrderingChain:
    """Collect ``y1* < y_* < y2* < y_e < y_c`` (two-state window) or
    ``y_e < y* < y_c`` (``beta > 1/x_bar``) for the given ``beta``."""
    tan = beta_star(p.lam, p.alpha)
    yc = y_c(p)
    xb = p.x_bar
    at_edge = interior_equilibria(p.with_beta(1.0 / xb))
    if len(at_edge) != 1:
        raise ConvergenceError(f"expected one steady state at beta = 1/x_bar, found {len(at_edge)}")
    y_e = at_edge[0].state.y
    eqs = interior_equilibria(p)
    if tan.beta_star < p.beta < 1.0 / xb:
        if len(eqs) != 2:
            return OrderingChain(tan.y_star, y_e, yc, tan.beta_star, p.beta)
        y1, y2 = eqs[0].state.y, eqs[1].state.y
        vals = [0.0, y1, tan.y_star, y2, y_e, yc]
        return OrderingChain(tan.y_star, y_e, yc, tan.beta_star, p.beta, y1=y1, y2=y2, values=vals)
    if p.beta > 1.0 / xb:
        if len(eqs) != 1:
            return OrderingChain(tan.y_star, y_e, yc, tan.beta_star, p.beta)
        ys = eqs[0].state.y
        vals = [0.0, tan.y_star, y_e, ys, yc]
        return OrderingChain(tan.y_star, y_e, yc, tan.beta_star, p.beta, y_unique=ys, values=vals)
    raise RegimeError(f"beta={p.beta} is outside (beta_star, 1/x_bar) and (1/x_bar, inf)")


def ordering_check(p: Params) -> bool:
    return ordering_chain(p).holds
