"""Long-run orbit analysis: attractor labels, persistence, basins, beta sweeps.

Orbits are iterated in batches with numpy ufuncs in the same operation order
as ``model.orbit``, so a state classified alone or inside a batch of any size
gives bit-identical results.

The analysis window is traversed twice. The first pass collects extrema and
the centroid; the second re-runs the window from its saved start state to get
radial statistics about that centroid and keeps the last few states for
cycle detection.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import interior_equilibria
from .errors import ParameterError
from .model import Params, State

BURN_IN = 20000
WINDOW = 5000
MIN_BUDGET = 1000
TARGET_TOL = 1e-6         # Origin / BoundaryE1 neighbourhood
FIXED_DIAMETER = 1e-7
LOOP_DIAMETER = 1e-5
LOOP_CV = 0.5
LOOP_DRIFT = 0.01
PERIOD_MAX = 32
PERIOD_TOL = 1e-9
CHUNK = 4096


class Attractor(str, enum.Enum):
    FIXED_POINT = "fixed_point"
    INVARIANT_LOOP = "invariant_loop"
    BOUNDARY_E1 = "boundary_e1"
    ORIGIN = "origin"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class OrbitSummary:
    """Outcome of one trajectory.

    ``state`` is set for FixedPoint, BoundaryE1 and Origin; ``center`` and
    ``mean_radius`` for InvariantLoop. ``period`` is set when the tail is a
    short periodic cycle, which is reported as Unclassified.
    """

    attractor: Attractor
    tail_liminf_x: float
    tail_liminf_y: float
    tail_max_x: float
    tail_max_y: float
    tail_diameter: float
    steps_used: int
    final_state: State
    state: State | None = None
    center: State | None = None
    mean_radius: float | None = None
    radius_cv: float | None = None
    radius_drift: float | None = None
    period: int | None = None
    note: str = ""


def _check_budget(burn_in, window):
    if burn_in < MIN_BUDGET or window < MIN_BUDGET:
        raise ParameterError(
            f"burn_in and window must be >= {MIN_BUDGET}, got {burn_in}, {window}")


def _as_batch(states):
    arr = np.asarray(states, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParameterError(f"states must have shape (n, 2), got {arr.shape}")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ParameterError("initial states must be finite and nonnegative")
    return arr[:, 0].copy(), arr[:, 1].copy()


def _iterate(x, y, lam, beta, alpha, n):
    exp, expm1 = np.exp, np.expm1
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            d = y * (1.0 + alpha * y)
            x, y = lam * x / (1.0 + x) * exp(-d), -beta * x * expm1(-d)
    return x, y


def _analyze_batch(x, y, lam, beta, alpha, burn_in, window):
    """Raw per-orbit statistics; parameters may be scalars or arrays."""
    exp, expm1 = np.exp, np.expm1
    x, y = _iterate(x, y, lam, beta, alpha, burn_in)
    x0, y0 = x.copy(), y.copy()

    xmin, ymin = x.copy(), y.copy()
    xmax, ymax = x.copy(), y.copy()
    sx, sy = np.zeros_like(x), np.zeros_like(y)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(window):
            sx += x
            sy += y
            d = y * (1.0 + alpha * y)
            x, y = lam * x / (1.0 + x) * exp(-d), -beta * x * expm1(-d)
            np.minimum(xmin, x, out=xmin)
            np.minimum(ymin, y, out=ymin)
            np.maximum(xmax, x, out=xmax)
            np.maximum(ymax, y, out=ymax)
    cx, cy = sx / window, sy / window

    half = window // 2
    r_first, r_second, r2 = np.zeros_like(x), np.zeros_like(x), np.zeros_like(x)
    ring = np.empty((PERIOD_MAX + 1, x.size, 2))
    x, y = x0, y0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(window):
            r = np.hypot(x - cx, y - cy)
            if i < half:
                r_first += r
            else:
                r_second += r
            r2 += r * r
            d = y * (1.0 + alpha * y)
            x, y = lam * x / (1.0 + x) * exp(-d), -beta * x * expm1(-d)
            j = i - (window - PERIOD_MAX - 1)
            if j >= 0:
                ring[j, :, 0] = x
                ring[j, :, 1] = y
    m1 = r_first / half
    m2 = r_second / (window - half)
    mean_r = (r_first + r_second) / window
    return dict(xmin=xmin, ymin=ymin, xmax=xmax, ymax=ymax, cx=cx, cy=cy,
                m1=m1, m2=m2, mean_r=mean_r, r2=r2 / window, ring=ring, x=x, y=y)


def _period(ring_i, tol):
    """Smallest k in 2..PERIOD_MAX with the stored tail k-periodic, else None."""
    for k in range(2, PERIOD_MAX + 1):
        gap = np.max(np.abs(ring_i[k:] - ring_i[:-k]))
        if gap <= tol:
            return k
    return None


def _summarize(st, i, lam, steps):
    xmin, ymin = float(st["xmin"][i]), float(st["ymin"][i])
    xmax, ymax = float(st["xmax"][i]), float(st["ymax"][i])
    final = State(float(st["x"][i]), float(st["y"][i]))
    diameter = math.hypot(xmax - xmin, ymax - ymin)  # bounding-box diagonal
    base = dict(tail_liminf_x=xmin, tail_liminf_y=ymin, tail_max_x=xmax, tail_max_y=ymax,
                tail_diameter=diameter, steps_used=steps, final_state=final)
    if not all(map(math.isfinite, (xmin, ymin, xmax, ymax))):
        return OrbitSummary(Attractor.UNCLASSIFIED, note="non-finite tail", **base)

    if math.hypot(xmax, ymax) <= TARGET_TOL:
        return OrbitSummary(Attractor.ORIGIN, state=State(0.0, 0.0), **base)
    if lam > 1:
        xb = lam - 1.0
        if math.hypot(max(abs(xmax - xb), abs(xmin - xb)), ymax) <= TARGET_TOL:
            return OrbitSummary(Attractor.BOUNDARY_E1, state=State(xb, 0.0), **base)
    if diameter < FIXED_DIAMETER:
        return OrbitSummary(Attractor.FIXED_POINT, state=final, **base)

    mean_r = float(st["mean_r"][i])
    var = max(float(st["r2"][i]) - mean_r * mean_r, 0.0)
    cv = math.sqrt(var) / mean_r if mean_r > 0 else math.inf
    m1, m2 = float(st["m1"][i]), float(st["m2"][i])
    drift = abs(m1 - m2) / mean_r if mean_r > 0 else math.inf
    center = State(float(st["cx"][i]), float(st["cy"][i]))
    loop = dict(center=center, mean_radius=mean_r, radius_cv=cv, radius_drift=drift)

    k = _period(st["ring"][:, i, :], PERIOD_TOL * max(1.0, xmax, ymax))
    if k is not None:
        return OrbitSummary(Attractor.UNCLASSIFIED, period=k,
                            note=f"periodic cycle of period {k}", **loop, **base)
    if diameter > LOOP_DIAMETER and cv < LOOP_CV and drift < LOOP_DRIFT:
        return OrbitSummary(Attractor.INVARIANT_LOOP, **loop, **base)
    return OrbitSummary(Attractor.UNCLASSIFIED, note="no rule fired", **loop, **base)


def classify_orbits(states, p, *, burn_in: int = BURN_IN, window: int = WINDOW,
                    chunk_size: int = CHUNK) -> list[OrbitSummary]:
    """Classify many initial states.

    ``p`` is one ``Params`` shared by all states, or a sequence with one
    ``Params`` per state. Results follow input order.
    """
    _check_budget(burn_in, window)
    x, y = _as_batch(states)
    n = x.size
    if isinstance(p, Params):
        plist = None
    else:
        plist = list(p)
        if len(plist) != n:
            raise ParameterError(f"{len(plist)} parameter sets for {n} states")
    out = []
    for lo in range(0, n, chunk_size):
        hi = min(lo + chunk_size, n)
        if plist is None:
            lam, beta, alpha = p.lam, p.beta, p.alpha
            lams = [p.lam] * (hi - lo)
        else:
            lams = [q.lam for q in plist[lo:hi]]
            lam = np.array(lams)
            beta = np.array([q.beta for q in plist[lo:hi]])
            alpha = np.array([q.alpha for q in plist[lo:hi]])
        st = _analyze_batch(x[lo:hi], y[lo:hi], lam, beta, alpha, burn_in, window)
        out.extend(_summarize(st, i, lams[i], burn_in + 2 * window) for i in range(hi - lo))
    return out


def classify_orbit(s0, p: Params, burn_in: int = BURN_IN, window: int = WINDOW) -> OrbitSummary:
    return classify_orbits([tuple(s0)], p, burn_in=burn_in, window=window)[0]


# --- persistence -------------------------------------------------------------

@dataclass(frozen=True)
class PersistenceReport:
    params: Params
    trials: int
    seed: int
    hypothesis_holds: bool
    min_liminf_x: float
    min_liminf_y: float
    persistent: bool
    labels: dict = field(default_factory=dict)


def sample_initials(p: Params, trials: int, seed: int) -> np.ndarray:
    """Uniform initial states in ``[1e-3, max(x_bar, 1)]^2``."""
    hi = max(p.lam - 1.0, 1.0)
    rng = np.random.default_rng(seed)
    return rng.uniform(1e-3, hi, size=(trials, 2))


def persistence_check(p: Params, trials: int = 50, seed: int = 0, *, burn_in: int = BURN_IN,
                      window: int = WINDOW, floor: float = TARGET_TOL) -> PersistenceReport:
    """Minimum tail densities over random interior orbits.

    ``persistent`` means both minima exceed ``floor``. ``hypothesis_holds``
    records whether ``beta x_bar > 1``; the check runs either way.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    summaries = classify_orbits(sample_initials(p, trials, seed), p,
                                burn_in=burn_in, window=window)
    mx = min(s.tail_liminf_x for s in summaries)
    my = min(s.tail_liminf_y for s in summaries)
    labels: dict = {}
    for s in summaries:
        labels[s.attractor.value] = labels.get(s.attractor.value, 0) + 1
    holds = p.lam > 1 and p.beta * (p.lam - 1.0) > 1.0
    return PersistenceReport(p, trials, seed, holds, mx, my, mx > floor and my > floor, labels)


# --- basins ------------------------------------------------------------------

@dataclass(frozen=True)
class BasinGrid:
    params: Params
    x_values: np.ndarray
    y_values: np.ndarray
    labels: np.ndarray          # (ny, nx) array of Attractor values
    burn_in: int
    window: int

    def counts(self) -> dict[str, int]:
        vals, cnt = np.unique(self.labels.astype(str), return_counts=True)
        return {str(v): int(c) for v, c in zip(vals, cnt)}


def basin_scan(p: Params, x_range=(0.1, 4.5), y_range=(0.05, 0.6), nx: int = 60, ny: int = 60,
               *, burn_in: int = BURN_IN, window: int = WINDOW,
               chunk_size: int = CHUNK) -> BasinGrid:
    """Label the attractor reached from each node of a regular grid.

    Nodes include both ends of each range.
    """
    if nx < 2 or ny < 2:
        raise ParameterError(f"need at least 2 nodes per axis, got {nx}x{ny}")
    (x0, x1), (y0, y1) = x_range, y_range
    if not (0 <= x0 < x1 and 0 <= y0 < y1):
        raise ParameterError(f"invalid ranges {x_range}, {y_range}")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    summaries = classify_orbits(pts, p, burn_in=burn_in, window=window, chunk_size=chunk_size)
    labels = np.array([s.attractor.value for s in summaries], dtype=object).reshape(ny, nx)
    return BasinGrid(p, xs, ys, labels, burn_in, window)


# --- beta sweeps -------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    beta: float
    interior: list          # [(x, y, stability tag)]
    start: State
    summary: OrbitSummary

    @property
    def interior_count(self) -> int:
        return len(self.interior)


def _start_state(p: Params, interior, policy, kick: float) -> State:
    if policy != "perturbed":
        return State(float(policy[0]), float(policy[1]))
    sinks = [s for s, tag in interior if tag == "sink"]
    if sinks:
        s = sinks[0]
    elif interior:
        s = interior[-1][0]
    else:
        return State(0.5 * max(p.lam - 1.0, 1.0), 0.1)
    return State(s.x + kick, s.y + kick)


def beta_sweep(lam: float, alpha: float, beta_min: float, beta_max: float, samples: int,
               policy="perturbed", *, kick: float = 1e-2, burn_in: int = BURN_IN,
               window: int = WINDOW) -> list[SweepRow]:
    """Equilibria and long-run attractor at evenly spaced ``beta``.

    ``policy`` is ``"perturbed"`` (start ``kick`` away from an interior sink,
    or from the last interior steady state, or from a default point when none
    exists) or an explicit initial state used for every ``beta``.
    """
    from .stability import classify

    if samples < 2:
        raise ParameterError(f"samples must be >= 2, got {samples}")
    if not (0 < beta_min < beta_max):
        raise ParameterError(f"need 0 < beta_min < beta_max, got {beta_min}, {beta_max}")
    betas = np.linspace(beta_min, beta_max, samples)
    params, interiors, starts = [], [], []
    for b in betas:
        q = Params(lam, float(b), alpha)
        eqs = interior_equilibria(q) if lam > 1 else []
        tagged = [(e.state, classify(e, q).tag.value) for e in eqs]
        params.append(q)
        interiors.append(tagged)
        starts.append(_start_state(q, tagged, policy, kick))
    summaries = classify_orbits(starts, params, burn_in=burn_in, window=window)
    return [SweepRow(float(b), [(s.x, s.y, t) for s, t in tagged], st, sm)
            for b, tagged, st, sm in zip(betas, interiors, starts, summaries)]
