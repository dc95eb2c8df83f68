"""Local stability of steady states and the critical curves det J = 1, V = 0.

Along the prey isocline ``x = f(y)`` the interior Jacobian depends on ``y``
alone (not on ``beta``), so ``y_d`` and ``y_t`` are functions of
``(lam, alpha)``; ``beta`` only selects where on the isocline the steady
state sits.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .equilibria import (Equilibrium, beta_star as _beta_star, isocline_f, y_c as _y_c,
                         _gap_ratio)
from .errors import ConvergenceError, RegimeError
from .model import Params
from .roots import bisect

log = logging.getLogger(__name__)

NONHYPERBOLIC_BAND = 1e-9
MARGINAL_BAND = 1e-6
BETA_MAX_FACTOR = 50.0


@dataclass(frozen=True)
class Jacobian2:
    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    @property
    def tr(self) -> float:
        return self.a11 + self.a22

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def eigenvalues(self) -> tuple[complex, complex]:
        """Roots of ``z^2 - tr z + det``; complex pair ordered ``+ i`` first."""
        tr, det = self.tr, self.det
        disc = tr * tr - 4.0 * det
        if disc < 0:
            half = 0.5 * math.sqrt(-disc)
            return complex(0.5 * tr, half), complex(0.5 * tr, -half)
        # avoid cancellation in the smaller root
        big = 0.5 * (tr + math.copysign(math.sqrt(disc), tr))
        small = det / big if big != 0 else 0.0
        return complex(big), complex(small)

    @property
    def moduli(self) -> tuple[float, float]:
        a, b = self.eigenvalues
        return abs(a), abs(b)


class Tag(str, enum.Enum):
    SINK = "sink"
    SOURCE = "source"
    SADDLE = "saddle"
    NONHYPERBOLIC = "nonhyperbolic"


@dataclass(frozen=True)
class StabilityClass:
    tag: Tag
    jury: tuple[bool, bool, bool]
    moduli: tuple[float, float]
    marginal: bool = False


@dataclass(frozen=True)
class CriticalSet:
    x_bar: float
    y_c: float
    y_d: float
    y_t: float | None = None
    beta_d: float | None = None
    beta_star: float | None = None


def jacobian(s, p: Params) -> Jacobian2:
    x, y = float(s[0]), float(s[1])
    d = y * (1.0 + p.alpha * y)
    dp = 1.0 + 2.0 * p.alpha * y
    ed = math.exp(-d)
    return Jacobian2(
        a11=p.lam * ed / (1.0 + x) ** 2,
        a12=-p.lam * x * ed * dp / (1.0 + x),
        a21=-p.beta * math.expm1(-d),
        a22=p.beta * x * ed * dp,
    )


def jacobian_interior(y: float, p: Params) -> Jacobian2:
    """Jacobian at the steady state ``(f(y), y)``, simplified with ``h = f``."""
    x = float(isocline_f(y, p))
    d = y * (1.0 + p.alpha * y)
    dp = 1.0 + 2.0 * p.alpha * y
    return Jacobian2(
        a11=1.0 / (p.lam * math.exp(-d)),
        a12=-x * dp,
        a21=y / x,
        a22=y * dp * math.exp(-d) / -math.expm1(-d),
    )


def classify_jacobian(j: Jacobian2, *, band: float | None = None) -> StabilityClass:
    if band is None:
        band = NONHYPERBOLIC_BAND
    tr, det = j.tr, j.det
    jury = (abs(tr) < 1.0 + det, det < 1.0, (1.0 + det + tr > 0) and (1.0 + det - tr > 0))
    m1, m2 = j.moduli
    if abs(m1 - 1.0) <= band or abs(m2 - 1.0) <= band:
        tag = Tag.NONHYPERBOLIC
    elif m1 < 1 and m2 < 1:
        tag = Tag.SINK
    elif m1 > 1 and m2 > 1:
        tag = Tag.SOURCE
    else:
        tag = Tag.SADDLE
    marginal = min(abs(m1 - 1.0), abs(m2 - 1.0)) <= MARGINAL_BAND
    return StabilityClass(tag, jury, (m1, m2), marginal)


def classify(e: Equilibrium, p: Params, *, band: float | None = None) -> StabilityClass:
    return classify_jacobian(jacobian(e.state, p), band=band)


# --- det J and V along the prey isocline -------------------------------------

def det_J_interior(y, p: Params):
    """det J at the steady state with ordinate ``y``; tends to ``1/lam`` at 0."""
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    q = y * (1.0 + 2.0 * p.alpha * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(y > 0, q / -np.expm1(-d), 1.0)
    out = ratio / p.lam + q
    return out[()] if out.ndim == 0 else out


def V(y, p: Params):
    """``1 + det J - tr J`` at the steady state with ordinate ``y``; 0 at ``y = 0``."""
    y = np.asarray(y, dtype=float)
    d = y * (1.0 + p.alpha * y)
    q = y * (1.0 + 2.0 * p.alpha * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(y > 0, q / -np.expm1(-d), 1.0)
    # 1 - e^D/lam written as (lam - 1 - expm1(D))/lam to keep accuracy near 0
    out = (p.lam - 1.0 - np.expm1(d)) / p.lam + 2.0 * q - (1.0 - 1.0 / p.lam) * ratio
    return out[()] if out.ndim == 0 else out


def y_d(p: Params) -> float:
    """Unique ordinate in ``(0, y_c)`` where det J crosses 1."""
    yc = _y_c(p)
    lo, hi = bisect(lambda t: float(det_J_interior(t, p)) - 1.0, 0.0, yc, xtol=0.0)
    a, b = float(det_J_interior(lo, p)) - 1.0, float(det_J_interior(hi, p)) - 1.0
    return lo if abs(a) <= abs(b) else hi


def y_t(p: Params) -> float | None:
    """Sign change of ``V`` in ``(0, y_c)``; ``None`` when ``2 alpha`` does not
    exceed ``(3 lam - 1)/(lam - 1)`` (then ``V > 0`` throughout)."""
    if p.lam <= 1:
        raise RegimeError(f"y_t requires lam > 1, got lam={p.lam}")
    if 2.0 * p.alpha <= 1.0:
        raise RegimeError(f"y_t requires 2*alpha > 1, got alpha={p.alpha}")
    if 2.0 * p.alpha <= p.cooperation_threshold:
        return None
    yc = _y_c(p)
    fn = lambda t: float(V(t, p))  # noqa: E731
    grid = yc * np.arange(1, 1025) / 1025.0
    vals = V(grid, p)
    neg = np.flatnonzero(vals < 0)
    if neg.size:
        lo = float(grid[neg[-1]])
    else:
        # crossing closer to 0 than the first grid point
        lo = None
        for k in range(4, 300, 4):
            cand = yc * 10.0 ** -k
            if cand <= 0:
                break
            if fn(cand) < 0:
                lo = cand
                break
        if lo is None:
            raise ConvergenceError("V stays nonnegative down to underflow; y_t not resolved")
    pos = np.flatnonzero((vals > 0) & (grid > lo))
    hi = float(grid[pos[0]]) if pos.size else yc
    a, b = bisect(fn, lo, hi, xtol=0.0)
    return a if abs(fn(a)) <= abs(fn(b)) else b


def _unique_interior_y(p: Params) -> float:
    """Ordinate of the single interior steady state when ``beta x_bar > 1``."""
    yc = _y_c(p)
    g = lambda t: float(_gap_ratio(t, p))  # noqa: E731
    lo, hi = bisect(g, 0.0, yc, xtol=0.0, f_lo=p.beta * (p.lam - 1.0) - 1.0)
    return 0.5 * (lo + hi)


def beta_d(lam: float, alpha: float, *, beta_max: float | None = None) -> float | None:
    """Conversion at which the unique interior steady state has ``det J = 1``.

    Searched on ``(1/x_bar, beta_max]`` with ``beta_max = 50/x_bar`` by
    default. Returns ``None`` (and logs why) when det J does not cross 1 there.
    """
    if lam <= 1:
        raise RegimeError(f"beta_d requires lam > 1, got lam={lam}")
    xb = lam - 1.0
    if beta_max is None:
        beta_max = BETA_MAX_FACTOR / xb
    lo = (1.0 / xb) * (1.0 + 1e-9)
    if beta_max <= lo:
        raise RegimeError(f"beta_max={beta_max} must exceed 1/x_bar={1.0 / xb}")

    def excess(beta):
        q = Params(lam, beta, alpha)
        return float(det_J_interior(_unique_interior_y(q), q)) - 1.0

    e_lo, e_hi = excess(lo), excess(beta_max)
    if e_lo >= 0:
        log.info("beta_d absent: det J >= 1 already at beta = 1/x_bar (lam=%g, alpha=%g)", lam, alpha)
        return None
    if e_hi < 0:
        log.info("beta_d absent: det J < 1 up to beta_max=%g (lam=%g, alpha=%g)", beta_max, lam, alpha)
        return None
    a, b = bisect(excess, lo, beta_max, xtol=0.0, f_lo=e_lo)
    return a if abs(excess(a)) <= abs(excess(b)) else b


# --- global conditions -------------------------------------------------------

def extinction_index(p: Params) -> float:
    """``beta x_bar`` for ``2 alpha <= 1``, else ``beta x_bar sqrt(2 alpha) e^{(1 - 2 alpha)/(4 alpha)}``."""
    r0 = p.reproductive_number
    if 2.0 * p.alpha <= 1.0:
        return r0
    return r0 * math.sqrt(2.0 * p.alpha) * math.exp((1.0 - 2.0 * p.alpha) / (4.0 * p.alpha))


def global_extinction_condition(p: Params) -> bool:
    """Sufficient condition for predator extinction with prey settling at ``x_bar``."""
    if p.lam <= 1:
        raise RegimeError(f"requires lam > 1, got lam={p.lam}")
    return extinction_index(p) < 1.0


def persistence_condition(p: Params) -> bool:
    return p.lam > 1 and p.beta * (p.lam - 1.0) > 1.0


def critical_set(p: Params, *, beta_max: float | None = None) -> CriticalSet:
    """Every threshold defined for ``(lam, alpha)``; entries are ``None`` where absent."""
    yc = _y_c(p)
    yd = y_d(p)
    yt = y_t(p) if 2.0 * p.alpha > 1.0 else None
    bd = beta_d(p.lam, p.alpha, beta_max=beta_max)
    bs = _beta_star(p.lam, p.alpha).beta_star if 2.0 * p.alpha > p.cooperation_threshold else None
    return CriticalSet(p.lam - 1.0, yc, yd, yt, bd, bs)


def eigen_pair(j: Jacobian2) -> tuple[float, float]:
    """``(mu, omega)`` of a complex pair ``mu +/- i omega``, ``omega > 0``."""
    lam_plus = j.eigenvalues[0]
    if lam_plus.imag <= 0:
        raise RegimeError("Jacobian has real eigenvalues")
    return lam_plus.real, lam_plus.imag

