"""Neimark-Sacker bifurcation of the interior steady state and its direction.

The steady state is shifted to the origin, the map is expanded to third
order, the linear part is brought to rotation form ``[[mu, -omega],
[omega, mu]]`` by ``(X, Y) = L (u, v)``, and the direction coefficient

    C* = Re((1 - 2 lam+) lam-^2 / (1 - lam+) xi20 xi11)
         + |xi11|^2 / 2 + |xi02|^2 - Re(lam- xi21)

is evaluated from the transformed Taylor coefficients. ``C* > 0`` means an
attracting invariant closed curve appears for ``beta > beta_d``.

Coefficient conventions (``e = exp(-D*)``, ``s = 1 + 2 alpha y*``,
``m = mu - a11``)::

    X' = a11 X + a12 Y + b1 X^2 + b2 XY + b3 Y^2 + b4 X^3 + b5 X^2 Y + b6 XY^2 + b7 Y^3
    Y' = a21 X + a22 Y + c1 XY + c2 Y^2 + c3 Y^3 + c4 XY^2

The third-order X terms come from d^3/dx^3 [lam x/(1+x)] = 6 lam/(1+x)^4,
so ``b4 = lam e/(1+x*)^4`` and ``b5 = lam s e/(1+x*)^3``. The u^2 v
coefficient of the second transformed component carries ``3 c3 m^2``, and
``xi21`` uses ``g_uvv`` in its imaginary part.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import Equilibrium, interior_equilibria
from .errors import RegimeError
from .model import Params, State
from .stability import Jacobian2, beta_d as _beta_d, jacobian

FD_BETA_STEP = 1e-6
RESONANCE_GAP = 1e-6
DIRECTION_TOL = 1e-10


class Direction(str, enum.Enum):
    SUPERCRITICAL = "supercritical"
    SUBCRITICAL = "subcritical"
    INCONCLUSIVE = "inconclusive"


@dataclass
class NSReport:
    lam: float
    alpha: float
    beta_d: float
    state: State
    mu: float
    omega: float
    transversality: float
    resonance_clear: bool
    b: tuple
    c: tuple
    k: tuple
    l: tuple
    xi20: complex
    xi11: complex
    xi02: complex
    xi21: complex
    c_star: float
    direction: Direction
    simulation_check: str = "not run"
    diagnostics: list[str] = field(default_factory=list)


def shift_coefficients(e: Equilibrium, p: Params) -> tuple[tuple, tuple]:
    """Taylor coefficients ``(b1..b7), (c1..c4)`` of the map shifted to ``e``."""
    x, y = float(e.state.x), float(e.state.y)
    lam, beta, alpha = p.lam, p.beta, p.alpha
    ed = math.exp(-y * (1.0 + alpha * y))
    s = 1.0 + 2.0 * alpha * y
    q2 = s * s - 2.0 * alpha          # -(d^2/dy^2 e^{-D}) / e^{-D}, sign flipped
    q3 = s * (6.0 * alpha - s * s)    # (d^3/dy^3 e^{-D}) / e^{-D}
    b = (
        -lam * ed / (1.0 + x) ** 3,
        -lam * s * ed / (1.0 + x) ** 2,
        lam * x * ed * q2 / (2.0 * (1.0 + x)),
        lam * ed / (1.0 + x) ** 4,
        lam * s * ed / (1.0 + x) ** 3,
        lam * ed * q2 / (2.0 * (1.0 + x) ** 2),
        lam * x * ed * q3 / (6.0 * (1.0 + x)),
    )
    c = (
        beta * ed * s,
        -beta * x * ed * q2 / 2.0,
        -beta * x * ed * q3 / 6.0,
        -beta * ed * q2 / 2.0,
    )
    return b, c


def linearizing_transform(j: Jacobian2) -> tuple[float, float, np.ndarray]:
    """``(mu, omega, L)`` with ``L^{-1} J L = [[mu, -omega], [omega, mu]]``."""
    tr, det = j.tr, j.det
    disc = 4.0 * det - tr * tr
    if disc <= 0:
        raise RegimeError("Jacobian has real eigenvalues; not a Neimark-Sacker point")
    mu = 0.5 * tr
    omega = 0.5 * math.sqrt(disc)
    L = np.array([[j.a12, 0.0], [mu - j.a11, -omega]])
    return mu, omega, L


def uv_coefficients(b, c, mu: float, omega: float, a11: float, a12: float) -> tuple[tuple, tuple]:
    """Coefficients ``k1..k7`` (first component times ``a12``) and ``l1..l7``.

    Monomial order in both: u^2, v^2, uv, u^3, v^3, u^2 v, u v^2.
    """
    if abs(a12) < 1e-12:
        raise RegimeError(f"degenerate transform: |a12| = {abs(a12):.3g} < 1e-12")
    b1, b2, b3, b4, b5, b6, b7 = b
    c1, c2, c3, c4 = c
    m = mu - a11
    w_ = omega
    k = (
        b1 * a12 ** 2 + b2 * a12 * m + b3 * m ** 2,
        b3 * w_ ** 2,
        -b2 * a12 * w_ - 2.0 * b3 * w_ * m,
        b4 * a12 ** 3 + b5 * a12 ** 2 * m + b6 * a12 * m ** 2 + b7 * m ** 3,
        -b7 * w_ ** 3,
        -b5 * a12 ** 2 * w_ - 2.0 * b6 * a12 * w_ * m - 3.0 * b7 * w_ * m ** 2,
        b6 * a12 * w_ ** 2 + 3.0 * b7 * m * w_ ** 2,
    )
    r = m / (a12 * w_)
    l = (
        r * k[0] - (c1 * a12 * m + c2 * m ** 2) / w_,
        b3 * m * w_ / a12 - c2 * w_,
        r * k[2] + c1 * a12 + 2.0 * c2 * m,
        r * k[3] - m ** 2 * (c3 * m + c4 * a12) / w_,
        -m * b7 * w_ ** 2 / a12 + c3 * w_ ** 2,
        r * k[5] + m * (3.0 * c3 * m + 2.0 * c4 * a12),
        r * k[6] - (3.0 * c3 * m + c4 * a12) * w_,
    )
    return k, l


def xi_coefficients(k, l, a12: float) -> tuple[complex, complex, complex, complex]:
    k1, k2, k3, k4, k5, k6, k7 = (v / a12 for v in k)
    l1, l2, l3, l4, l5, l6, l7 = l
    xi20 = complex(2 * k1 - 2 * k2 + 2 * l3, 2 * l1 - 2 * l2 - 2 * k3) / 8.0
    xi11 = complex(2 * k1 + 2 * k2, 2 * l1 + 2 * l2) / 4.0
    xi02 = complex(2 * k1 - 2 * k2 - 2 * l3, 2 * l1 - 2 * l2 + 2 * k3) / 8.0
    xi21 = complex(6 * k4 + 2 * k7 + 2 * l6 + 6 * l5, 6 * l4 + 2 * l7 - 2 * k6 - 6 * k5) / 16.0
    return xi20, xi11, xi02, xi21


def direction_coefficient(xi20, xi11, xi02, xi21, lam_plus: complex) -> float:
    lam_minus = lam_plus.conjugate()
    first = (1.0 - 2.0 * lam_plus) * lam_minus ** 2 / (1.0 - lam_plus) * xi20 * xi11
    return (first.real + 0.5 * abs(xi11) ** 2 + abs(xi02) ** 2
            - (lam_minus * xi21).real)


def _nearest_interior(p: Params, y_ref: float) -> Equilibrium:
    eqs = interior_equilibria(p)
    if not eqs:
        raise RegimeError(f"no interior steady state at beta={p.beta}")
    return min(eqs, key=lambda e: abs(e.state.y - y_ref))


def resonance_clear(tr: float, gap: float | None = None) -> bool:
    """False when the unit-modulus pair is close to a 1st-4th root of unity."""
    if gap is None:
        gap = RESONANCE_GAP
    return all(abs(tr - t) > gap for t in (2.0, -2.0, 0.0, -1.0))


def c_star(p: Params, e: Equilibrium | None = None, *, beta_step: float | None = None) -> NSReport:
    """Full coefficient chain and ``C*`` at ``p``, which should sit at ``beta_d``.

    ``e`` defaults to the interior steady state whose det J is closest to 1.
    """
    if beta_step is None:
        beta_step = FD_BETA_STEP
    if e is None:
        eqs = interior_equilibria(p)
        if not eqs:
            raise RegimeError(f"no interior steady state at beta={p.beta}")
        e = min(eqs, key=lambda q: abs(jacobian(q.state, p).det - 1.0))
    j = jacobian(e.state, p)
    mu, omega, _ = linearizing_transform(j)
    b, c = shift_coefficients(e, p)
    k, l = uv_coefficients(b, c, mu, omega, j.a11, j.a12)
    xi20, xi11, xi02, xi21 = xi_coefficients(k, l, j.a12)
    lam_plus = complex(mu, omega)
    # C* is defined on the unit circle; normalise away the tiny modulus defect
    value = direction_coefficient(xi20, xi11, xi02, xi21, lam_plus / abs(lam_plus))

    diagnostics = []
    modulus = abs(lam_plus)
    if abs(modulus - 1.0) > 1e-6:
        diagnostics.append(f"eigenvalue modulus {modulus:.12g} is not 1; beta is not at beta_d")
    y_ref = e.state.y
    hi = _nearest_interior(p.with_beta(p.beta + beta_step), y_ref)
    lo = _nearest_interior(p.with_beta(p.beta - beta_step), y_ref)
    ddet = (jacobian(hi.state, p.with_beta(p.beta + beta_step)).det
            - jacobian(lo.state, p.with_beta(p.beta - beta_step)).det) / (2.0 * beta_step)
    transversality = 0.5 * ddet
    clear = resonance_clear(j.tr)
    if not clear:
        diagnostics.append(f"trace {j.tr:.9g} within {RESONANCE_GAP} of a strong resonance")
    if transversality <= 0:
        diagnostics.append("eigenvalues do not cross the unit circle transversally")
    if not clear or abs(value) < DIRECTION_TOL:
        direction = Direction.INCONCLUSIVE
    elif value > 0:
        direction = Direction.SUPERCRITICAL
    else:
        direction = Direction.SUBCRITICAL
    return NSReport(p.lam, p.alpha, p.beta, e.state, mu, omega, transversality, clear,
                    tuple(b), tuple(c), tuple(k), tuple(l), xi20, xi11, xi02, xi21,
                    float(value), direction, diagnostics=diagnostics)


def neimark_sacker(lam: float, alpha: float, *, beta_max: float | None = None,
                   check_simulation: bool = False, **sim_kw) -> NSReport | None:
    """Locate ``beta_d`` for ``(lam, alpha)`` and evaluate the report there.

    Returns ``None`` when no crossing exists in the searched range.
    With ``check_simulation`` the predicted direction is compared with
    orbits at ``0.98 beta_d`` and ``1.02 beta_d``.
    """
    bd = _beta_d(lam, alpha, beta_max=beta_max)
    if bd is None:
        return None
    report = c_star(Params(lam, bd, alpha))
    if check_simulation:
        report.simulation_check = simulated_direction_check(report, **sim_kw)
        if report.simulation_check == "convention-mismatch":
            report.diagnostics.append("sign of C* disagrees with simulated dynamics")
    return report


def simulated_direction_check(report: NSReport, *, factor: float = 0.02, kick: float = 1e-2,
                              burn_in: int | None = None, window: int | None = None) -> str:
    from . import sim

    kw = {}
    if burn_in is not None:
        kw["burn_in"] = burn_in
    if window is not None:
        kw["window"] = window
    above = Params(report.lam, report.beta_d * (1.0 + factor), report.alpha)
    below = Params(report.lam, report.beta_d * (1.0 - factor), report.alpha)
    e_above = _nearest_interior(above, report.state.y).state
    e_below = _nearest_interior(below, report.state.y).state
    up = sim.classify_orbit((e_above.x + kick, e_above.y + kick), above, **kw)
    down = sim.classify_orbit((e_below.x + kick, e_below.y + kick), below, **kw)
    loop_above = up.attractor is sim.Attractor.INVARIANT_LOOP
    settles_below = (down.attractor is sim.Attractor.FIXED_POINT
                     and math.dist(down.state, e_below) < 1e-6)
    if report.direction is Direction.SUPERCRITICAL:
        return "consistent" if (loop_above and settles_below) else "convention-mismatch"
    if report.direction is Direction.SUBCRITICAL:
        small_loop = loop_above and up.mean_radius is not None and up.mean_radius < 10 * kick
        return "convention-mismatch" if small_loop else "consistent"
    return "inconclusive"

