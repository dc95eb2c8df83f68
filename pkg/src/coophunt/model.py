"""The dimensionless predator-prey map with cooperative hunting.

    x' = lam * x / (1 + x) * exp(-D)
    y' = beta * x * (1 - exp(-D)),      D = y * (1 + alpha * y)

``x`` is prey, ``y`` predator. ``alpha`` scales the cooperative term in the
encounter exponent; ``alpha = 0`` recovers the no-cooperation model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, ParameterError, RegimeError


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class RawParams:
    """Biological parameters before rescaling.

    ``a`` is the searching efficiency, ``k`` the prey crowding coefficient.
    """

    lam: float
    a: float
    k: float
    beta_raw: float
    alpha_raw: float = 0.0

    def __post_init__(self):
        for name in ("lam", "a", "k", "beta_raw", "alpha_raw"):
            _check_finite(name, getattr(self, name))
        if self.lam <= 0:
            raise ParameterError(f"lam must be > 0, got {self.lam}")
        if self.a <= 0 or self.k <= 0:
            raise ParameterError(f"a and k must be > 0, got a={self.a}, k={self.k}")
        if self.beta_raw <= 0:
            raise ParameterError(f"beta_raw must be > 0, got {self.beta_raw}")
        if self.alpha_raw < 0:
            raise ParameterError(f"alpha_raw must be >= 0, got {self.alpha_raw}")


@dataclass(frozen=True)
class Params:
    lam: float
    beta: float
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("lam", "beta", "alpha"):
            _check_finite(name, getattr(self, name))
        if self.lam <= 0:
            raise ParameterError(f"lam must be > 0, got {self.lam}")
        if self.beta <= 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if self.alpha < 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")

    @property
    def x_bar(self) -> float:
        """Prey carrying capacity ``lam - 1``; only defined for ``lam > 1``."""
        if self.lam <= 1:
            raise RegimeError(f"x_bar = lam - 1 requires lam > 1, got lam={self.lam}")
        return self.lam - 1.0

    @property
    def reproductive_number(self) -> float:
        """Predator growth factor with prey held at carrying capacity."""
        return self.beta * self.x_bar

    @property
    def cooperation_threshold(self) -> float:
        """(3 lam - 1) / (lam - 1); compared against ``2 alpha`` throughout."""
        return (3.0 * self.lam - 1.0) / self.x_bar

    def with_beta(self, beta: float) -> "Params":
        return Params(self.lam, beta, self.alpha)


class State(NamedTuple):
    x: float
    y: float


def nondimensionalize(raw: RawParams) -> Params:
    """Rescale ``x -> k x``, ``y -> a y``; returns (lam, beta a / k, alpha / a)."""
    return Params(raw.lam, raw.beta_raw * raw.a / raw.k, raw.alpha_raw / raw.a)


def diamond(y, alpha):
    """Encounter exponent ``y (1 + alpha y)``."""
    return y * (1.0 + alpha * y)


def step(s, p: Params) -> State:
    """Apply the map once.

    Works elementwise on numpy arrays as well as on scalars.
    """
    x, y = s
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DivergenceError(f"non-finite state {s!r}")
    d = y * (1.0 + p.alpha * y)
    x_next = p.lam * x / (1.0 + x) * np.exp(-d)
    y_next = -p.beta * x * np.expm1(-d)
    return State(x_next, y_next)


def orbit(s0, p: Params, n: int) -> np.ndarray:
    """Return the ``(n + 1, 2)`` array of states ``s0, F(s0), ..., F^n(s0)``."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    x, y = float(s0[0]), float(s0[1])
    if x < 0 or y < 0:
        raise ParameterError(f"initial state must be nonnegative, got {s0!r}")
    out = np.empty((n + 1, 2))
    out[0] = x, y
    lam, beta, alpha = p.lam, p.beta, p.alpha
    exp, expm1 = np.exp, np.expm1
    # numpy ufuncs, not math: libm rounds differently in the last ulp and
    # orbits must match step() and the batched iteration in sim bit for bit
    for i in range(1, n + 1):
        d = y * (1.0 + alpha * y)
        x, y = lam * x / (1.0 + x) * exp(-d), -beta * x * expm1(-d)
        out[i] = x, y
    if not np.all(np.isfinite(out)):
        bad = int(np.argmax(~np.isfinite(out).all(axis=1)))
        raise DivergenceError(f"orbit became non-finite at step {bad}")
    return out
