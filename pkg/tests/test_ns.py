import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coophunt.equilibria import interior_equilibria
from coophunt.errors import RegimeError
from coophunt.model import Params
from coophunt.ns import (Direction, c_star, direction_coefficient, linearizing_transform,
                         neimark_sacker, resonance_clear, shift_coefficients, uv_coefficients,
                         xi_coefficients)
from coophunt.stability import Jacobian2, jacobian
from oracles import lyapunov_invariant, shift_coefficients_fd, uv_coefficients_fd, xi_fd


def _close(a, b, rel=1e-5, floor=1e-12):
    return all(abs(x - y) <= rel * max(abs(y), floor) for x, y in zip(a, b))


@pytest.fixture(scope="module")
def fig3a():
    return neimark_sacker(5, 1 / 2.1)


def test_reference_report(fig3a):
    r = fig3a
    assert r.beta_d == pytest.approx(0.6, abs=0.02)
    assert abs(r.mu ** 2 + r.omega ** 2 - 1) <= 1e-9
    assert r.omega > 0 and r.transversality > 0 and r.resonance_clear
    assert r.c_star > 0 and r.direction is Direction.SUPERCRITICAL
    assert r.diagnostics == []


def test_strong_cooperation_report():
    r = neimark_sacker(5, 3 / 2.1)
    assert r.direction is Direction.SUPERCRITICAL and r.transversality > 0


def test_shift_coefficient_signs(fig3a):
    r = fig3a
    assert r.b[0] < 0 and r.c[0] > 0


def test_linearizing_transform_examples(fig3a):
    mu, omega, L = linearizing_transform(Jacobian2(0, -1, 1, 0))
    assert (mu, omega) == (0, 1)
    j = jacobian(fig3a.state, Params(5, fig3a.beta_d, 1 / 2.1))
    mu, omega, L = linearizing_transform(j)
    conj = np.linalg.solve(L, j.matrix @ L)
    assert np.allclose(conj, [[mu, -omega], [omega, mu]], atol=1e-9)
    with pytest.raises(RegimeError):
        linearizing_transform(Jacobian2(0.5, 0, 0, 0.2))


def test_uv_identities():
    b = (0.3, -1.1, 0.7, 0.2, -0.4, 0.9, 0.05)
    c = (0.6, -0.2, 0.1, -0.3)
    k, l = uv_coefficients(b, c, 0.4, 0.9, 1.2, -0.8)
    assert k[1] == pytest.approx(b[2] * 0.9 ** 2)
    k0, l0 = uv_coefficients((0,) * 7, (0,) * 4, 0.4, 0.9, 1.2, -0.8)
    assert k0 == (0,) * 7 and l0 == (0,) * 7
    with pytest.raises(RegimeError):
        uv_coefficients(b, c, 0.4, 0.9, 1.2, 1e-13)


def test_xi_identities():
    assert xi_coefficients((0,) * 7, (0,) * 7, 1.7) == (0, 0, 0, 0)
    k = (0.3, -0.5, 0.2, 0.1, 0.4, -0.6, 0.7)
    l = (0.9, 0.8, -0.1, 0.2, 0.3, -0.4, 0.5)
    a12 = -1.3
    xi11 = xi_coefficients(k, l, a12)[1]
    assert xi11 == pytest.approx(0.25 * complex(2 * k[0] / a12 + 2 * k[1] / a12,
                                                2 * l[0] + 2 * l[1]))


def test_direction_from_sign():
    lp = complex(math.cos(1.0), math.sin(1.0))
    assert direction_coefficient(0, 0, 0, 0, lp) == 0
    assert direction_coefficient(0, 0, 0, complex(-1, 0), lp) == pytest.approx(math.cos(1.0))


def test_resonance_guard():
    assert resonance_clear(0.5)
    for tr in (2.0, -2.0, 0.0, -1.0):
        assert not resonance_clear(tr + 5e-7)


def test_off_threshold_reports_modulus_diagnostic(fig3a):
    r = c_star(Params(5, fig3a.beta_d * 1.01, 1 / 2.1))
    assert any("modulus" in d for d in r.diagnostics)


def test_coefficients_match_finite_differences(fig3a):
    r = fig3a
    s = (r.state.x, r.state.y)
    b, c = shift_coefficients_fd(s, 5, r.beta_d, 1 / 2.1)
    k, l = uv_coefficients_fd(s, 5, r.beta_d, 1 / 2.1)
    xi = xi_fd(s, 5, r.beta_d, 1 / 2.1)
    assert _close(r.b, b) and _close(r.c, c) and _close(r.k, k) and _close(r.l, l)
    assert _close((r.xi20, r.xi11, r.xi02, r.xi21), xi)


@given(st.floats(2.0, 20.0), st.floats(0.0, 3.0))
def test_c_star_sign_matches_invariant_formula(lam, alpha):
    r = neimark_sacker(lam, alpha)
    if r is None or r.direction is Direction.INCONCLUSIVE:
        return
    d = lyapunov_invariant((r.state.x, r.state.y), lam, r.beta_d, alpha)
    assert abs(d) > 1e-8
    assert math.copysign(1, r.c_star) == -math.copysign(1, d)


def test_shift_coefficients_direct():
    p = Params(8, 0.4, 0.7)
    e = interior_equilibria(p)[0]
    b, c = shift_coefficients(e, p)
    bf, cf = shift_coefficients_fd(e.state, 8, 0.4, 0.7)
    assert _close(b, bf) and _close(c, cf)
