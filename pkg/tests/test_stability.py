import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from coophunt.equilibria import Equilibrium, Kind, interior_equilibria, isocline_f, y_c
from coophunt.errors import RegimeError
from coophunt.model import Params, State
from coophunt.stability import (Jacobian2, Tag, V, beta_d, classify, classify_jacobian,
                                critical_set, det_J_interior, global_extinction_condition,
                                jacobian, jacobian_interior, persistence_condition, y_d, y_t)
from oracles import beta_for_ordinate, det_one_crossing

lams = st.floats(1.1, 20.0)
alphas = st.floats(0.0, 15.0)


def _e(x, y, kind=Kind.INTERIOR):
    return Equilibrium(State(x, y), kind, 0.0)


def test_jacobian_at_boundary_states():
    p = Params(5, 0.3, 2.0)
    j0 = jacobian((0, 0), p)
    assert (j0.a11, j0.a12, j0.a21, j0.a22) == (5, 0, 0, 0)
    j1 = jacobian((4, 0), p)
    assert j1.a21 == 0 and j1.a22 == pytest.approx(0.3 * 4)


def test_jacobian_forms_agree_at_interior():
    p = Params(5, 0.525, 1 / 2.1)
    e = interior_equilibria(p)[0]
    a, b = jacobian(e.state, p), jacobian_interior(e.state.y, p)
    for u, v in zip((a.a11, a.a12, a.a21, a.a22), (b.a11, b.a12, b.a21, b.a22)):
        assert u == pytest.approx(v, abs=1e-9)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_jacobian2_invariants(a11, a12, a21, a22):
    j = Jacobian2(a11, a12, a21, a22)
    assert j.det == pytest.approx(np.linalg.det(j.matrix), rel=1e-12, abs=1e-12)
    scale = 1 + abs(j.tr) ** 2 + abs(j.det)
    for z in j.eigenvalues:
        assert abs(z * z - j.tr * z + j.det) <= 1e-10 * scale


@pytest.mark.parametrize("p, state, tag", [
    (Params(0.5, 0.3), (0, 0), Tag.SINK),
    (Params(5, 0.3), (0, 0), Tag.SADDLE),
    (Params(5, 0.21, 1.7), (4, 0), Tag.SINK),
    (Params(5, 0.525), (4, 0), Tag.SADDLE),
])
def test_classify_boundary(p, state, tag):
    assert classify(_e(*state, kind=Kind.ORIGIN), p).tag is tag


def test_classify_rotation_is_nonhyperbolic():
    c = classify_jacobian(Jacobian2(0, -1, 1, 0))
    assert c.tag is Tag.NONHYPERBOLIC and c.marginal


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_sink_iff_jury(a11, a12, a21, a22):
    j = Jacobian2(a11, a12, a21, a22)
    c = classify_jacobian(j)
    assume(c.tag is not Tag.NONHYPERBOLIC)
    assume(min(abs(abs(1 + j.det) - abs(j.tr)), abs(1 - j.det)) > 1e-9)
    assert (c.tag is Tag.SINK) == (abs(j.tr) < 1 + j.det and j.det < 1)


def test_det_examples():
    p = Params(10, 0.3, 5 / 2.1)
    assert det_J_interior(0.0, p) == pytest.approx(0.1, abs=1e-15)
    assert det_J_interior(1e-9, p) == pytest.approx(0.1, abs=1e-6)
    yc = y_c(p)
    assert det_J_interior(yc, p) >= 10 * math.log(10) / 9
    y = 0.5
    assert y < yc
    x = float(isocline_f(y, p))
    # beta that puts the steady state at y, so (x, y) is a fixed point
    beta = beta_for_ordinate(10, 5 / 2.1, y)
    q = p.with_beta(beta)
    assert det_J_interior(y, q) == pytest.approx(jacobian((x, y), q).det, rel=1e-9)


def test_y_d_examples():
    p = Params(10, 6.3 / 20, 5 / 2.1)
    yd = y_d(p)
    assert 0 < yd < y_c(p)
    assert yd == pytest.approx(det_one_crossing(10, 5 / 2.1, y_c(p)), abs=1e-9)
    assert det_J_interior(yd - 0.01, p) < 1 < det_J_interior(yd + 0.01, p)
    assert abs(det_J_interior(yd, p) - 1) <= 1e-10


def test_V_examples():
    p = Params(10, 6.3 / 20, 1.5 / 2.1)
    assert V(0.0, p) == 0
    assert abs(V(1e-12, p)) < 1e-9
    ys = np.linspace(0, y_c(p), 4001)[1:-1]
    assert np.all(V(ys, p) > 0)
    assert y_t(p) is None


def test_y_t_present():
    p = Params(10, 6.3 / 20, 15 / 2.1)
    t = y_t(p)
    yc = y_c(p)
    assert 0 < t < yc
    assert V(t / 2, p) < 0 < V((t + yc) / 2, p)
    assert abs(V(t, p)) <= 1e-10


def test_y_t_preconditions():
    with pytest.raises(RegimeError):
        y_t(Params(10, 0.3, 0.4))
    with pytest.raises(RegimeError):
        y_t(Params(0.9, 0.3, 2))


def test_beta_d_reference():
    bd = beta_d(5, 1 / 2.1)
    assert bd == pytest.approx(0.6, abs=0.02)
    p = Params(5, bd, 1 / 2.1)
    yd = y_d(p)
    assert bd == pytest.approx(beta_for_ordinate(5, 1 / 2.1, yd), rel=1e-9)
    e = interior_equilibria(p)[0]
    j = jacobian(e.state, p)
    assert abs(j.det - 1) <= 1e-9
    assert all(abs(m - 1) <= 1e-6 for m in j.moduli)
    below, above = p.with_beta(bd - 0.05), p.with_beta(bd + 0.05)
    assert classify(interior_equilibria(below)[0], below).tag is Tag.SINK
    assert classify(interior_equilibria(above)[0], above).tag is not Tag.SINK


def test_beta_d_absent_when_range_too_short():
    assert beta_d(5, 1 / 2.1, beta_max=0.3) is None
    with pytest.raises(RegimeError):
        beta_d(1.0, 0.3)


@pytest.mark.parametrize("p, expected", [
    (Params(5, 0.2, 0.4), True), (Params(5, 0.2, 2), False), (Params(5, 0.1, 2), True)])
def test_global_extinction_condition(p, expected):
    assert global_extinction_condition(p) is expected


def test_persistence_condition():
    assert persistence_condition(Params(5, 0.525, 3.0))
    assert not persistence_condition(Params(0.9, 3.0))
    assert not persistence_condition(Params(5, 0.21))


def test_critical_set():
    cs = critical_set(Params(10, 0.09, 15))
    assert 0 < cs.y_d < cs.y_c and 0 < cs.y_t < cs.y_c
    assert cs.beta_star == pytest.approx(0.066502, abs=1e-5)
    weak = critical_set(Params(5, 0.3, 1 / 2.1))
    assert weak.y_t is None and weak.beta_star is None
    assert weak.beta_d == pytest.approx(beta_d(5, 1 / 2.1))


@given(lams, alphas, st.floats(0.0, 1.0))
def test_det_increasing(lam, alpha, _):
    p = Params(lam, 1.0, alpha)
    ys = np.linspace(0, y_c(p), 2048)
    d = det_J_interior(ys, p)
    assert np.all(np.diff(d) > 0)


@given(lams, alphas, st.floats(0.02, 0.98))
def test_formula_consistency(lam, alpha, frac):
    p0 = Params(lam, 1.0, alpha)
    y = frac * y_c(p0)
    p = p0.with_beta(beta_for_ordinate(lam, alpha, y))
    x = float(isocline_f(y, p))
    j = jacobian((x, y), p)
    assert float(det_J_interior(y, p)) == pytest.approx(j.det, rel=1e-9, abs=1e-12)
    assert float(V(y, p)) == pytest.approx(1 + j.det - j.tr, rel=1e-9, abs=1e-9)


@given(lams, alphas, st.floats(0.01, 4.0))
def test_interior_sign_pattern_and_jury(lam, alpha, beta):
    p = Params(lam, beta, alpha)
    for e in interior_equilibria(p):
        j = jacobian(e.state, p)
        assert j.a11 > 0 and -j.a12 > 0 and j.a21 > 0 and j.a22 > 0
        assert -j.tr < 1 + j.det


@given(lams, st.floats(0.0, 0.5), st.floats(1.01, 6.0))
def test_V_positive_for_weak_cooperation(lam, alpha, r0):
    p = Params(lam, r0 / (lam - 1), alpha)
    (e,) = interior_equilibria(p)
    assert float(V(e.state.y, p)) > 0
