"""Tests for the trace map, its conserved quantity and the growth law."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibtrace import trace_map as tm

PHI = (1.0 + math.sqrt(5.0)) / 2.0

# frozen with 40-digit arithmetic from the closed form
D_OF_1 = 0.5490770487903652
D_OF_HALF = 0.4993931071294268
TAYLOR_COEFF = 0.07453559924999299


def test_step_fixed_point():
    assert tm.step((1.0, 1.0, 1.0)) == (1.0, 1.0, 1.0)


def test_step_basic():
    assert tm.step((0.0, 0.0, 1.0)) == (-1.0, 0.0, 0.0)


def test_three_steps_reach_antipode():
    p = tm.TracePoint(0.0, 0.0, 1.7)
    for _ in range(3):
        p = tm.step(p)
    assert p == (0.0, 0.0, -1.7)


def test_six_cycle_closes():
    a = math.sqrt(1.0 + 0.3 ** 2 / 4.0)
    pts = tm.six_cycle(a)
    assert len(pts) == 6
    assert tm.step(pts[-1]) == pts[0]


def test_inverse_step_examples():
    assert tm.inverse_step((-1.0, 0.0, 0.0)) == (0.0, 0.0, 1.0)
    assert tm.inverse_step((1.0, 1.0, 1.0)) == (1.0, 1.0, 1.0)


@given(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)))
def test_step_inverse_round_trip(p):
    q = tm.inverse_step(tm.step(p))
    assert math.dist(q, p) <= 1e-14 * max(1.0, abs(p[0]), abs(p[1]), abs(p[2]))
    r = tm.step(tm.inverse_step(p))
    assert math.dist(r, p) <= 1e-14 * max(1.0, abs(p[0]), abs(p[1]), abs(p[2]))


def test_invariant_examples():
    assert tm.invariant((1.0, 1.0, 1.0)) == 0.0
    for lam in (0.0, 0.4, 1.3):
        for energy in (-1.7, 0.0, 2.2):
            p = tm.spectrum_line_point(lam, energy)
            assert abs(tm.invariant(p) - lam * lam / 4.0) < 1e-14


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=50)
def test_invariant_conserved_one_step(x, y, z):
    p = (x, y, z)
    assert abs(tm.invariant(tm.step(p)) - tm.invariant(p)) <= 1e-12


def test_invariant_drift_along_bounded_orbit():
    p = tm.torus_semiconjugacy(math.sqrt(2.0) - 1.0, math.sqrt(3.0) - 1.0)
    g0 = tm.invariant(p)
    for _ in range(1000):
        p = tm.step(p)
        assert abs(tm.invariant(p) - g0) <= 1e-9


def test_jacobian_rows():
    j = tm.jacobian((0.5, -0.25, 2.0))
    assert np.allclose(j, [[-0.5, 1.0, -1.0], [1, 0, 0], [0, 1, 0]])


@pytest.mark.parametrize("point", [(0.3, -1.2, 0.7), (2.0, 0.0, -1.0), (0.0, 0.0, 1.0)])
def test_jacobian_unimodular(point):
    # det DT = -1 identically: unsigned volume is preserved and the
    # six-step composition has determinant (+1)
    assert abs(np.linalg.det(tm.jacobian(point)) + 1.0) < 1e-12
    assert abs(np.linalg.det(tm.six_cycle_jacobian(1.3)) - 1.0) < 1e-9


def test_six_step_jacobian_at_one():
    m = tm.six_cycle_jacobian(1.0)
    assert np.allclose(m, [[13, 8, 0], [8, 5, 0], [0, 0, 1]], atol=1e-12)


@pytest.mark.parametrize("a", [1.0, 1.15, 1.6])
def test_six_step_jacobian_general_a(a):
    m = tm.six_cycle_jacobian(a)
    expected = np.array([
        [16 * a ** 4 - 4 * a ** 2 + 1, 8 * a ** 3, 0],
        [8 * a ** 3, 4 * a ** 2 + 1, 0],
        [0, 0, 1],
    ])
    assert np.allclose(m, expected, rtol=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.5, 1.0, 2.0])
def test_six_step_eigenvalue_set(lam):
    a2 = 1.0 + lam * lam / 4.0
    root = 4.0 * a2 * math.sqrt(4.0 * a2 * a2 + 1.0)
    expected = np.sort([1.0, 8.0 * a2 * a2 + 1.0 - root, 8.0 * a2 * a2 + 1.0 + root])
    rep = tm.multiplier_report(lam)
    assert np.allclose(rep.dt6_eigenvalues, expected, rtol=1e-10)


def test_multiplier_at_zero_coupling():
    rep = tm.multiplier_report(0.0)
    assert abs(rep.d_lambda - math.log(PHI)) < 1e-12
    expected = np.sort([1.0, 9.0 - 4.0 * math.sqrt(5.0), 9.0 + 4.0 * math.sqrt(5.0)])
    assert np.allclose(rep.dt6_eigenvalues, expected, atol=1e-12)


def test_growth_rate_frozen_values():
    assert abs(tm.growth_rate(1.0) - D_OF_1) < 1e-14
    assert abs(tm.growth_rate(0.5) - D_OF_HALF) < 1e-14


@pytest.mark.parametrize("lam", [0.05, 0.1, 0.5, 1.0, 1.5, 2.0])
def test_closed_form_matches_eigen_route(lam):
    rep = tm.multiplier_report(lam)
    assert abs(rep.closed_form_log_mu - rep.numerical_log_mu) < 1e-10


def test_small_coupling_taylor_coefficient():
    assert abs(tm.GROWTH_RATE_QUADRATIC_COEFF - TAYLOR_COEFF) < 1e-15
    ratio = (tm.growth_rate(1e-4) - tm.LOG_PHI) / 1e-8
    assert abs(ratio - TAYLOR_COEFF) < 1e-6


def test_growth_rate_strictly_increasing():
    lams = np.linspace(0.0, 2.0, 101)
    d = np.array([tm.growth_rate(l) for l in lams])
    assert np.all(np.diff(d) > 0)
    assert abs(d[0] - tm.LOG_PHI) < 1e-12


def test_growth_rate_rejects_negative():
    with pytest.raises(ValueError):
        tm.growth_rate(-0.1)
    with pytest.raises(ValueError):
        tm.Coupling(-1.0)


def test_torus_map_examples():
    assert tm.torus_semiconjugacy(0.0, 0.0) == (1.0, 1.0, 1.0)
    p = tm.torus_semiconjugacy(0.25, 0.0)
    assert math.dist(p, (0.0, 0.0, 1.0)) < 1e-15


def test_torus_shift_orbit_period_six():
    pt = (0.25, 0.0)
    orbit = [pt]
    for _ in range(6):
        orbit.append(tm.torus_shift(*orbit[-1]))
    assert orbit[6] == pytest.approx(pt)
    expected = [(0.25, 0.0), (0.25, 0.25), (0.5, 0.25), (0.75, 0.5),
                (0.25, 0.75), (0.0, 0.25)]
    for got, want in zip(orbit[:6], expected):
        assert got == pytest.approx(want)


def test_conjugacy_identity_on_grid():
    worst = 0.0
    grid = np.arange(100) / 100.0
    for theta in grid:
        for phi in grid:
            lhs = tm.torus_semiconjugacy(*tm.torus_shift(theta, phi))
            rhs = tm.step(tm.torus_semiconjugacy(theta, phi))
            worst = max(worst, math.dist(lhs, rhs))
    assert worst <= 1e-12


def test_coupling_surface_level():
    c = tm.Coupling(0.6)
    assert c.surface_level == pytest.approx(1.09)
    assert c.cycle_apex == pytest.approx(math.sqrt(1.09))
