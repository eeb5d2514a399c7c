"""Tests for the trace-polynomial recursion, zeros, key zeros and bands."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibtrace import trace_map as tm
from fibtrace import traces as tr
from fibtrace._recursion import xk_and_derivative, xk_table, xk_value

PHI = (1.0 + math.sqrt(5.0)) / 2.0
ACOSH_3_HALVES = 0.9624236501192069          # 40-digit value, rounded
LOG_X30_AT_E3 = 1295680.431875154            # mpmath recursion, lam=0, E=3


def fib_list(k_max):
    return [tr.fibonacci(k) for k in range(k_max + 1)]


def test_fibonacci_degree_convention():
    assert fib_list(8) == [1, 1, 2, 3, 5, 8, 13, 21, 34]


def test_seed_values():
    seq = tr.iterate_traces(0.7, 1.3, 2)
    assert seq.value(-1) == 1.0
    assert seq.value(0) == pytest.approx(0.65)
    assert seq.value(1) == pytest.approx(0.3)
    assert seq.derivative(-1) == 0.0
    assert seq.derivative(0) == 0.5
    assert seq.derivative(1) == 0.5


def test_recursion_example_at_zero():
    seq = tr.iterate_traces(0.0, 0.0, 2)
    assert seq.value(2) == -1.0
    assert seq.value(1) == 0.0
    assert seq.value(0) == 0.0


def test_free_case_closed_form():
    rng = np.random.default_rng(3)
    energies = rng.uniform(-1.99, 1.99, 25)
    xi = np.arccos(energies / 2.0)
    for k in (4, 9, 16):
        got = xk_value(0.0, energies, k)
        want = np.cos(tr.fibonacci(k) * xi)
        assert np.max(np.abs(got - want)) <= 1e-10


def test_escape_outside_free_spectrum():
    seq = tr.iterate_traces(0.0, 3.0, 50)
    assert seq.escaped_at is not None
    assert len(seq.values) == seq.escaped_at + 2


@given(st.floats(0.0, 1.5), st.floats(-2.5, 2.5), st.integers(3, 14))
@settings(max_examples=60)
def test_recursion_consistency(lam, energy, k):
    tab = xk_table(lam, np.array([energy]), k)[:, 0]
    recomputed = 2.0 * tab[-2] * tab[-3] - tab[-4]
    scale = max(1.0, abs(tab[-1]))
    assert abs(recomputed - tab[-1]) <= 1e-12 * scale


@pytest.mark.parametrize("lam,energy", [(0.0, 0.3), (0.5, -1.1), (1.0, 2.0)])
def test_derivative_matches_finite_differences(lam, energy):
    h = 1e-6
    for k in (5, 9, 12):
        _, der = xk_and_derivative(lam, np.array([energy]), k)
        fd = (xk_value(lam, energy + h, k) - xk_value(lam, energy - h, k)) / (2 * h)
        assert abs(der[0] - fd) <= 1e-5 * max(1.0, abs(fd))


def test_orbit_matches_trace_map_steps():
    # (x_k, x_{k-1}, x_{k-2}) is step applied k-1 times to the spectrum line point
    lam, energy = 0.0, 0.8
    p = tm.spectrum_line_point(lam, energy)
    for k in range(2, 12):
        p = tm.step(p)
        tab = xk_table(lam, np.array([energy]), k)[:, 0]
        assert math.dist(p, (tab[k + 1], tab[k], tab[k - 1])) <= 1e-10


def test_zeros_quadratic_case():
    zeros = tr.zeros_of_xk(0.0, 2)
    assert np.allclose(zeros, [-math.sqrt(2.0), math.sqrt(2.0)], atol=1e-12)


def test_zeros_free_closed_form_k4():
    zeros = tr.zeros_of_xk(0.0, 4)
    expected = np.sort(2.0 * np.cos(np.pi * (2 * np.arange(5) + 1) / 10.0))
    assert np.allclose(zeros, expected, atol=1e-10)


def test_zero_count_at_k10():
    assert len(tr.zeros_of_xk(0.2, 10)) == 89


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.5, 1.0])
def test_zero_counts_through_k12(lam):
    for k in range(1, 13):
        assert len(tr.zeros_of_xk(lam, k)) == tr.fibonacci(k)


def _bisection_zero_oracle(lam, k, grid_mult=32):
    """Sign-change scan plus bisection; adequate below the clustering scale."""
    n = grid_mult * tr.fibonacci(k)
    grid = np.linspace(-2.0 - lam - 0.1, 2.0 + lam + 0.1, n)
    vals = xk_value(lam, grid, k)
    sign_flip = np.where(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    zeros = []
    for i in sign_flip:
        lo, hi = grid[i], grid[i + 1]
        flo = vals[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = float(xk_value(lam, mid, k))
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        zeros.append(0.5 * (lo + hi))
    return np.array(zeros)


@pytest.mark.parametrize("lam", [0.2, 0.5, 1.0])
def test_zeros_match_bisection_oracle(lam):
    for k in (6, 8, 10):
        got = tr.zeros_of_xk(lam, k)
        oracle = _bisection_zero_oracle(lam, k)
        assert len(oracle) == len(got)
        assert np.max(np.abs(got - oracle)) <= 1e-9


def test_zero_residuals_scaled():
    for lam, k in [(0.1, 12), (0.5, 14)]:
        zeros = tr.zeros_of_xk(lam, k)
        val, der = xk_and_derivative(lam, zeros, k)
        # attainable residual: derivative times one ulp of the energy
        bound = np.maximum(1e-12, 8.0 * np.abs(der) * np.finfo(float).eps
                           * np.maximum(1.0, np.abs(zeros)))
        assert np.all(np.abs(val) <= bound)


def test_zeros_of_adjacent_levels_stay_apart():
    for lam in (0.3, 0.7):
        for k in (6, 9, 12):
            a = tr.zeros_of_xk(lam, k)
            b = tr.zeros_of_xk(lam, k + 1)
            dists = np.abs(a[:, None] - b[None, :])
            assert dists.min() > 1e-12


def test_free_case_shares_the_cycle_zero():
    # E = 0 hits the period-6 point (0,0,1) exactly, so consecutive levels
    # with odd degree share that zero; coupling breaks the coincidence
    a = tr.zeros_of_xk(0.0, 6)
    b = tr.zeros_of_xk(0.0, 7)
    assert np.abs(a).min() < 1e-12 and np.abs(b).min() < 1e-12
    a = tr.zeros_of_xk(0.1, 6)
    b = tr.zeros_of_xk(0.1, 7)
    assert np.abs(a[:, None] - b[None, :]).min() > 1e-6


def test_free_case_derivative_at_zeros():
    k = 10
    zeros = tr.zeros_of_xk(0.0, k)
    der, _ = tr.zero_rates(0.0, k, zeros)
    xi = np.arccos(zeros / 2.0)
    expected = tr.fibonacci(k) / (2.0 * np.sin(xi))
    assert np.max(np.abs(np.abs(der) - expected) / expected) <= 1e-8


def test_key_zero_rate_window():
    # some zero sits within 0.05 of the growth rate; the shadow-selected one
    # is reproducible and carries a maximal terminal shadow
    lam, k = 0.1, 14
    d = tm.growth_rate(lam)
    zeros = tr.zeros_of_xk(lam, k)
    _, rates = tr.zero_rates(lam, k, zeros)
    assert np.abs(rates - d).min() <= 0.05
    kz = tr.key_zero(lam, k, zeros=zeros)
    shadows = tr.shadow_lengths(lam, k, zeros)
    assert kz.shadow_length == shadows.max()


def test_key_zero_free_limit_rates():
    # rates at all zeros approach log(phi) as the coupling vanishes
    k = 12
    zeros = tr.zeros_of_xk(1e-9, k)
    _, rates = tr.zero_rates(1e-9, k, zeros)
    xi = np.arccos(np.clip(zeros / 2.0, -1.0, 1.0))
    expected = np.log(tr.fibonacci(k) / (2.0 * np.sin(xi))) / k
    assert np.max(np.abs(rates - expected)) <= 1e-6


def test_key_zero_gap_shrinks_within_family():
    # within one phase family (every third level here) the gap decreases
    lam = 0.1
    d = tm.growth_rate(lam)
    gaps = []
    for k in (10, 13, 16):
        kz = tr.key_zero(lam, k)
        gaps.append(abs(kz.rate - d))
    assert gaps[2] < gaps[1] < gaps[0]


def test_key_zero_preconditions():
    with pytest.raises(ValueError):
        tr.key_zero(0.0, 12)
    with pytest.raises(ValueError):
        tr.key_zero(0.1, 4)


def test_band_single_interval_free_case():
    bands = tr.band_components(0.0, 1, 0.0)
    assert len(bands) == 1
    band = bands[0]
    assert band.lo == pytest.approx(-2.0, abs=1e-9)
    assert band.hi == pytest.approx(2.0, abs=1e-9)
    assert band.zeros_inside == 1


def test_band_large_delta_single_band():
    bands = tr.band_components(0.0, 6, 10.0)
    assert len(bands) == 1
    assert bands[0].zeros_inside == tr.fibonacci(6)


def test_band_edges_sit_on_level():
    lam, k, delta = 0.2, 8, 0.2 ** 2 / 8.0
    bands = tr.band_components(lam, k, delta)
    assert sum(b.zeros_inside for b in bands) == tr.fibonacci(k)
    for band in bands:
        for edge in (band.lo, band.hi):
            val, der = xk_and_derivative(lam, np.array([edge]), k)
            bound = max(1e-12, 8.0 * abs(der[0]) * np.finfo(float).eps) \
                + abs(der[0]) * 1e-12
            assert abs(abs(val[0]) - (1.0 + delta)) <= bound
        inside = np.linspace(band.lo, band.hi, 50)
        assert np.max(np.abs(xk_value(lam, inside, k))) <= 1.0 + delta + 1e-9


def test_bands_sorted_disjoint():
    bands = tr.band_components(0.5, 10, 0.01)
    for left, right in zip(bands[:-1], bands[1:]):
        assert left.hi < right.lo


def test_key_band_single_zero():
    for lam in (0.1, 0.2):
        delta = lam * lam / 8.0
        for k in (8, 10, 12):
            zeros = tr.zeros_of_xk(lam, k)
            kz = tr.key_zero(lam, k, zeros=zeros)
            band = tr.band_containing(lam, k, delta, kz.energy_k, zeros=zeros)
            assert band.zeros_inside == 1


def test_band_containing_rejects_gap_energy():
    bands = tr.band_components(1.0, 8, 0.0)
    gap_point = 0.5 * (bands[0].hi + bands[1].lo)
    with pytest.raises(ValueError):
        tr.band_containing(1.0, 8, 0.0, gap_point)


def test_overflow_switches_to_log_tracking():
    seq = tr.iterate_traces(0.0, 3.0, 40, escape_threshold=math.inf)
    assert seq.escaped_at is None
    assert seq.log_tail, "expected the log tail to engage"
    tail = dict((k, l) for k, _, l in seq.log_tail)
    assert 30 in tail
    assert abs(tail[30] - LOG_X30_AT_E3) <= 1e-9 * LOG_X30_AT_E3
    # asymptotic slope: log|x_k| ~ F_k acosh(3/2)
    assert abs(tail[40] / tr.fibonacci(40) - ACOSH_3_HALVES) < 1e-6


def test_extended_precision_matches_double():
    fast = tr.iterate_traces(0.4, 1.1, 18)
    slow = tr.iterate_traces(0.4, 1.1, 18, precision="extended")
    assert np.max(np.abs(fast.values - slow.values)) <= 1e-9
    assert np.max(np.abs(fast.derivatives - slow.derivatives)) \
        <= 1e-9 * np.max(np.abs(slow.derivatives))


def test_extended_precision_is_reference_quality():
    # at escape-adjacent energies the double recursion loses digits; the
    # extended run should match an independent high-precision recursion
    from mpmath import mp, mpf
    lam, energy, k_max = 0.3, 2.299, 25
    seq = tr.iterate_traces(lam, energy, k_max, escape_threshold=math.inf,
                            precision="extended")
    with mp.workdps(60):
        xs = [mpf(1), mpf(energy) / 2, (mpf(energy) - mpf(lam)) / 2]
        for k in range(2, k_max + 1):
            xs = [xs[1], xs[2], 2 * xs[2] * xs[1] - xs[0]]
        ref = float(xs[2])
    if seq.log_tail:
        pytest.skip("orbit overflowed before k_max; covered elsewhere")
    assert seq.value(k_max) == pytest.approx(ref, rel=1e-9)


def test_iterate_traces_validation():
    with pytest.raises(ValueError):
        tr.iterate_traces(0.1, 0.0, 0)
    with pytest.raises(ValueError):
        tr.iterate_traces(0.1, 0.0, 5, escape_threshold=0.5)
    with pytest.raises(ValueError):
        tr.iterate_traces(0.1, 0.0, 5, precision="quad")


def test_zero_count_error_is_loud():
    with pytest.raises(ValueError):
        tr.zeros_of_xk(0.3, 0)


def test_zeros_csv_round_trip():
    zeros = tr.zeros_of_xk(0.2, 6)
    text = tr.zeros_to_csv(0.2, 6, zeros)
    lines = text.strip().split("\n")
    assert lines[0] == "lambda,k,index,energy,derivative,rate"
    assert len(lines) == 1 + tr.fibonacci(6)
    back = float(lines[1].split(",")[3])
    assert back == zeros[0]


def test_bands_csv_header():
    bands = tr.band_components(0.2, 5, 0.01)
    text = tr.bands_to_csv(bands)
    assert text.startswith("lambda,k,delta,lo,hi,zeros_inside")
