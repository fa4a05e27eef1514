import math

import numpy as np
import pytest

from s6vlab.sixvertex import (
    S6VParams,
    SlopeOutOfLiquidRegion,
    WidthTooLarge,
    exact_height_pmf,
    qlaplace_of_height,
    qlaplace_of_samples,
    rescaled_height,
    sample_height,
    sample_heights,
    scaling_constants,
    tail_bounds_from_qlaplace,
    vertex_transition,
)

P = S6VParams(0.25, 3.0)


def test_derived_weights():
    assert P.b1 == pytest.approx(0.4, abs=1e-14)
    assert P.b2 == pytest.approx(0.1, abs=1e-14)
    assert P.kappa == pytest.approx(2.0 / 3.0, abs=1e-14)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        S6VParams(1.5, 3.0)
    with pytest.raises(ValueError):
        S6VParams(0.25, 1.0)  # u <= q^{-1/2}


def test_vertex_transition_pass_through():
    assert vertex_transition(P, 0, 0) == {(0, 0): 1.0}
    assert vertex_transition(P, 1, 1) == {(1, 1): 1.0}


def test_vertex_transition_lone_arrows():
    # first bit: vertical arrow, second bit: horizontal arrow
    d = vertex_transition(P, 1, 0)
    assert d[(1, 0)] == pytest.approx(0.1, abs=1e-14)
    assert d[(0, 1)] == pytest.approx(0.9, abs=1e-14)
    d = vertex_transition(P, 0, 1)
    assert d[(0, 1)] == pytest.approx(0.4, abs=1e-14)
    assert d[(1, 0)] == pytest.approx(0.6, abs=1e-14)


def test_vertex_transition_stochastic_and_conserving():
    for i1 in (0, 1):
        for j1 in (0, 1):
            d = vertex_transition(P, i1, j1)
            assert sum(d.values()) == pytest.approx(1.0, abs=1e-14)
            assert all(p >= 0 for p in d.values())
            assert all(i2 + j2 == i1 + j1 for i2, j2 in d)


def test_step_initial_condition_column_one():
    for N in (1, 5, 17):
        assert sample_height(P, 1, N, seed=42) == N
    pmf = exact_height_pmf(P, 1, 3)
    assert pmf.support == (3,)
    assert pmf.probs[0] == pytest.approx(1.0, abs=1e-14)


def test_zero_rows_boundary():
    assert sample_height(P, 3, 0, seed=0) == 0
    pmf = exact_height_pmf(P, 3, 0)
    assert pmf.support == (0,)


def test_sampler_deterministic_and_thread_independent():
    a = sample_heights(P, 6, 6, 512, seed=11, threads=1)
    b = sample_heights(P, 6, 6, 512, seed=11, threads=4)
    assert np.array_equal(a, b)
    assert sample_height(P, 5, 5, seed=3) == sample_height(P, 5, 5, seed=3)


def test_pmf_single_row_two_columns():
    # lone horizontal arrow continues rightward with probability b1; either
    # exit route through/at column 2 contributes height 1
    pmf = exact_height_pmf(P, 2, 1)
    d = dict(zip(pmf.support, pmf.probs))
    assert d[1] == pytest.approx(P.b1, abs=1e-14)
    assert d[0] == pytest.approx(1.0 - P.b1, abs=1e-14)


def test_pmf_mass_and_support():
    pmf = exact_height_pmf(P, 4, 6)
    assert sum(pmf.probs) == pytest.approx(1.0, abs=1e-12)
    assert all(0 <= h <= 6 for h in pmf.support)


def test_pmf_width_guard():
    with pytest.raises(WidthTooLarge):
        exact_height_pmf(P, 17, 2)


def test_pmf_matches_monte_carlo():
    M, N, n = 3, 4, 40000
    pmf = exact_height_pmf(P, M, N)
    hs = sample_heights(P, M, N, n, seed=7, threads=2)
    vals, counts = np.unique(hs, return_counts=True)
    emp = dict(zip(vals.tolist(), (counts / n).tolist()))
    for h, p in zip(pmf.support, pmf.probs):
        se = math.sqrt(p * (1 - p) / n)
        assert abs(emp.get(h, 0.0) - p) < 5 * se + 1e-3


def test_qlaplace_zeta_zero_and_monotone():
    pmf = exact_height_pmf(P, 3, 3)
    assert qlaplace_of_height(P, pmf, 0.0) == 1.0
    v1 = qlaplace_of_height(P, pmf, 0.5)
    v2 = qlaplace_of_height(P, pmf, 2.0)
    assert v2 < v1 < 1.0


def test_qlaplace_point_mass_closed_form():
    pmf = exact_height_pmf(P, 1, 3)  # point mass at h=3
    val = qlaplace_of_height(P, pmf, 1.0)
    ref = 1.0
    for i in range(1, 60):
        ref /= 1.0 + 0.25 ** (3 + i)
    assert val == pytest.approx(ref, rel=1e-13)


def test_qlaplace_exact_vs_samples():
    M, N, n = 3, 4, 20000
    pmf = exact_height_pmf(P, M, N)
    hs = sample_heights(P, M, N, n, seed=5, threads=2)
    exact = qlaplace_of_height(P, pmf, 1.0)
    mc = qlaplace_of_samples(P, hs, 1.0)
    per = np.array(
        [math.exp(sum(-math.log1p(0.25 ** (h + i)) for i in range(1, 40))) for h in hs]
    )
    se = per.std() / math.sqrt(n)
    assert abs(mc - exact) < 3 * se + 1e-6


def test_scaling_constants_values_and_guard():
    sc = scaling_constants(P, 1.25)
    assert sc.a_eq == pytest.approx((1 - math.sqrt(5.0 / 6.0)) ** 2 * 3.0, rel=1e-12)
    assert sc.a_eq == pytest.approx(0.022775, abs=5e-6)
    assert sc.c > 0
    with pytest.raises(SlopeOutOfLiquidRegion):
        scaling_constants(P, 2.0)  # above q^{1/2} u = 1.5
    with pytest.raises(SlopeOutOfLiquidRegion):
        scaling_constants(P, 0.9)


def test_rescaled_height_centering_and_slope():
    sc = scaling_constants(P, 1.25)
    N = 1000
    assert rescaled_height(sc, N, sc.a_eq * N) == pytest.approx(0.0, abs=1e-12)
    d = rescaled_height(sc, N, 11.0) - rescaled_height(sc, N, 10.0)
    assert d == pytest.approx(1.0 / (sc.c * N ** (1.0 / 3.0)), rel=1e-12)


def test_tail_bounds_structure():
    sc = scaling_constants(P, 1.25)
    out = tail_bounds_from_qlaplace(sc, 100, 2.0, 0.1, 0.7)
    lo_u, hi_u = out["upper_tail"]
    lo_l, hi_l = out["lower_tail"]
    assert hi_u >= lo_u
    assert hi_l >= lo_l
    # correction terms approach the trivial limits as N grows
    big = tail_bounds_from_qlaplace(sc, 10 ** 7, 2.0, 0.1, 0.7)
    assert big["upper_tail"][1] == pytest.approx(0.7, rel=1e-6)
    assert big["upper_tail"][0] == pytest.approx(0.7, rel=1e-6)
