import itertools
import math

import numpy as np
import pytest

from s6vlab import dope


def small_weight():
    return dope.meixner_weight(2.0, 0.3, working_degree=8)


def test_meixner_weight_values():
    w = small_weight()
    assert w.w()[0] == pytest.approx(1.0, rel=1e-14)  # w(1) = 1
    assert w.w()[1] == pytest.approx(2.0 * 0.3, rel=1e-13)  # w(2) = alpha beta
    x = w.sites[:-1].astype(float)
    ratio = w.w()[1:] / w.w()[:-1]
    expected = 0.3 * (2.0 + x - 1.0) / x
    assert np.allclose(ratio, expected, rtol=1e-12)


def test_meixner_weight_rejects_bad_params():
    with pytest.raises(dope.ParameterOutOfRange):
        dope.meixner_weight(-1.0, 0.3)
    with pytest.raises(dope.ParameterOutOfRange):
        dope.meixner_weight(2.0, 1.2)


def test_build_basis_first_moments():
    w = small_weight()
    basis = dope.build_basis(w, 3)
    total = float(np.sum(w.w()))
    mu1 = float(np.sum(w.sites * w.w()))
    assert math.exp(basis.log_gamma2_inv[0]) == pytest.approx(total, rel=1e-12)
    # monic p_1(x) = x - mu_1/mu_0
    assert basis.a[0] == pytest.approx(mu1 / total, rel=1e-12)
    assert basis.ortho_residual <= 1e-10


def test_partition_function_brute_force():
    w = small_weight()
    basis = dope.build_basis(w, 3)
    xs = w.sites.astype(float)
    ws = w.w()
    z2 = 0.0
    for i in range(xs.size):
        z2 += float(np.sum((xs[i] - xs) ** 2 * ws)) * ws[i]
    assert dope.log_partition_function(basis, 2) == pytest.approx(math.log(z2), rel=1e-9)
    # n=3 triple sum on a reduced support window (mass certified tiny beyond)
    cut = 60
    xs3, ws3 = xs[:cut], ws[:cut]
    z3 = sum(
        (x1 - x2) ** 2 * (x1 - x3) ** 2 * (x2 - x3) ** 2 * w1 * w2 * w3
        for (x1, w1), (x2, w2), (x3, w3) in itertools.product(zip(xs3, ws3), repeat=3)
    )
    assert dope.log_partition_function(basis, 3) == pytest.approx(math.log(z3), rel=1e-8)


def test_heine_monic_p2_via_ensemble_average():
    w = small_weight()
    basis = dope.build_basis(w, 3)
    xs = w.sites.astype(float)
    ws = w.w()
    # E[(x - x1)(x - x2)] over the 2-particle ensemble is the monic p_2
    z2 = e1 = e2 = 0.0
    for i in range(xs.size):
        pr = (xs[i] - xs) ** 2 * ws * ws[i]
        z2 += float(np.sum(pr))
        e1 += float(np.sum(pr * (xs[i] + xs)))
        e2 += float(np.sum(pr * xs[i] * xs))
    sum_coeff, prod_coeff = e1 / z2, e2 / z2
    # recurrence route: p2 = (x - a1)(x - a0) - b1
    assert sum_coeff == pytest.approx(basis.a[0] + basis.a[1], rel=1e-9)
    assert prod_coeff == pytest.approx(basis.a[0] * basis.a[1] - basis.b[1], rel=1e-9)


def test_kernel_trace_projection_symmetry():
    w = small_weight()
    n = 4
    basis = dope.build_basis(w, n)
    K = dope.cd_kernel(basis, w, w.sites)
    A = K.weighted
    assert np.allclose(A, A.T, atol=1e-12)
    assert float(np.trace(A)) == pytest.approx(n, abs=1e-8)
    assert np.max(np.abs(A @ A - A)) < 1e-8
    occ = np.diag(A)
    assert np.all(occ > -1e-10) and np.all(occ < 1 + 1e-10)


def test_one_point_function_vs_enumeration():
    w = small_weight()
    n = 2
    basis = dope.build_basis(w, n)
    K = dope.cd_kernel(basis, w, w.sites)
    xs = w.sites.astype(float)
    ws = w.w()
    m = xs.size
    z = 0.0
    occ = np.zeros(m)
    for i, j in itertools.combinations(range(m), 2):
        pr = (xs[i] - xs[j]) ** 2 * ws[i] * ws[j]
        z += pr
        occ[i] += pr
        occ[j] += pr
    occ /= z
    assert np.max(np.abs(occ - np.diag(K.weighted))) < 1e-9


def test_deformed_weight_factor():
    w = small_weight()
    t, s, a, N = 1.0, 2.0, 0.5, 10
    wd = dope.deformed_weight(w, t, s, a, N)
    bump = wd.log_w - w.log_w
    # at x = aN - s/t = 3 the deformation factor equals 2
    assert bump[2] == pytest.approx(math.log(2.0), abs=1e-12)
    assert np.all(np.diff(bump) <= 0)  # decreasing factor (underflows to 0 far out)


def test_multiplicative_statistic_basics():
    w = small_weight()
    assert dope.multiplicative_statistic(w, 2, lambda x: 0.0 * x) == pytest.approx(1.0)
    # n=1 closed form
    f = lambda x: 0.5 * 0.25 ** x
    val = dope.multiplicative_statistic(w, 1, f)
    direct = float(np.sum((1.0 + f(w.sites.astype(float))) * w.w()) / np.sum(w.w()))
    assert val == pytest.approx(direct, rel=1e-10)


def test_multiplicative_statistic_requires_bounded_below():
    w = small_weight()
    with pytest.raises(dope.ParameterOutOfRange):
        dope.multiplicative_statistic(w, 2, lambda x: -2.0 + 0.0 * x)


def test_hole_statistic_bounds_and_limit():
    w = small_weight()
    t, a, N = 1.0, 0.5, 10
    for s in (0.0, 3.0, 30.0):
        logL = dope.hole_statistic_L(w, 2, t, s, a, N)
        assert logL <= 1e-12
    assert abs(dope.hole_statistic_L(w, 2, t, 30.0, a, N)) < 1e-8


def test_hole_statistic_brute_force_n2():
    w = small_weight()
    t, s, a, N = 1.0, 0.5, 0.5, 10
    xs = w.sites.astype(float)
    ws = w.w()
    sigma = np.exp(-t * (xs - a * N) - s)
    g = sigma / (1.0 + sigma)
    log_hole_factor = np.log1p(-g)  # log 1/(1+sigma) per empty site
    total_empty = float(np.sum(log_hole_factor))
    m = xs.size
    z = 0.0
    acc = 0.0
    for i, j in itertools.combinations(range(m), 2):
        pr = (xs[i] - xs[j]) ** 2 * ws[i] * ws[j]
        z += pr
        acc += pr * math.exp(total_empty - log_hole_factor[i] - log_hole_factor[j])
    brute = math.log(acc / z)
    assert dope.log_hole_statistic(w, 2, g) == pytest.approx(brute, rel=1e-9, abs=1e-9)


def test_counting_mgf():
    w = small_weight()
    basis = dope.build_basis(w, 1)
    K = dope.cd_kernel(basis, w, w.sites)
    site = 2
    assert dope.counting_mgf(K, [site], 0.0) == pytest.approx(1.0)
    rho = float(np.diag(K.weighted)[site - 1])
    v = 0.7
    expect = 1.0 - (1.0 - math.exp(-v)) * rho
    assert dope.counting_mgf(K, [site], v) == pytest.approx(expect, rel=1e-12)
    gap = dope.counting_mgf(K, [site], 50.0)
    assert gap == pytest.approx(1.0 - rho, rel=1e-10)


def test_degenerate_weight_guard():
    w = dope.meixner_weight(2.0, 0.3)
    with pytest.raises(dope.DegenerateWeight):
        dope.build_basis(w, w.x_max + 5)


def test_kernel_repair_in_saturated_zone():
    # n=150 with a strongly displaced weight: the float recurrence blows up
    # on the leftmost sites; the repaired kernel diagonal must honour the
    # occupation bound there
    w = dope.meixner_weight(15.0, 0.3, working_degree=300)
    basis = dope.build_basis(w, 150)
    K = dope.cd_kernel(basis, w, np.arange(1, 41))
    occ = np.diag(K.weighted)
    assert np.all(occ > -1e-9)
    assert np.all(occ < 1 + 1e-9)
    assert np.min(occ[:10]) > 0.99  # saturated zone
