"""End-to-end acceptance checks. Each test prints a single PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest

from s6vlab import cli, equilibrium, kernels, painleve34, verify
from s6vlab.sixvertex import S6VParams, scaling_constants


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_01_height_transform_identity():
    t0 = time.time()
    errs = [
        verify.check_bo_identity(0.25, 3.0, 4, 6, z).rel_err for z in (0.5, 1.0, 2.0)
    ]
    rt = time.time() - t0
    ok = max(errs) <= 1e-8 and rt <= 10.0
    _report(
        "criterion 1 height-transform identity",
        ok,
        f"max rel err {max(errs):.3e} (tol 1e-8), runtime {rt:.2f}s (limit 10s)",
    )


def test_criterion_02_deformation_formula():
    t0 = time.time()
    rep = verify.check_deformation_formula(2.0, 0.3, 3, 0.0, 2.0)
    rt = time.time() - t0
    ok = rep.rel_err <= 1e-6 and rt <= 60.0
    _report(
        "criterion 2 deformation formula",
        ok,
        f"rel err {rep.rel_err:.3e} (tol 1e-6), runtime {rt:.2f}s (limit 60s)",
    )


def test_criterion_03_poisson_summation_grid():
    t0 = time.time()
    worst = 0.0
    for t in (0.5, 1.0, 1.7, 2.5, 4.0):
        for u in (0.0, 0.3, 0.7, 1.1, 2.0):
            rep = verify.check_poisson_summation(t, u)
            worst = max(worst, rep.rel_err, rep.details["theta_vs_lhs"] / abs(rep.lhs))
    rt = time.time() - t0
    ok = worst <= 1e-12 and rt <= 1.0
    _report(
        "criterion 3 lattice Poisson summation",
        ok,
        f"worst rel err over 5x5 grid {worst:.3e} (tol 1e-12), runtime {rt:.2f}s (limit 1s)",
    )


def test_criterion_04_airy_diagonal_asymptotics():
    x = 10.0
    ratio = kernels.airy_kernel(x, x) * 8.0 * math.pi * x * math.exp(4.0 / 3.0 * x**1.5)
    neg_ratio = kernels.airy_kernel(-25.0, -25.0) / (math.sqrt(25.0) / math.pi)
    ok = 0.95 <= ratio <= 1.05 and abs(neg_ratio - 1.0) <= 0.02
    _report(
        "criterion 4 Airy diagonal asymptotics",
        ok,
        f"x=10 ratio {ratio:.4f} (in [0.95,1.05]), x=-25 ratio {neg_ratio:.4f} (within 2%)",
    )


def test_criterion_05_bessel_diagonal():
    v0 = kernels.bessel_kernel_diag(0.0)
    x = 400.0
    far = kernels.bessel_kernel_diag(x) / (1.0 / (2.0 * math.pi * math.sqrt(x)))
    ok = abs(v0 - 0.25) <= 1e-12 and abs(far - 1.0) <= 0.1
    _report(
        "criterion 5 Bessel diagonal",
        ok,
        f"value at 0 = {v0!r} (= 1/4 to 1e-12), x=400 ratio {far:.4f} (within 10%)",
    )


def test_criterion_06_painleve34_connection():
    sol = painleve34.solve_p34(tol=1e-10)
    left_err = abs(sol.u_at(-8.0) - 4.0 + 1.0 / 512.0)
    kernel_ratio = painleve34.p34_kernel_diag(sol, -8.0) / 16.0
    vals = [painleve34.solve_p34(tol=t).u_at(-2.0) for t in (1e-6, 1e-8, 1e-10)]
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    cauchy = d2 / d1 if d1 > 0 else 0.0
    ok = left_err <= 5e-3 and 0.98 <= kernel_ratio <= 1.02 and cauchy <= 0.5
    _report(
        "criterion 6 Painleve XXXIV connection",
        ok,
        f"|u(-8) - (4 - 1/512)| = {left_err:.3e} (tol 5e-3), "
        f"K(-8)/16 = {kernel_ratio:.5f} (in [0.98,1.02]), "
        f"refinement ratio {cauchy:.3f} (<= 0.5)",
    )


def test_criterion_07_equilibrium_measure():
    a_pub, b_pub = equilibrium.endpoints(0.25, 2.0)
    endpoints_ok = abs(a_pub - 1.0 / 3.0) <= 1e-12 and abs(b_pub - 3.0) <= 1e-12
    meas = equilibrium.interpolated_oracle_measure(0.25, 2.0, 200)
    xs = np.linspace(0.01, meas.a - 0.01, 50)
    sat_min = float(np.min(meas.density(xs)))
    xv = np.linspace(meas.b + 0.1, meas.b + 1.0, 50)
    void_max = float(np.max(meas.density(xv)))
    sc = scaling_constants(S6VParams(0.25, 8.0), 2.0)
    fit = equilibrium.c_v_constant(meas, sc)
    ok = (
        endpoints_ok
        and sat_min >= 0.98
        and void_max <= 0.02
        and abs(fit["exponent"] - 0.5) <= 0.05
        and abs(fit["product_with_c"] - 1.0) <= 0.05
    )
    _report(
        "criterion 7 equilibrium measure",
        ok,
        f"published endpoints exact: {endpoints_ok}, saturated min {sat_min:.4f} (>=0.98), "
        f"void max {void_max:.4f} (<=0.02), edge exponent {fit['exponent']:.4f} (0.5+-0.05), "
        f"c_V * c = {fit['product_with_c']:.4f} (1 +- 0.05)",
    )


def test_criterion_08_moderate_deviations():
    t0 = time.time()
    up = {}
    for N in (100, 200, 400):
        (rep,) = verify.check_moderate_deviation(0.25, 12.0, 1.1, N, [2.5])
        up[N] = rep.rel_err
    down = {}
    for N in (100, 200, 400):
        (rep,) = verify.check_moderate_deviation(0.25, 12.0, 1.1, N, [-3.0])
        down[N] = rep.rel_err
    rt = time.time() - t0
    up_ok = up[100] > up[200] > up[400] and up[400] <= 0.15
    down_ok = down[100] > down[200] > down[400] and down[400] <= 0.25
    ok = up_ok and down_ok and rt <= 600.0
    _report(
        "criterion 8 moderate-deviation tails",
        ok,
        f"upper rel errs {up[100]:.3f}/{up[200]:.3f}/{up[400]:.3f} "
        f"(monotone, final <= 0.15), lower {down[100]:.3f}/{down[200]:.3f}/{down[400]:.3f} "
        f"(monotone, final <= 0.25), runtime {rt:.1f}s (limit 600s)",
    )


def test_criterion_09_tracy_widom_clt():
    t0 = time.time()
    rep = verify.check_tw_clt(0.25, 12.0, 1.1, 512, samples=10000, seed=2024, threads=4)
    rt = time.time() - t0
    ok = rep.lhs <= 0.08 and rt <= 300.0
    _report(
        "criterion 9 Tracy-Widom CLT",
        ok,
        f"KS distance {rep.lhs:.4f} (tol 0.08) over {rep.details['n_lattice_values']} "
        f"lattice values, runtime {rt:.1f}s (limit 300s)",
    )


def test_criterion_10_cli_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps({"q": 0.25, "u": 3.0, "M": 6, "N": 6, "samples": 400})
    )
    outputs = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        rc = cli.main(
            [
                "simulate",
                "--config",
                str(cfg),
                "--out",
                str(out),
                "--seed",
                "2024",
                "--threads",
                "2",
            ]
        )
        assert rc == 0
        outputs.append(
            {
                "csv": (out / "simulate.csv").read_bytes(),
                "svg": (out / "simulate.svg").read_bytes(),
            }
        )
    ok = outputs[0] == outputs[1]
    _report(
        "criterion 10 CLI determinism",
        ok,
        "repeated runs with identical config/seed/threads produced byte-identical artifacts",
    )
