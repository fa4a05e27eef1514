"""Batch experiment runner: dispatches subcommands to the library modules.

Each run reads a JSON parameter block, validates it against the
subcommand's schema (unknown keys are rejected), executes the library
operation, and writes CSV/JSON tables plus static SVG figures into the
output directory.  Artifacts embed the config hash and the repository
version string; with a fixed seed and thread count the outputs are
byte-identical across runs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import subprocess
import sys

import numpy as np

from . import dope, equilibrium, kernels, painleve34, verify
from .sixvertex import (
    S6VParams,
    exact_height_pmf,
    rescaled_height,
    sample_heights,
    scaling_constants,
)


class ConfigInvalid(ValueError):
    """Config failed schema validation."""


# schema: key -> (type, required, default); unknown keys rejected
_SCHEMAS = {
    "simulate": {
        "q": (float, True, None),
        "u": (float, True, None),
        "M": (int, True, None),
        "N": (int, True, None),
        "samples": (int, False, 1000),
    },
    "pmf": {
        "q": (float, True, None),
        "u": (float, True, None),
        "M": (int, True, None),
        "N": (int, True, None),
    },
    "bo-check": {
        "q": (float, True, None),
        "u": (float, True, None),
        "M": (int, True, None),
        "N": (int, True, None),
        "zeta_list": (list, False, [0.5, 1.0, 2.0]),
    },
    "deform-check": {
        "alpha": (float, True, None),
        "beta": (float, True, None),
        "n": (int, True, None),
        "s": (float, True, None),
        "S": (float, True, None),
        "t": (float, False, 1.0),
        "a": (float, False, 0.5),
        "N": (int, False, 10),
    },
    "poisson": {
        "t": (float, True, None),
        "u": (float, True, None),
    },
    "kernels": {
        "x_min": (float, False, -10.0),
        "x_max": (float, False, 4.0),
        "points": (int, False, 200),
    },
    "p34": {
        "L_minus": (float, False, 12.0),
        "L_plus": (float, False, 10.0),
        "y_min": (float, False, -10.0),
        "y_max": (float, False, 6.0),
        "points": (int, False, 200),
    },
    "equilibrium": {
        "beta": (float, True, None),
        "nu": (float, True, None),
        "n": (int, False, 200),
    },
    "tails": {
        "q": (float, True, None),
        "u": (float, True, None),
        "nu": (float, True, None),
        "N": (int, True, None),
        "h_grid": (list, True, None),
    },
    "tw-clt": {
        "q": (float, True, None),
        "u": (float, True, None),
        "nu": (float, True, None),
        "N": (int, True, None),
        "samples": (int, False, 10000),
    },
}


def _validate(subcommand: str, cfg: dict) -> dict:
    schema = _SCHEMAS[subcommand]
    unknown = set(cfg) - set(schema)
    if unknown:
        raise ConfigInvalid(f"unknown config keys for {subcommand}: {sorted(unknown)}")
    out = {}
    for key, (typ, required, default) in schema.items():
        if key in cfg:
            val = cfg[key]
            if typ is float and isinstance(val, int):
                val = float(val)
            if not isinstance(val, typ) or isinstance(val, bool):
                raise ConfigInvalid(f"key '{key}' must be {typ.__name__}")
            out[key] = val
        elif required:
            raise ConfigInvalid(f"missing required key '{key}' for {subcommand}")
        else:
            out[key] = default
    return out


def _config_hash(subcommand: str, cfg: dict, seed: int, threads: int) -> str:
    blob = json.dumps(
        {"subcommand": subcommand, "config": cfg, "seed": seed, "threads": threads},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            cwd=os.path.dirname(os.path.abspath(__file__)),
            timeout=10,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_csv(path: str, meta: str, header: list, rows: list) -> None:
    lines = [meta, ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path: str, obj: dict, cfg_hash: str, git: str) -> None:
    obj = dict(obj)
    obj["config_sha256"] = cfg_hash
    obj["git_describe"] = git
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Minimal static SVG line plots
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H, _MARGIN = 640, 480, 60
_COLORS = ("#1f6fb2", "#c23b22", "#2e8b57", "#8860b8")


def _svg_plot(path: str, series: list, title: str, xlabel: str, ylabel: str, meta: str) -> None:
    """series: list of (label, xs, ys); writes an SVG 1.1 line plot."""
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    finite = np.isfinite(xs_all) & np.isfinite(ys_all)
    x_lo, x_hi = float(xs_all[finite].min()), float(xs_all[finite].max())
    y_lo, y_hi = float(ys_all[finite].min()), float(ys_all[finite].max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def mx(x):
        return _MARGIN + (x - x_lo) / (x_hi - x_lo) * (_SVG_W - 2 * _MARGIN)

    def my(y):
        return _SVG_H - _MARGIN - (y - y_lo) / (y_hi - y_lo) * (_SVG_H - 2 * _MARGIN)

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_SVG_W}" height="{_SVG_H}">',
        f"<!-- {meta} -->",
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_SVG_H - _MARGIN}" x2="{_SVG_W - _MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
        f'<text x="{_SVG_W // 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_SVG_W // 2}" y="{_SVG_H - 14}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="16" y="{_SVG_H // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {_SVG_H // 2})">{ylabel}</text>',
        f'<text x="{_MARGIN}" y="{_SVG_H - _MARGIN + 18}" font-size="10">{_fmt(x_lo)}</text>',
        f'<text x="{_SVG_W - _MARGIN}" y="{_SVG_H - _MARGIN + 18}" text-anchor="end" '
        f'font-size="10">{_fmt(x_hi)}</text>',
        f'<text x="{_MARGIN - 4}" y="{_SVG_H - _MARGIN}" text-anchor="end" '
        f'font-size="10">{_fmt(y_lo)}</text>',
        f'<text x="{_MARGIN - 4}" y="{_MARGIN + 4}" text-anchor="end" '
        f'font-size="10">{_fmt(y_hi)}</text>',
    ]
    for i, (label, xs, ys) in enumerate(series):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        pts = " ".join(f"{mx(x):.2f},{my(y):.2f}" for x, y in zip(xs[ok], ys[ok]))
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{_SVG_W - _MARGIN - 4}" y="{_MARGIN + 16 + 16 * i}" text-anchor="end" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _run_simulate(cfg, out, seed, threads, meta, cfg_hash, git):
    params = S6VParams(cfg["q"], cfg["u"])
    hs = sample_heights(params, cfg["M"], cfg["N"], cfg["samples"], seed, threads=threads)
    vals, counts = np.unique(hs, return_counts=True)
    rows = [(int(v), int(c), c / len(hs)) for v, c in zip(vals, counts)]
    _write_csv(os.path.join(out, "simulate.csv"), meta, ["h", "count", "freq"], rows)
    _svg_plot(
        os.path.join(out, "simulate.svg"),
        [("empirical freq", vals.astype(float), counts / len(hs))],
        f"height samples M={cfg['M']} N={cfg['N']}",
        "h",
        "frequency",
        meta,
    )


def _run_pmf(cfg, out, seed, threads, meta, cfg_hash, git):
    params = S6VParams(cfg["q"], cfg["u"])
    pmf = exact_height_pmf(params, cfg["M"], cfg["N"])
    total = sum(pmf.probs)
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"pmf mass {total} deviates from 1")
    rows = list(zip(pmf.support, pmf.probs))
    _write_csv(os.path.join(out, "pmf.csv"), meta, ["h", "prob"], rows)
    _svg_plot(
        os.path.join(out, "pmf.svg"),
        [("pmf", [float(h) for h in pmf.support], list(pmf.probs))],
        f"exact height pmf M={cfg['M']} N={cfg['N']}",
        "h",
        "probability",
        meta,
    )


def _run_bo_check(cfg, out, seed, threads, meta, cfg_hash, git):
    reports = [
        verify.check_bo_identity(cfg["q"], cfg["u"], cfg["M"], cfg["N"], float(z)).to_dict()
        for z in cfg["zeta_list"]
    ]
    for r in reports:
        r.pop("runtime", None)
    _write_json(os.path.join(out, "bo_check.json"), {"reports": reports}, cfg_hash, git)


def _run_deform_check(cfg, out, seed, threads, meta, cfg_hash, git):
    r = verify.check_deformation_formula(
        cfg["alpha"], cfg["beta"], cfg["n"], cfg["s"], cfg["S"], cfg["t"], cfg["a"], cfg["N"]
    ).to_dict()
    r.pop("runtime", None)
    _write_json(os.path.join(out, "deform_check.json"), r, cfg_hash, git)


def _run_poisson(cfg, out, seed, threads, meta, cfg_hash, git):
    r = verify.check_poisson_summation(cfg["t"], cfg["u"]).to_dict()
    r.pop("runtime", None)
    _write_json(os.path.join(out, "poisson.json"), r, cfg_hash, git)


def _run_kernels(cfg, out, seed, threads, meta, cfg_hash, git):
    xs = np.linspace(cfg["x_min"], cfg["x_max"], cfg["points"])
    airy = [kernels.airy_kernel(x, x) for x in xs]
    bessel = [kernels.bessel_kernel_diag(x) for x in xs]
    rows = list(zip(xs, airy, bessel))
    _write_csv(
        os.path.join(out, "kernels.csv"), meta, ["x", "airy_diag", "bessel_diag"], rows
    )
    _svg_plot(
        os.path.join(out, "kernels.svg"),
        [("Airy diag", xs, airy), ("Bessel diag", xs, bessel)],
        "kernel diagonals",
        "x",
        "K(x,x)",
        meta,
    )


def _run_p34(cfg, out, seed, threads, meta, cfg_hash, git):
    sol = painleve34.solve_p34(cfg["L_minus"], cfg["L_plus"])
    ys = np.linspace(cfg["y_min"], cfg["y_max"], cfg["points"])
    u = sol.u_at(ys)
    up = sol.u_prime_at(ys)
    kd = painleve34.p34_kernel_diag(sol, ys)
    rows = list(zip(ys, u, up, kd))
    _write_csv(
        os.path.join(out, "p34.csv"), meta, ["y", "u", "u_prime", "kernel_diag"], rows
    )
    left = np.where(ys < -1.0, -ys / 2.0 - 1.0 / (8.0 * ys ** 2), np.nan)
    _svg_plot(
        os.path.join(out, "p34.svg"),
        [("u(y)", ys, u), ("left asymptote", ys, left), ("K(0,0|y)", ys, kd)],
        "Painleve XXXIV transcendent",
        "y",
        "value",
        meta,
    )


def _run_equilibrium(cfg, out, seed, threads, meta, cfg_hash, git):
    beta, nu, n = cfg["beta"], cfg["nu"], cfg["n"]
    xs, occ = equilibrium.empirical_density_oracle(beta, nu, n)
    rows = list(zip(xs, occ))
    _write_csv(os.path.join(out, "equilibrium.csv"), meta, ["x", "occupation"], rows)
    a, b = equilibrium.consistent_endpoints(beta, nu)
    a_pub, b_pub = equilibrium.endpoints(beta, nu)
    _write_json(
        os.path.join(out, "equilibrium.json"),
        {
            "beta": beta,
            "nu": nu,
            "n": n,
            "endpoints_consistent": [a, b],
            "endpoints_published": [a_pub, b_pub],
        },
        cfg_hash,
        git,
    )
    _svg_plot(
        os.path.join(out, "equilibrium.svg"),
        [("occupation", xs, occ)],
        f"equilibrium profile beta={beta} nu={nu} n={n}",
        "x = site/n",
        "density",
        meta,
    )


def _run_tails(cfg, out, seed, threads, meta, cfg_hash, git):
    q, u, nu, N = cfg["q"], cfg["u"], cfg["nu"], cfg["N"]
    h_grid = [float(h) for h in cfg["h_grid"]]
    reports = verify.check_moderate_deviation(q, u, nu, N, h_grid)
    rows = []
    for r in reports:
        h = r.inputs["h"]
        airy_pred = (
            -kernels.airy_tail_integral(h) if h > 0 else float("nan")
        )
        cubic_pred = -abs(h) ** 3 / 12.0 if h < 0 else float("nan")
        rows.append((h, r.lhs, airy_pred, cubic_pred, r.rel_err))
    _write_csv(
        os.path.join(out, "tails.csv"),
        meta,
        ["h", "log_qlaplace", "airy_prediction", "cubic_prediction", "rel_err"],
        rows,
    )
    hi = [(r[0], r[1]) for r in rows if r[0] > 0]
    lo = [(r[0], r[1]) for r in rows if r[0] < 0]
    series = []
    if hi:
        series.append(
            (
                "log L vs h^{3/2}",
                [h ** 1.5 for h, _ in hi],
                [v for _, v in hi],
            )
        )
    if lo:
        series.append(
            (
                "log L vs |h|^3",
                [abs(h) ** 3 for h, _ in lo],
                [v for _, v in lo],
            )
        )
    if series:
        _svg_plot(
            os.path.join(out, "tails.svg"),
            series,
            f"tail exponents N={N}",
            "h^{3/2} (upper) / |h|^3 (lower)",
            "log q-Laplace",
            meta,
        )


def _run_tw_clt(cfg, out, seed, threads, meta, cfg_hash, git):
    q, u, nu, N = cfg["q"], cfg["u"], cfg["nu"], cfg["N"]
    params = S6VParams(q, u)
    consts = scaling_constants(params, nu)
    M = int(nu * N)
    hs = sample_heights(params, M, N, cfg["samples"], seed, threads=threads)
    vals = -rescaled_height(consts, N, hs)
    uniq, counts = np.unique(vals, return_counts=True)
    wts = counts / counts.sum()
    ecdf = np.cumsum(wts)
    sel = (uniq > -8.0) & (uniq < 6.0)
    F = np.array([kernels.tracy_widom_cdf(v) for v in uniq[sel]])
    rows = list(zip(uniq[sel], ecdf[sel], F))
    _write_csv(
        os.path.join(out, "tw_clt.csv"), meta, ["s", "ecdf", "tracy_widom_cdf"], rows
    )
    # mid-distribution continuity correction for the lattice-valued samples
    ks = float(np.max(np.abs(ecdf[sel] - 0.5 * wts[sel] - F)))
    _write_json(
        os.path.join(out, "tw_clt.json"),
        {"q": q, "u": u, "nu": nu, "N": N, "samples": cfg["samples"], "ks_distance": ks},
        cfg_hash,
        git,
    )
    _svg_plot(
        os.path.join(out, "tw_clt.svg"),
        [("empirical CDF", uniq[sel], ecdf[sel]), ("F_GUE", uniq[sel], F)],
        f"rescaled height vs Tracy-Widom, N={N}",
        "-(h - a N)/(c N^{1/3})",
        "CDF",
        meta,
    )


_RUNNERS = {
    "simulate": _run_simulate,
    "pmf": _run_pmf,
    "bo-check": _run_bo_check,
    "deform-check": _run_deform_check,
    "poisson": _run_poisson,
    "kernels": _run_kernels,
    "p34": _run_p34,
    "equilibrium": _run_equilibrium,
    "tails": _run_tails,
    "tw-clt": _run_tw_clt,
}


def run(subcommand: str, cfg: dict, out_dir: str, seed: int, threads: int) -> None:
    """Validate cfg, execute the subcommand, and write artifacts to out_dir."""
    cfg = _validate(subcommand, cfg)
    cfg_hash = _config_hash(subcommand, cfg, seed, threads)
    git = _git_describe()
    meta = f"# config_sha256={cfg_hash} git={git}"
    os.makedirs(out_dir, exist_ok=True)
    _RUNNERS[subcommand](cfg, out_dir, seed, threads, meta, cfg_hash, git)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="s6vlab",
        description="six-vertex / determinantal-ensemble experiment runner",
    )
    parser.add_argument("subcommand", choices=sorted(_RUNNERS))
    parser.add_argument("--config", required=True, help="JSON parameter block")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigInvalid("config must be a JSON object")
        run(args.subcommand, cfg, args.out, args.seed, args.threads)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # propagated library errors -> nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
