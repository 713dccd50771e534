"""Command-line experiment runner.

    alqg run    --config cfg.json [--seed-w N --seed-v N --seed-eta N --out DIR --T T --h H]
    alqg oracle --config cfg.json
    alqg audit  --samples N --seed N

Exit codes: 0 ok, 1 configuration/validation error (or audit disagreement),
2 numerical abort.
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernels
from .config import ConfigError, load_config
from .riccati import CareError, CareProblem, relative_residual, solve_block_care, solve_care
from .simloop import run_oracle, simulate
from .stabcheck import pbh_stabilizable, y_certificate
from .subspace import build_decomposition

log = logging.getLogger("alqg")

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2
SUMMARY_KEYS = ("J_hat", "J_star", "theta_err_full", "theta_err_masked", "stability_stat",
                "beta_switches", "fallback_intervals", "seeds", "config_hash")


# -- artifact writers ---------------------------------------------------------

def _fmt(v):
    return format(float(v), ".17g")


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_events(path, events):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "event", "log_f_prev", "log_f_new"])
        for k, kind, a, b in events:
            w.writerow([k, kind, _fmt(a), _fmt(b)])


def write_plot_script(path, columns, n, m):
    idx = {c: i + 1 for i, c in enumerate(columns)}
    lines = [
        "# gnuplot script: gnuplot -p plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set multiplot layout 3,1",
        "set xlabel 't'",
        "set title 'state and control'",
        "plot " + ", ".join(
            f"'trajectory.csv' using 1:{idx[c]} with lines"
            for c in [f"x_{i}" for i in range(n)] + [f"u_{j}" for j in range(m)]),
        "set title 'running average cost'",
        f"plot 'trajectory.csv' using 1:{idx['running_avg_cost']} with lines",
        "set title 'parameter error'",
        "set logscale y",
        f"plot 'trajectory.csv' using 1:{idx['theta_err_full']} with lines, "
        f"'trajectory.csv' using 1:{idx['theta_err_masked']} with lines",
        "unset multiplot",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def write_artifacts(rec, out_dir, cfg):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "trajectory.csv", rec.columns, rec.series)
    write_events(out / "events.csv", rec.events)
    n, m = cfg.n, cfg.m
    write_plot_script(out / "plot.gp", rec.columns, n, m)
    if rec.noise is not None:
        write_csv(out / "noise.csv", rec.noise_columns, rec.noise)
    summary = dict(rec.summary)
    summary["config"] = cfg.to_dict()
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands --------------------------------------------------------------

def _run_one(cfg, mode, backend=None):
    model = cfg.model()
    fn = simulate if mode == "adaptive" else run_oracle
    rec = fn(model, cfg, backend=backend)
    write_artifacts(rec, cfg.out_dir, cfg)
    return EXIT_OK if rec.summary["status"] == "ok" else EXIT_ABORT, rec.summary


def _parse_range(text):
    a, _, b = text.partition("..")
    lo, hi = int(a), int(b or a)
    if hi < lo:
        raise ConfigError(f"empty seed range {text!r}")
    return range(lo, hi + 1)


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(
            seed_w=args.seed_w, seed_v=args.seed_v, seed_eta=args.seed_eta,
            out_dir=args.out, T=args.T, h=args.h,
        )
        cfg.validate()
        cfg.model().check_assumption()
        seeds = _parse_range(args.seeds) if args.seeds else None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if seeds is None:
        code, summary = _run_one(cfg, args.mode, args.backend)
        print(json.dumps({k: summary[k] for k in SUMMARY_KEYS}, sort_keys=True))
        return code

    cfgs = [replace(cfg, seed_w=s, seed_v=s, seed_eta=s, out_dir=str(Path(cfg.out_dir) / f"seed_{s}"))
            for s in seeds]
    workers = max(1, min(len(cfgs), os.cpu_count() or 1))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_run_one, cfgs, [args.mode] * len(cfgs), [args.backend] * len(cfgs)))
    for c, (code, summary) in zip(cfgs, results):
        print(json.dumps({"seed": c.seed_w, "exit": code, "J_hat": summary["J_hat"],
                          "J_star": summary["J_star"]}, sort_keys=True))
    return max(code for code, _ in results)


def oracle_report(cfg):
    model = cfg.model()
    p = CareProblem(model.A, model.B, model.Q, model.R)
    sol = solve_care(p, cfg.care_tol)
    D = model.D
    cl = np.linalg.eigvals(model.A + model.B @ sol.L)
    report = {
        "J_star": float(np.trace(D.T @ sol.X @ D)),
        "X": sol.X.tolist(),
        "L": sol.L.tolist(),
        "closed_loop_eigenvalues": [[float(z.real), float(z.imag)] for z in cl],
        "residual_norm": sol.residual_norm,
        "relative_residual": float(relative_residual(p, sol.X)),
    }
    dec = build_decomposition(model.A, model.B, D, cfg.rank_tol)
    report["n1"] = dec.n1
    if dec.n1 < model.n:
        U = dec.U
        X1, X2, X3 = solve_block_care(U.T @ model.A @ U, U.T @ model.B, U.T @ D, U.T @ model.Q @ U,
                                      model.R, dec.n1, cfg.care_tol)
        J_block = float(np.trace(dec.D1.T @ X1 @ dec.D1))
        report["block"] = {
            "J_star_block": J_block,
            "X1": X1.tolist(),
            "abs_diff": abs(J_block - report["J_star"]),
        }
    return report


def cmd_oracle(args):
    try:
        cfg = load_config(args.config)
        cfg.model().check_assumption()
        report = oracle_report(cfg)
    except (ConfigError, CareError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(report, indent=2))
    return EXIT_OK


def degenerate_pair(rng, stable):
    """Random pair with an uncontrollable block, hidden by an orthogonal change of basis.

    The uncontrollable block is Hurwitz when ``stable`` (pair stabilizable),
    otherwise it carries an eigenvalue with positive real part.
    """
    n = int(rng.integers(2, 6))
    nu = int(rng.integers(1, n))
    nc = n - nu
    m = int(rng.integers(1, 4))
    A11 = rng.standard_normal((nc, nc))
    A12 = rng.standard_normal((nc, nu))
    mags = rng.uniform(0.2, 2.0, nu)
    A22 = np.diag(-mags if stable else mags * np.where(np.arange(nu) == 0, 1.0, rng.choice([-1.0, 1.0], nu)))
    A22 += np.triu(rng.standard_normal((nu, nu)), 1)
    Abar = np.block([[A11, A12], [np.zeros((nu, nc)), A22]])
    Bbar = np.vstack([rng.standard_normal((nc, m)), np.zeros((nu, m))])
    T, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return T @ Abar @ T.T, T @ Bbar


def audit_pairs(samples, seed, n_degenerate=20):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(samples):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 4))
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        if rng.random() < 0.2:
            B = np.zeros((n, m))
        pairs.append(("random", A, B))
    if samples > 0:
        pairs.append(("constructed", np.diag([1.0, -1.0]), np.array([[0.0], [1.0]])))
        for i in range(n_degenerate - 1):
            A, B = degenerate_pair(rng, stable=bool(i % 2))
            pairs.append(("constructed", A, B))
    return pairs


def audit_report(samples, seed, n_degenerate=20):
    counts = {"both_yes": 0, "both_no": 0, "certificate_only": 0, "pbh_only": 0}
    disagreements = []
    pairs = audit_pairs(samples, seed, n_degenerate)
    for i, (kind, A, B) in enumerate(pairs):
        y = y_certificate(A, B).positive
        pb = pbh_stabilizable(A, B)
        if y and pb:
            counts["both_yes"] += 1
        elif not y and not pb:
            counts["both_no"] += 1
        else:
            counts["certificate_only" if y else "pbh_only"] += 1
            disagreements.append({"index": i, "kind": kind, "A": A.tolist(), "B": B.tolist()})
    total = len(pairs)
    agree = counts["both_yes"] + counts["both_no"]
    return {
        "samples": samples,
        "constructed": total - samples,
        "total": total,
        "counts": counts,
        "agreement": agree / total if total else 1.0,
        "disagreements": disagreements,
    }


def cmd_audit(args):
    if args.samples < 0:
        print("config error: samples must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    report = audit_report(args.samples, args.seed, args.degenerate)
    print(json.dumps(report, indent=2))
    return EXIT_OK if not report["disagreements"] else EXIT_CONFIG


def build_parser():
    parser = argparse.ArgumentParser(prog="alqg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate the adaptive (or oracle) closed loop")
    run.add_argument("--config", required=True)
    run.add_argument("--seed-w", type=int)
    run.add_argument("--seed-v", type=int)
    run.add_argument("--seed-eta", type=int)
    run.add_argument("--seeds", help="seed range a..b; each run uses seed s for all streams")
    run.add_argument("--out")
    run.add_argument("--T", type=float)
    run.add_argument("--h", type=float)
    run.add_argument("--mode", choices=("adaptive", "oracle"), default="adaptive")
    run.add_argument("--backend", choices=("cython", "python"))
    run.set_defaults(func=cmd_run)

    oracle = sub.add_parser("oracle", help="optimal cost and CARE summary for known parameters")
    oracle.add_argument("--config", required=True)
    oracle.set_defaults(func=cmd_oracle)

    audit = sub.add_parser("audit", help="cross-check the determinant certificate against PBH")
    audit.add_argument("--samples", type=int, default=1000)
    audit.add_argument("--seed", type=int, default=0)
    audit.add_argument("--degenerate", type=int, default=20)
    audit.set_defaults(func=cmd_audit)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
