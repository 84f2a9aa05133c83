"""Command-line front end.

Subcommands
-----------
predict       closed-form threshold, outlier, and overlap predictions
sweep         Monte Carlo sweep from a JSON config: CSV output (+ SVG plots)
oracle-check  per-sample master-equation root vs. a dense solve
density       empirical singular-value histogram with the law overlay

Exit codes: 0 success; 1 sweep completed with failed trials; 2 usage or
I/O errors; 3 indeterminate oracle cross-check.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .bbp import critical_snr, master_equation_root, predict
from .harness import (SweepConfig, aggregate, aggregates_csv, records_csv,
                      histogram_csv, run_matrix_sweep, run_tensor_sweep,
                      run_metadata_json, spectrum_histogram, write_text)
from .linalg import full_singular_values
from .plots import PlotSpec, Series, render
from .tensors import tensor_critical_beta, unfolding_ratio

EXIT_OK = 0
EXIT_TRIAL_FAILURES = 1
EXIT_USAGE = 2
EXIT_INDETERMINATE = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spiked-unfold",
        description="Spiked tensor unfolding: theory, sweeps, and cross-checks.",
        epilog="Exit codes: 0 ok, 1 trial failures, 2 usage/IO error, "
               "3 indeterminate oracle check.")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("predict", help="evaluate the closed-form predictions")
    pr.add_argument("--lambda", dest="lam", type=float, required=True,
                    help="normalized signal strength")
    pr.add_argument("--phi", type=float, help="aspect ratio sqrt(m/n) >= 1")
    pr.add_argument("--n", type=int, help="tensor dimension (with --k)")
    pr.add_argument("--k", type=int, help="tensor order (with --n)")
    pr.add_argument("--q", type=int, default=1,
                    help="unfolding axis count (default 1)")

    sw = sub.add_parser("sweep", help="run a Monte Carlo sweep from a config")
    sw.add_argument("--config", required=True, help="JSON sweep config path")
    sw.add_argument("--out", default=None, help="output directory")
    sw.add_argument("--plot", action="store_true", help="also write SVG figures")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")

    oc = sub.add_parser("oracle-check",
                        help="master-equation root vs dense top singular value")
    oc.add_argument("--n", type=int, required=True)
    oc.add_argument("--m", type=int, required=True)
    oc.add_argument("--lambda", dest="lam", type=float, required=True)
    oc.add_argument("--trials", type=int, default=5)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--zero-noise", action="store_true",
                    help="replace the noise matrix by zero (degenerate check)")

    de = sub.add_parser("density", help="empirical spectral density vs the law")
    de.add_argument("--n", type=int, required=True)
    de.add_argument("--m", type=int, required=True)
    de.add_argument("--seed", type=int, default=0)
    de.add_argument("--bins", type=int, default=60)
    de.add_argument("--out", default=".", help="output directory")
    return p


def _cmd_predict(args, parser) -> int:
    if args.phi is None and (args.n is None or args.k is None):
        parser.error("predict needs --phi, or --n together with --k")
    rows = []
    if args.phi is not None:
        phi = args.phi
    else:
        phi = unfolding_ratio(args.n, args.k, args.q)
        phi = max(phi, 1.0 / phi)  # wider side rules after transposing
        rows.append(("tensor critical beta n^{(k-2)/4}",
                     tensor_critical_beta(args.n, args.k)))
    pred = predict(args.lam, phi)
    rows = [("phi", phi),
            ("critical snr sqrt(phi)", critical_snr(phi)),
            ("lambda", args.lam),
            ("above threshold", pred.above_threshold),
            ("outlier", pred.outlier),
            ("left overlap", pred.left_overlap),
            ("right overlap", pred.right_overlap)] + rows
    width = max(len(r[0]) for r in rows)
    for name, val in rows:
        if isinstance(val, bool):
            out = str(val)
        elif isinstance(val, float):
            out = f"{val:.10g}"
        else:
            out = str(val)
        print(f"{name:<{width}}  {out}")
    return EXIT_OK


def _sweep_plots(config: SweepConfig, rows, out_dir: str) -> None:
    lams = tuple(sorted({r.lam for r in rows}))

    def observed(field, axis, name):
        sel = [r for r in rows if r.axis == axis
               and getattr(r, f"{field}_mean") is not None]
        return Series(name, tuple(r.lam for r in sel),
                      tuple(getattr(r, f"{field}_mean") for r in sel),
                      "scatter", tuple(getattr(r, f"{field}_se") for r in sel))

    def figure(filename, title, y_label, field, theory, axes):
        points = tuple(observed(field, a, "observed" if a is None else f"axis {a}")
                       for a in axes)
        render(PlotSpec(title=title, x_label="lambda", y_label=y_label,
                        series=points + (Series(theory[0], lams, theory[1], "line"),),
                        output_path=os.path.join(out_dir, filename)))

    preds = [predict(l, config.phi) for l in lams]
    if config.mode == "matrix":
        figure("sweep_s1.svg", "Top singular value vs signal strength",
               "top singular value", "s1_hat",
               ("predicted", tuple(p.outlier for p in preds)), (None,))
        figure("sweep_overlap_left.svg", "Left overlap vs signal strength",
               "left overlap", "overlap_left",
               ("predicted", tuple(p.left_overlap for p in preds)), (None,))
        figure("sweep_overlap_right.svg", "Right overlap vs signal strength",
               "right overlap", "overlap_right",
               ("predicted", tuple(p.right_overlap for p in preds)), (None,))
    else:
        axes = tuple(range(1, config.m_or_k + 1))
        figure("sweep_s1.svg", "Top singular value of each axis unfolding",
               "top singular value", "s1_hat",
               ("predicted", tuple(p.outlier for p in preds)), axes)
        figure("sweep_beta.svg", "Signal strength estimate", "beta", "beta_hat",
               ("true beta", tuple(config.beta(l) for l in lams)), axes)
        figure("sweep_overlap.svg", "Signal overlap of the recovered axis vectors",
               "|<v_hat, v>|", "overlap_left",
               ("predicted", tuple(p.left_overlap for p in preds)), axes)


def _cmd_sweep(args) -> int:
    try:
        config = SweepConfig.from_file(args.config)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or config.output_path or "."
    runner = run_matrix_sweep if config.mode == "matrix" else run_tensor_sweep
    records = runner(config, jobs=max(1, args.jobs))
    rows = aggregate(records)
    try:
        os.makedirs(out_dir, exist_ok=True)
        write_text(os.path.join(out_dir, "records.csv"), records_csv(records))
        write_text(os.path.join(out_dir, "aggregates.csv"), aggregates_csv(rows))
        write_text(os.path.join(out_dir, "metadata.json"), run_metadata_json(config))
        if args.plot:
            _sweep_plots(config, rows, out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    failures = sum(1 for r in records if r.status != "ok")
    print(f"{len(records)} trials, {failures} failed; outputs in {out_dir}")
    return EXIT_TRIAL_FAILURES if failures else EXIT_OK


def _cmd_oracle_check(args) -> int:
    n, m = args.n, args.m
    phi = math.sqrt(m / n)
    beta = args.lam * math.sqrt(phi)
    found, missing, mismatched = 0, 0, 0
    for trial in range(args.trials):
        ss = np.random.SeedSequence(args.seed, spawn_key=(trial,))
        rng = np.random.default_rng(ss)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        u = rng.standard_normal(m)
        u /= np.linalg.norm(u)
        if args.zero_noise:
            Z = np.zeros((n, m))
        else:
            Z = rng.standard_normal((n, m)) / math.sqrt(n)
        root = master_equation_root(Z, v, u, beta)
        s1_dense = float(full_singular_values(beta * np.outer(v, u) + Z)[0])
        if root is None:
            missing += 1
            print(f"trial {trial}: no outlier (dense top = {s1_dense:.10g})")
        else:
            gap = abs(root - s1_dense)
            ok = gap <= 1e-8
            found += ok
            mismatched += not ok
            print(f"trial {trial}: root = {root:.12g}, dense = {s1_dense:.12g}, "
                  f"|gap| = {gap:.3g} -> {'pass' if ok else 'FAIL'}")
    if mismatched == 0 and (found == args.trials or missing == args.trials):
        verdict = "all outliers matched" if found else "no outliers (sub-threshold)"
        print(f"summary: {verdict}")
        return EXIT_OK
    print("summary: indeterminate (mixed or mismatched outcomes)")
    return EXIT_INDETERMINATE


def _cmd_density(args) -> int:
    hist = spectrum_histogram(args.n, args.m, seed=args.seed, bins=args.bins)
    try:
        os.makedirs(args.out, exist_ok=True)
        write_text(os.path.join(args.out, "density.csv"), histogram_csv(hist))
        centers = tuple(hist.centers)
        render(PlotSpec(
            title=f"Singular values, n={args.n}, m={args.m} (phi={hist.phi:.4g})",
            x_label="singular value", y_label="density",
            series=(Series("empirical", centers, tuple(hist.density), "scatter"),
                    Series("law", centers, tuple(hist.law_density), "line")),
            output_path=os.path.join(args.out, "density.svg")))
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"histogram mass = {hist.mass:.12g}; outputs in {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "predict":
            return _cmd_predict(args, parser)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "oracle-check":
            return _cmd_oracle_check(args)
        return _cmd_density(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
