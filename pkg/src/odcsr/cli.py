"""Command-line front end: ``detect`` runs the cascade on a matrix file,
``synth`` materializes a synthetic dataset, ``bench`` sweeps methods and
stage counts over a labeled dataset into one metrics CSV.

Exit codes: 0 success, 1 I/O or parse failure, 2 invalid configuration,
3 solver non-convergence under ``--strict``.

Heavy imports happen inside the command bodies so ``--threads`` can cap the
BLAS thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path


def _add_matrix_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="matrix file")
    p.add_argument("--format", choices=("csv", "odcm"), default="csv")
    p.add_argument("--header", action="store_true",
                   help="CSV input has a single header row")
    p.add_argument("--cols-are-points", action="store_true",
                   help="file columns are points (default: rows are points)")
    p.add_argument("--no-normalize", action="store_true",
                   help="skip unit-normalizing the input columns")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=0.9,
                   help="l1/l2 trade-off in [0, 1)")
    p.add_argument("--alpha", type=float, default=5.0,
                   help="relative gamma multiplier (> 1)")
    p.add_argument("--gamma", type=float, default=None,
                   help="fixed gamma for every column (overrides --alpha)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--strict", action="store_true",
                   help="fail (exit 3) if any column does not converge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odcsr",
        description="Cascaded self-representation outlier detection",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS thread pools")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="score a dataset for outliers")
    _add_matrix_flags(detect)
    _add_solver_flags(detect)
    detect.add_argument("--labels", help="optional 0/1 label file for evaluation")
    detect.add_argument("--stages", type=int, default=3)
    detect.add_argument("--walk-steps", type=int, default=1000)
    detect.add_argument("--fusion", default="mean",
                        help='"mean" or comma-separated stage weights')
    detect.add_argument("--renormalize-residuals", action="store_true")
    detect.add_argument("--epsilon", type=float, default=None,
                        help="outlier threshold on fused scores (default 1e-4/N)")
    detect.add_argument("--out", required=True, help="run output directory")
    detect.set_defaults(func=cmd_detect)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--dim", type=int, required=True)
    synth.add_argument("--subspaces", type=int, required=True)
    synth.add_argument("--subdim", type=int, required=True)
    synth.add_argument("--inliers", type=int, required=True,
                       help="inliers per subspace")
    synth.add_argument("--outliers", type=int, required=True)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--format", choices=("csv", "odcm"), default="csv")
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=cmd_synth)

    bench = sub.add_parser("bench", help="sweep methods and stage counts")
    _add_matrix_flags(bench)
    _add_solver_flags(bench)
    bench.add_argument("--labels", required=True)
    bench.add_argument("--max-stages", type=int, default=3)
    bench.add_argument("--walk-steps", type=int, default=1000)
    bench.add_argument("--methods", default="odcsr,rgraph,l1th",
                       help="comma-separated subset of odcsr,rgraph,l1th")
    bench.add_argument("--out", required=True, help="metrics CSV path")
    bench.set_defaults(func=cmd_bench)
    return parser


def _load_inputs(args):
    from .data import load_labels, load_matrix, normalize_columns

    X = load_matrix(
        args.input,
        fmt=args.format,
        rows_are_points=not args.cols_are_points,
        header=args.header,
    )
    if not args.no_normalize:
        X = normalize_columns(X)
    labels = None
    if getattr(args, "labels", None):
        labels = load_labels(args.labels)
        if labels.size != X.num_points:
            from .errors import DimensionError

            raise DimensionError(
                f"{labels.size} labels for {X.num_points} points"
            )
    return X, labels


def _en_config(args):
    from .elastic_net import ElasticNetConfig

    if args.gamma is not None:
        return ElasticNetConfig(
            lam=args.lam, gamma_mode="fixed", gamma=args.gamma,
            max_iters=args.max_iters, tol=args.tol,
        )
    return ElasticNetConfig(
        lam=args.lam, alpha=args.alpha, max_iters=args.max_iters, tol=args.tol,
    )


def _check_strict(result):
    from .errors import ConvergenceError

    bad = [
        i + 1
        for i, st in enumerate(result.stages)
        if not st.coeffs.all_converged()
    ]
    if bad:
        raise ConvergenceError(
            f"non-converged columns in stage(s) {bad}; rerun with a larger "
            "--max-iters or drop --strict"
        )


def cmd_detect(args) -> int:
    from .cascade import CascadeConfig, run_cascade, save_run
    from .evaluation import f1_at_count
    from .walk import classify, default_epsilon

    X, labels = _load_inputs(args)
    if args.fusion == "mean":
        fusion, weights = "mean", None
    else:
        fusion = "weighted"
        try:
            weights = tuple(float(w) for w in args.fusion.split(","))
        except ValueError:
            from .errors import ConfigError

            raise ConfigError(
                f'--fusion must be "mean" or comma-separated weights, '
                f"got {args.fusion!r}"
            ) from None
    cfg = CascadeConfig(
        num_stages=args.stages,
        walk_steps=args.walk_steps,
        en_config=_en_config(args),
        fusion=fusion,
        fusion_weights=weights,
        renormalize_residuals=args.renormalize_residuals,
    )
    result = run_cascade(X, cfg)
    if args.strict:
        _check_strict(result)

    epsilon = args.epsilon if args.epsilon is not None else default_epsilon(X.num_points)
    predicted = classify(result.fused, epsilon)

    extra = {
        "input": str(args.input),
        "format": args.format,
        "rows_are_points": str(not args.cols_are_points).lower(),
        "header": str(args.header).lower(),
        "normalize": str(not args.no_normalize).lower(),
        "epsilon": repr(epsilon),
        "polarity": "low_is_outlier",
        "n_points": str(X.num_points),
        "dim": str(X.dim),
    }
    out = save_run(result, args.out, point_ids=X.ids(), extra_manifest=extra)

    ids = X.ids()
    with open(out / "predicted_outliers.txt", "w") as fh:
        for i in predicted.nonzero()[0]:
            fh.write(f"{ids[i]}\n")

    if labels is not None:
        report = f1_at_count(result.fused.probs, labels, "low_is_outlier")
        from .cascade import write_manifest

        write_manifest(report.to_kv(), out / "eval.txt")
        print(f"auc={report.auc:.6f} f1={report.f1:.6f}")
    print(f"run written to {out}")
    return 0


def cmd_synth(args) -> int:
    from .data import SyntheticSpec, generate_synthetic, save_labels, save_matrix

    spec = SyntheticSpec(
        ambient_dim=args.dim,
        num_subspaces=args.subspaces,
        subspace_dim=args.subdim,
        inliers_per_subspace=args.inliers,
        num_outliers=args.outliers,
        noise_sigma=args.noise,
        rng_seed=args.seed,
    )
    X, labels = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    matrix_path = out / ("X.csv" if args.format == "csv" else "X.odcm")
    save_matrix(X, matrix_path, fmt=args.format, rows_are_points=True)
    save_labels(labels, out / "labels.txt")
    print(f"wrote {matrix_path} and {out / 'labels.txt'}")
    return 0


def cmd_bench(args) -> int:
    from .baselines import l1_preset, l1_thresholding_scores, rgraph_preset
    from .cascade import CascadeConfig, fuse_scores, run_cascade
    from .errors import ConfigError
    from .evaluation import f1_at_count

    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    known = {"odcsr", "rgraph", "l1th"}
    unknown = set(methods) - known
    if unknown:
        raise ConfigError(f"unknown method(s) {sorted(unknown)}")

    X, labels = _load_inputs(args)
    en = _en_config(args)
    rows = []

    cascade_result = None
    if "odcsr" in methods or "rgraph" in methods:
        cfg = CascadeConfig(
            num_stages=args.max_stages, walk_steps=args.walk_steps, en_config=en
        )
        cascade_result = run_cascade(X, cfg)
        if args.strict:
            _check_strict(cascade_result)

    if "odcsr" in methods:
        stage_scores = [st.scores for st in cascade_result.stages]
        for k in range(1, args.max_stages + 1):
            fused = fuse_scores(stage_scores[:k], "mean")
            report = f1_at_count(fused.probs, labels, "low_is_outlier")
            rows.append(("odcsr", k, report))

    if "rgraph" in methods:
        preset = rgraph_preset()
        user_n1 = CascadeConfig(
            num_stages=1, walk_steps=args.walk_steps, en_config=en
        )
        if preset == user_n1:
            scores = cascade_result.stages[0].scores
        else:
            scores = run_cascade(X, preset).fused
        report = f1_at_count(scores.probs, labels, "low_is_outlier")
        rows.append(("rgraph", 1, report))

    if "l1th" in methods:
        scores = l1_thresholding_scores(X, l1_preset())
        report = f1_at_count(scores, labels, "high_is_outlier")
        rows.append(("l1th", 1, report))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    from .evaluation import EvalReport

    with open(out, "w") as fh:
        fh.write(f"method,stages,{EvalReport.CSV_HEADER}\n")
        for method, k, report in rows:
            fh.write(f"{method},{k},{report.to_csv_row()}\n")
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    from .errors import ConfigError, ConvergenceError, DimensionError, ParseError

    try:
        return args.func(args)
    except (ParseError, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
