"""Command-line interface: train, predict, evaluate, sample, gradcheck.

Exit codes are stable: 0 success, 2 usage, 3 data errors, 4 numerical
failure, 5 verification failure.  Every command is deterministic for fixed
flags, files and --seed; output files are written atomically.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .data import (
    SCENARIOS,
    SplitSpec,
    generate_heteroscedastic,
    load_csv,
    read_table,
)
from .evaluation import (
    ScoreReport,
    format_report_table,
    median_time,
    run_experiment,
    score_model,
    train_model,
)
from .exceptions import DataError, NumericalError
from .gradients import finite_diff_check, random_check_instance
from .model_io import atomic_write_text, format_float, load_model, save_model
from .optimizer import OptConfig
from .sparse import Variant

VARIANT_NAMES = [v.value for v in Variant]
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4, 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spgp",
        description="Probabilistic regression with exact and sparse "
                    "pseudo-input Gaussian processes.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a model and write a model file")
    _add_data_flags(train)
    _add_fit_flags(train)
    train.add_argument("--out", required=True, help="model file to write")
    train.add_argument("--log", help="run log path (default: <out>.log)")

    predict = sub.add_parser("predict", help="predict with a saved model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--out", required=True)

    ev = sub.add_parser("evaluate", help="score variants on held-out data")
    ev.add_argument("--model", help="score an already-trained model file")
    ev.add_argument("--variant", nargs="+", choices=VARIANT_NAMES,
                    help="variants to train and score")
    ev.add_argument("--train", help="training CSV (with --test)")
    ev.add_argument("--test", help="held-out CSV")
    ev.add_argument("--data", help="single CSV to split (with --split)")
    ev.add_argument("--split", help="train/test fractions, e.g. 0.67,0.33")
    ev.add_argument("--target-col", default="y")
    ev.add_argument("--m", type=int, help="number of pseudo-inputs")
    ev.add_argument("--g", type=int, help="reduced dimension (projected variants)")
    ev.add_argument("--restarts", type=int, default=5)
    ev.add_argument("--max-iterations", type=int, default=500)
    ev.add_argument("--trials", type=int, default=1,
                    help="independent split/fit repetitions (split mode)")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--log-target-offset", type=float,
                    help="train on log(y + offset)")
    ev.add_argument("--no-normalize", action="store_true")
    ev.add_argument("--out", help="write the table here instead of stdout")

    sample = sub.add_parser("sample", help="generate a synthetic dataset")
    sample.add_argument("--n", type=int, required=True)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--scenario", choices=SCENARIOS, default="smooth-varying")
    sample.add_argument("--out", required=True)

    grad = sub.add_parser("gradcheck",
                          help="verify analytic gradients against finite differences")
    grad.add_argument("--variant", required=True, choices=VARIANT_NAMES)
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--n", type=int, default=25)
    grad.add_argument("--m", type=int, default=4)
    grad.add_argument("--d", type=int, default=3)
    grad.add_argument("--g", type=int, default=2)
    grad.add_argument("--step", type=float, default=1e-5)
    return parser


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--target-col", required=True, help="target column name")
    p.add_argument("--log-target-offset", type=float,
                   help="train on log(y + offset); predictions are reported "
                        "back in original units")
    p.add_argument("--no-normalize", action="store_true",
                   help="skip input/target normalization")


def _add_fit_flags(p):
    p.add_argument("--variant", required=True, choices=VARIANT_NAMES)
    p.add_argument("--m", type=int, help="number of pseudo-inputs (sparse variants)")
    p.add_argument("--g", type=int, help="reduced dimension (projected variants)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)


def _check_fit_flags(parser, args, variant: Variant, exclusive: bool = True):
    """Require --m/--g where the variant needs them.

    With ``exclusive`` (single-variant commands) also reject flags the
    variant cannot use; evaluate passes several variants sharing one flag
    set, so there the extras are simply ignored.
    """
    if variant.is_sparse and not args.m:
        parser.error(f"--variant {variant.value} requires --m")
    if variant.uses_projection and not args.g:
        parser.error(f"--variant {variant.value} requires --g")
    if exclusive:
        if not variant.is_sparse and args.m:
            parser.error("--m only applies to sparse variants")
        if not variant.uses_projection and args.g:
            parser.error(f"--g does not apply to --variant {variant.value}")


def _write_run_log(path, model, traces):
    lines = [f"# variant {model.variant.value}, trainable parameters "
             f"{model.n_trainable}"]
    for k, trace in enumerate(traces):
        lines.append(f"# restart {k}: {trace.reason}")
        for i, rec in enumerate(trace.records):
            lines.append(f"{i}\t{rec.value:.10g}\t{rec.grad_norm:.6g}\t{rec.step:.6g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_train(parser, args) -> int:
    variant = Variant.from_name(args.variant)
    _check_fit_flags(parser, args, variant)
    ds = load_csv(args.data, target_column=args.target_col)
    cfg = OptConfig(max_iterations=args.max_iterations, restarts=args.restarts,
                    seed=args.seed)
    model, traces = train_model(ds, variant, n_pseudo=args.m, reduced_dim=args.g,
                                cfg=cfg, log_offset=args.log_target_offset,
                                do_normalize=not args.no_normalize)
    save_model(model, args.out)
    _write_run_log(args.log or args.out + ".log", model, traces)
    first = traces[0].records[0].value if traces and traces[0].records else float("nan")
    print(f"trained {variant.value} on {ds.n} rows ({ds.dim} features); "
          f"{model.n_trainable} trainable parameters; "
          f"nlml {first:.6g} -> {model.metadata['final_nlml']:.6g}; "
          f"model written to {args.out}")
    return EXIT_OK


def _load_features(path, feature_names):
    """Rows of the named feature columns, tolerating extra columns."""
    header, table = read_table(path)
    missing = [n for n in feature_names if n not in header]
    if missing:
        raise DataError(f"{path}: missing feature columns {missing}")
    return table[:, [header.index(n) for n in feature_names]]


def cmd_predict(parser, args) -> int:
    model = load_model(args.model)
    if model.feature_names is not None:
        X = _load_features(args.data, model.feature_names)
    else:
        X = read_table(args.data)[1]
    try:
        pred = model.predict(X)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    lines = ["mean,variance,lower95,upper95"]
    for i in range(X.shape[0]):
        lines.append(",".join(format_float(v) for v in
                              (pred.point[i], pred.variance[i],
                               pred.lower95[i], pred.upper95[i])))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {X.shape[0]} predictions to {args.out}")
    return EXIT_OK


def cmd_evaluate(parser, args) -> int:
    if args.model:
        if not args.test:
            parser.error("--model needs --test to score against")
        model = load_model(args.model)
        test = load_csv(args.test, target_column=model.target_name or args.target_col)
        t_test = median_time(lambda: model.predict(test.X))
        pd_score, sq_score = score_model(model, test.X, test.y)
        reports = [ScoreReport(label=model.variant.value, nlpd=pd_score,
                               mse=sq_score, n_test=test.n,
                               train_seconds=0.0, test_seconds=t_test)]
        return _emit_report(args, reports)

    if not args.variant:
        parser.error("give --model or a --variant list")
    variants = [Variant.from_name(v) for v in args.variant]
    for v in variants:
        _check_fit_flags(parser, args, v, exclusive=False)
    cfg = OptConfig(max_iterations=args.max_iterations, restarts=args.restarts,
                    seed=args.seed)

    if args.train and args.test:
        train_ds = load_csv(args.train, target_column=args.target_col)
        test_ds = load_csv(args.test, target_column=args.target_col)
        reports = []
        for v in variants:
            try:
                t0 = time.perf_counter()
                model, _ = train_model(train_ds, v, n_pseudo=args.m,
                                       reduced_dim=args.g, cfg=cfg,
                                       log_offset=args.log_target_offset,
                                       do_normalize=not args.no_normalize)
                t_train = time.perf_counter() - t0
                t_test = median_time(lambda: model.predict(test_ds.X))
                pd_score, sq_score = score_model(model, test_ds.X, test_ds.y)
                reports.append(ScoreReport(label=v.value, nlpd=pd_score, mse=sq_score,
                                           n_test=test_ds.n, train_seconds=t_train,
                                           test_seconds=t_test))
            except NumericalError as exc:
                reports.append(ScoreReport(label=v.value, failed=True, error=str(exc)))
        return _emit_report(args, reports)

    if args.data and args.split:
        try:
            fractions = tuple(float(f) for f in args.split.split(","))
        except ValueError:
            parser.error(f"cannot parse --split {args.split!r}")
        ds = load_csv(args.data, target_column=args.target_col)
        reports = run_experiment(ds, variants, n_pseudo=args.m, reduced_dim=args.g,
                                 cfg=cfg, split=SplitSpec(fractions=fractions),
                                 trials=args.trials,
                                 log_offset=args.log_target_offset,
                                 do_normalize=not args.no_normalize)
        return _emit_report(args, reports)

    parser.error("give --train/--test or --data/--split")


def _emit_report(args, reports) -> int:
    table = format_report_table(reports)
    if args.out:
        atomic_write_text(args.out, table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_sample(parser, args) -> int:
    if args.n < 0:
        parser.error("--n must be >= 0")
    ds = generate_heteroscedastic(args.n, seed=args.seed, scenario=args.scenario)
    lines = [",".join(list(ds.feature_names) + [ds.target_name])]
    for i in range(ds.n):
        cells = [format_float(v) for v in ds.X[i]] + [format_float(ds.y[i])]
        lines.append(",".join(cells))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote {ds.n} rows to {args.out}")
    return EXIT_OK


def cmd_gradcheck(parser, args) -> int:
    variant = Variant.from_name(args.variant)
    pv, X, y = random_check_instance(variant, seed=args.seed, n=args.n, m=args.m,
                                     d=args.d, g=args.g)
    report = finite_diff_check(pv, X, y, step=args.step)
    segments = pv.layout.segments()
    print(f"gradient check: variant {variant.value}, seed {args.seed}, "
          f"{pv.values.shape[0]} coordinates, step {args.step:g}")
    for name, sl in segments.items():
        worst = float(np.max(report.discrepancies[sl]))
        print(f"  {name:28s} worst discrepancy {worst:.3e}")
    print(f"  overall worst: coordinate {report.worst_coordinate}, "
          f"discrepancy {report.max_discrepancy:.3e}")
    if report.max_discrepancy <= 1e-4:
        print("PASS")
        return EXIT_OK
    print("FAIL: analytic gradient disagrees with central differences",
          file=sys.stderr)
    return EXIT_VERIFY


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate,
            "sample": cmd_sample, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](parser, args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
