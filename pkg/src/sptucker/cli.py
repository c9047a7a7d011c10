"""Command-line driver: ``sptucker {factorize,predict,evaluate,inspect,split}``.

Exit codes: 0 success, 1 parse/validation error, 2 numeric failure,
3 resource limit.  Failures print one ``error[CODE]: message`` line on
stderr.
"""

import argparse
import logging
import sys

from . import io
from .errors import (
    InvalidArgumentError,
    NumericFailure,
    ParseError,
    ResourceLimitError,
    SpTuckerError,
    ValidationError,
)
from .evaluation import EvalReport, predict, reconstruction_error, test_rmse, top_core_entries
from .solver import SolverConfig, run
from .tensor import SparseTensor

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_RESOURCE = 0, 1, 2, 3


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"values must be >= 1, got {text!r}")
    return values


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return value


class UsageError(SpTuckerError):
    code = "E_USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    parser = _Parser(prog="sptucker", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factorize", help="factorize a sparse tensor")
    f.add_argument("--input", required=True, help="COO file of observed entries")
    f.add_argument("--ranks", required=True, type=_int_list, help="core dims J1,..,JN")
    f.add_argument("--lambda", dest="lam", type=float, default=0.01)
    f.add_argument("--max-iters", type=_positive_int, default=20)
    f.add_argument("--tol", type=float, default=1e-4)
    f.add_argument("--variant", choices=("default", "cache", "approx"), default="default")
    f.add_argument("--trunc-rate", type=float, default=0.2)
    f.add_argument("--threads", type=_positive_int, default=20)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--dims", type=_int_list, help="mode lengths I1,..,IN (default: inferred)")
    f.add_argument("--max-cache-bytes", type=int, default=2**31)
    f.add_argument("--test", help="held-out COO file; reports test RMSE")
    f.add_argument("--out", help="model bundle directory")
    f.add_argument("--stats", help="per-iteration CSV")
    f.add_argument("--zero-based", action="store_true", help="input indices start at 0")

    p = sub.add_parser("predict", help="predict values at given coordinates")
    p.add_argument("--model", required=True)
    p.add_argument("--indices", required=True, help="COO file without the value column")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=_positive_int, default=1)

    e = sub.add_parser("evaluate", help="reconstruction error / RMSE on a data file")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--as-test", action="store_true", help="also report RMSE")
    e.add_argument("--threads", type=_positive_int, default=1)

    i = sub.add_parser("inspect", help="list the strongest core entries")
    i.add_argument("--model", required=True)
    i.add_argument("--top", required=True, type=_positive_int)
    i.add_argument("--rank-by", choices=("value", "partial-error"), default="value")
    i.add_argument("--data", help="training COO file (needed for partial-error)")
    i.add_argument("--threads", type=_positive_int, default=1)

    s = sub.add_parser("split", help="seeded train/test split of a COO file")
    s.add_argument("--input", required=True)
    s.add_argument("--test-fraction", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--train-out", required=True)
    s.add_argument("--test-out", required=True)
    s.add_argument("--zero-based", action="store_true")
    return parser


def cmd_factorize(args, out):
    tensor = io.read_coo(args.input, args.dims, zero_based=args.zero_based)
    if len(args.ranks) != tensor.order:
        raise ValidationError(
            f"--ranks has {len(args.ranks)} values but the tensor has order {tensor.order}")
    test = None
    if args.test:
        test = io.read_coo(args.test, tensor.dims, zero_based=args.zero_based)
    config = SolverConfig(
        ranks=tuple(args.ranks), lam=args.lam, max_iters=args.max_iters, tol=args.tol,
        variant=args.variant, truncation_rate=args.trunc_rate, threads=args.threads,
        seed=args.seed, max_cache_bytes=args.max_cache_bytes)
    config.validate(tensor.order)
    model, stats = run(tensor, config)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(stats.to_csv())
    final = reconstruction_error(tensor, model, args.threads)
    if args.out:
        io.write_model(model, {
            "lambda": config.lam, "variant": config.variant,
            "iterations_run": stats.iterations, "final_error": final, "seed": config.seed,
        }, args.out)
    out.write(f"iterations={stats.iterations}\n")
    out.write(f"initial_error={io.fmt_real(stats.initial_error)}\n")
    out.write(f"final_error={io.fmt_real(final)}\n")
    if test is not None:
        out.write(f"test_rmse={io.fmt_real(test_rmse(test, model, args.threads))}\n")
    return EXIT_OK


def cmd_predict(args, out):
    model, _ = io.read_model(args.model)
    idx, lines = io.read_indices(args.indices, model.order)
    for k, row in enumerate(idx):
        for n, (i, d) in enumerate(zip(row, model.dims)):
            if i >= d:
                raise ValidationError(
                    f"line {lines[k]}: index {i + 1} exceeds dim {d} of mode {n + 1}")
    values = predict(model, idx, args.threads) if len(idx) else []
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for row, v in zip(idx.tolist(), values):
            fh.write(" ".join(str(i + 1) for i in row) + " " + io.fmt_real(v) + "\n")
    return EXIT_OK


def cmd_evaluate(args, out):
    model, _ = io.read_model(args.model)
    data = io.read_coo(args.data)
    if data.order != model.order:
        raise ValidationError(f"data has order {data.order}, model has order {model.order}")
    over = [n for n in range(data.order) if data.dims[n] > model.dims[n]]
    if over:
        raise ValidationError(f"data index exceeds model dims in mode {over[0] + 1}")
    data = SparseTensor(data.indices, data.values, model.dims)
    err = reconstruction_error(data, model, args.threads)
    if args.as_test:
        report = EvalReport(err, n_train=0, test_rmse=test_rmse(data, model, args.threads),
                            n_test=data.nnz)
    else:
        report = EvalReport(err, n_train=data.nnz)
    out.write(report.to_text())
    return EXIT_OK


def cmd_inspect(args, out):
    model, _ = io.read_model(args.model)
    tensor = None
    if args.rank_by == "partial-error":
        if not args.data:
            raise InvalidArgumentError("--rank-by partial-error needs --data")
        tensor = io.read_coo(args.data, model.dims)
    ranking = "by_value" if args.rank_by == "value" else "by_partial_error"
    for entry in top_core_entries(model, args.top, ranking, tensor, args.threads):
        out.write(" ".join(str(j + 1) for j in entry.index)
                  + f" {io.fmt_real(entry.value)} {io.fmt_real(entry.score)}\n")
    return EXIT_OK


def cmd_split(args, out):
    tensor = io.read_coo(args.input, zero_based=args.zero_based)
    train, test = io.split_train_test(tensor, args.test_fraction, args.seed)
    io.write_coo(train, args.train_out)
    io.write_coo(test, args.test_out)
    out.write(f"train={train.nnz}\ntest={test.nnz}\n")
    return EXIT_OK


COMMANDS = {
    "factorize": cmd_factorize,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "inspect": cmd_inspect,
    "split": cmd_split,
}


def _fail(err, code, exit_code):
    sys.stderr.write(f"error[{code}]: {err}\n")
    return exit_code


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(exc, exc.code, EXIT_INPUT)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except ResourceLimitError as exc:
        return _fail(exc, exc.code, EXIT_RESOURCE)
    except NumericFailure as exc:
        return _fail(exc, exc.code, EXIT_NUMERIC)
    except (ParseError, ValidationError, InvalidArgumentError, SpTuckerError) as exc:
        return _fail(exc, exc.code, EXIT_INPUT)
    except OSError as exc:
        return _fail(exc, "E_IO", EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
