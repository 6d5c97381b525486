"""Command-line entry point.

Exit codes: 0 success, 1 usage or parameter error, 2 input parse or I/O
error, 3 solver capacity exceeded or search budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from typing import Callable, Sequence

import numpy as np

from .bench import records_to_csv, run_embed_bench, run_qsplit_bench, summarize_qsplit
from .embedding import (
    HardwareGraph,
    ProblemGraph,
    chimera_graph,
    embedding_to_json,
    find_embedding,
    parse_graph_file,
)
from .errors import CapacityError, ParameterError, ToolkitError
from .qsplit import CONFLICT_MODES, QSplitConfig, qsplit_solve
from .qubo import SEED_MASK, SampleSet, parse_qubo_file, random_clique_qubo, serialize_qubo_file
from .samplers import SamplerParams, sampler_dispatch
from .svm import (
    KernelSpec,
    dump_dataset_csv,
    f1_score,
    load_dataset_csv,
    load_model,
    load_prediction_csv,
    predict,
    save_model,
    synthetic_axis_dataset,
    train,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3
SEED_ENV = "QSPLIT_SEED"


class CliExit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliExit(EXIT_USAGE, f"{self.prog}: error: {message}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _topology(text: str) -> tuple[int, int, int]:
    values = _int_list(text)
    if len(values) != 3 or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected m,n,t with all values >= 1, got {text!r}")
    return tuple(values)


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value & SEED_MASK


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return _seed(raw)
    except argparse.ArgumentTypeError as exc:
        raise CliExit(EXIT_USAGE, f"{SEED_ENV}: {exc}") from None


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliExit(EXIT_INPUT, f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path: str, text: str):
    try:
        if path == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliExit(EXIT_INPUT, f"cannot write {path}: {exc.strerror or exc}") from None


def _load(parse: Callable, text: str, what: str):
    try:
        return parse(text)
    except (ToolkitError, ValueError) as exc:
        raise CliExit(EXIT_INPUT, f"{what}: {exc}") from None


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _sampler_params(args) -> SamplerParams:
    return SamplerParams(num_reads=args.reads, num_sweeps=args.sweeps, seed=args.seed)


def _samples_doc(samples: SampleSet) -> list[dict]:
    return [{"assignment": "".join(map(str, s.assignment)), "energy": s.energy,
             "occurrences": s.occurrences} for s in samples]


# -- commands ---------------------------------------------------------------

def cmd_gen_qubo(args):
    if args.vars < 1:
        raise ParameterError(f"--vars must be >= 1, got {args.vars}")
    _write(args.out, serialize_qubo_file(random_clique_qubo(args.vars, args.seed)))


def cmd_solve(args):
    q = _load(parse_qubo_file, _read(args.input), args.input)
    if args.method == "qsplit":
        if args.cut_dim is None:
            raise ParameterError("--cut-dim is required with --method qsplit")
        cfg = QSplitConfig(cut_dim=args.cut_dim, k=args.k, sampler=args.sampler,
                           params=_sampler_params(args), seed=args.seed,
                           conflict_mode=args.conflict_mode)
        report = qsplit_solve(q, cfg)
        best, calls = report.best, report.sampler_calls
        cpu, sampler_time = report.cpu_time, report.sampler_time
        extra = {"cut_dim": args.cut_dim, "conflict_calls": report.conflict_calls,
                 "oversized_conflicts": report.oversized_conflicts,
                 "max_padded_size": report.max_padded_size}
    else:
        if args.cut_dim is not None:
            raise ParameterError("--cut-dim only applies to --method qsplit")
        outcome = sampler_dispatch(args.method, q, _sampler_params(args))
        best, calls = outcome.samples.truncate(args.k), outcome.calls
        cpu, sampler_time = 0.0, outcome.sampler_time
        extra = {"max_padded_size": q.n}
    doc = {
        "method": args.method,
        "n": q.n,
        "k": args.k,
        "seed": args.seed,
        "best_energy": best.best_energy,
        "samples": _samples_doc(best),
        "sampler_calls": calls,
        "cpu_time_s": round(cpu, 3),
        "sampler_time_s": round(sampler_time, 3),
        **extra,
    }
    _write(args.out, _dump_json(doc))


def cmd_bench_qsplit(args):
    def note(trial):
        if args.verbose:
            gaps = ", ".join(f"{d}:{g:.3f}" for d, (_, g) in trial.runs.items())
            print(f"trial {trial.trial}: {gaps}", file=sys.stderr)

    trials = run_qsplit_bench(args.vars, args.cut_dims, args.trials, args.seed,
                              params=_sampler_params(args), k=args.k, sampler=args.sampler,
                              conflict_mode=args.conflict_mode, progress=note)
    _write(args.out, records_to_csv(summarize_qsplit(trials)))


def cmd_bench_embed(args):
    if args.timeout <= 0:
        raise ParameterError("--timeout must be positive")
    rows = run_embed_bench(args.cliques, args.target, args.seeds, args.timeout, args.seed)
    _write(args.out, records_to_csv(rows))


def cmd_embed(args):
    p = _load(lambda t: parse_graph_file(t, ProblemGraph), _read(args.problem), args.problem)
    if args.hardware is not None:
        h = _load(lambda t: parse_graph_file(t, HardwareGraph), _read(args.hardware), args.hardware)
    else:
        h = chimera_graph(*args.target)
    chains = find_embedding(p, h, seed=args.seed, timeout=args.timeout, max_passes=args.max_passes)
    if chains is None:
        raise CapacityError("no embedding found within the search budget")
    _write(args.out, embedding_to_json(chains))


def cmd_svm_gen(args):
    data = synthetic_axis_dataset(args.n, args.margin, args.noise, args.seed)
    _write(args.out, dump_dataset_csv(data))


def cmd_svm_train(args):
    data = _load(load_dataset_csv, _read(args.data), args.data)
    kernel = KernelSpec(args.kernel, args.gamma)
    qcfg = None
    if args.method == "qsplit":
        if args.cut_dim is None:
            raise ParameterError("--cut-dim is required with --method qsplit")
        qcfg = QSplitConfig(cut_dim=args.cut_dim, k=max(args.k, args.ensemble),
                            params=_sampler_params(args), seed=args.seed)
    elif args.cut_dim is not None:
        raise ParameterError("--cut-dim only applies to --method qsplit")
    model = train(data, kernel, bits=args.bits, lam=args.lam, method=args.method,
                  params=_sampler_params(args), qsplit=qcfg, ensemble=args.ensemble)
    _write(args.out, save_model(model))


def cmd_svm_predict(args):
    model = _load(load_model, _read(args.model), args.model)
    dim = model.members[0].data.dim
    points, labels = _load(lambda t: load_prediction_csv(t, dim), _read(args.data), args.data)
    predicted = np.atleast_1d(predict(model, points))
    lines = ["# qsplit-toolkit v1", "row,predicted" + (",label" if labels is not None else "")]
    for i, p in enumerate(predicted.tolist()):
        row = f"{i},{p:+d}"
        if labels is not None:
            row += f",{int(labels[i]):+d}"
        lines.append(row)
    _write(args.out, "\n".join(lines) + "\n")
    if labels is not None:
        print(f"f1={f1_score(predicted, labels):.3f}", file=sys.stderr if args.out == "-" else sys.stdout)


# -- parser -------------------------------------------------------------------

def _add_sampler_flags(p: argparse.ArgumentParser, reads: int = 100, sweeps: int = 1000):
    p.add_argument("--reads", type=int, default=reads, help="annealing reads per sampler call")
    p.add_argument("--sweeps", type=int, default=sweeps, help="sweeps per read")


def build_parser() -> argparse.ArgumentParser:
    seed_kw = dict(type=_seed, default=None,
                   help=f"master seed (default: ${SEED_ENV} or 0)")
    parser = _Parser(prog="qsplit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-qubo", help="write a random dense QUBO instance")
    p.add_argument("--vars", type=int, required=True)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen_qubo)

    p = sub.add_parser("solve", help="solve a QUBO file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=("exhaustive", "sa", "qsplit"), required=True)
    p.add_argument("--cut-dim", type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--sampler", choices=("sa", "exhaustive"), default="sa",
                   help="backend used inside qsplit")
    p.add_argument("--conflict-mode", choices=CONFLICT_MODES, default="fold")
    _add_sampler_flags(p)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench-qsplit", help="QSplit at several cut dims against the direct sampler")
    p.add_argument("--vars", type=int, default=128)
    p.add_argument("--cut-dims", type=_int_list, default=[2, 4, 8, 16, 32])
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--sampler", choices=("sa", "exhaustive"), default="sa")
    p.add_argument("--conflict-mode", choices=CONFLICT_MODES, default="fold")
    _add_sampler_flags(p)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.add_argument("--verbose", action="store_true", help="per-trial gaps on stderr")
    p.set_defaults(func=cmd_bench_qsplit)

    p = sub.add_parser("bench-embed", help="embedding cost of cliques on a Chimera target")
    p.add_argument("--cliques", type=_int_list, required=True)
    p.add_argument("--target", type=_topology, default=(16, 16, 4))
    p.add_argument("--seeds", type=int, default=5, help="searches per clique size")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench_embed)

    p = sub.add_parser("embed", help="minor-embed a problem graph file")
    p.add_argument("--problem", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--target", type=_topology, default=(16, 16, 4))
    group.add_argument("--hardware", help="hardware graph file instead of a Chimera target")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-passes", type=int, default=64)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_embed)

    svm = sub.add_parser("svm", help="SVM training through a QUBO")
    svm_sub = svm.add_subparsers(dest="svm_command", required=True, parser_class=_Parser)

    p = svm_sub.add_parser("gen", help="synthetic on-axis dataset")
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--margin", type=float, default=0.3)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_svm_gen)

    p = svm_sub.add_parser("train", help="train an ensemble model")
    p.add_argument("--data", required=True)
    p.add_argument("--bits", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="penalty weight (default: 5 * max|K|)")
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--ensemble", type=int, default=3)
    p.add_argument("--method", choices=("exhaustive", "sa", "qsplit"), default="sa")
    p.add_argument("--cut-dim", type=int)
    p.add_argument("--k", type=int, default=5)
    _add_sampler_flags(p)
    p.add_argument("--seed", **seed_kw)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_svm_train)

    p = svm_sub.add_parser("predict", help="predict with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_svm_predict)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            args.func(args)
        return EXIT_OK
    except CliExit as exc:
        if exc.message:
            print(exc.message, file=sys.stderr)
        return exc.code
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ParameterError, ToolkitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
