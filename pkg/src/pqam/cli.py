"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical-invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import oracle, retrieval
from .errors import InvalidInput, NumericalError
from .patterns import PatternFileError, PatternSet, load_patterns
from .query import Query, report_deviation
from .statevec import DEFAULT_MAX_QUBITS
from .storage import store, verify_memory

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

CSV_HEADER = ["source", "pattern", "probability", "empirical_frequency", "stderr"]


def load_f_table(path: str) -> tuple[int, ...]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read f-table {path}: {exc.strerror or exc}") from exc
    try:
        return tuple(int(tok) for tok in text.split())
    except ValueError as exc:
        raise InvalidInput(f"f-table {path} must hold whitespace-separated integers") from exc


def _query(args, pset: PatternSet) -> Query:
    if not args.input:
        raise InvalidInput("--input is required")
    f_table = load_f_table(args.f_table) if args.f_table else None
    query = Query(args.input, args.mask, f_table, rescale_mask=args.rescale_mask)
    if query.n != pset.n:
        raise InvalidInput(f"--input has length {query.n} but patterns have length {pset.n}")
    return query


def _require_seed(args) -> int:
    if args.seed is None:
        raise InvalidInput(f"'{args.command}' is stochastic; pass --seed")
    if args.seed < 0 or args.seed >= 2 ** 64:
        raise InvalidInput("--seed must be a 64-bit non-negative integer")
    return args.seed


def _patterns(args) -> PatternSet:
    if not args.patterns:
        raise InvalidInput("--patterns is required")
    return load_patterns(args.patterns)


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def _kv_csv(payload: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(obj, (list, tuple)):
            w.writerow([prefix, " ".join(_fmt(v) for v in obj)])
        else:
            w.writerow([prefix, _fmt(obj)])

    walk("", payload)
    return buf.getvalue()


def _distribution_rows(w, report) -> None:
    w.writerow([report.source, "c=0", _fmt(report.p0), "", ""])
    w.writerow([report.source, "c=1", _fmt(report.p1), "", ""])
    for pattern, prob in report.per_pattern.items():
        w.writerow([report.source, pattern, _fmt(prob), "", ""])


def _emit(args, payload: dict, csv_text: str | None = None) -> None:
    if args.format == "csv":
        text = csv_text if csv_text is not None else _kv_csv(payload)
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands

def cmd_store(args) -> int:
    pset = _patterns(args)
    state = store(pset, max_qubits=args.max_qubits)
    dev = verify_memory(state, pset)
    if args.dump:
        Path(args.dump).write_text(state.to_json(indent=2) + "\n", encoding="utf-8")
    _emit(args, {"n": pset.n, "p": pset.p, "deviation": dev})
    return EXIT_OK


def cmd_report(args) -> int:
    pset = _patterns(args)
    query = _query(args, pset)
    rng = None
    if "?" in query.input:
        rng = np.random.default_rng(_require_seed(args))
    gate = retrieval.gate_level_report(pset, query, rng=rng, max_qubits=args.max_qubits)
    analytic = oracle.analytic_report(pset, query)
    dev = report_deviation(gate, analytic)
    payload = {"gate_level": gate.to_dict(), "analytic": analytic.to_dict(), "max_deviation": dev}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    _distribution_rows(w, gate)
    _distribution_rows(w, analytic)
    _emit(args, payload, buf.getvalue())
    return EXIT_OK


def _threshold(args, pset: PatternSet) -> int:
    if args.threshold == "auto":
        return retrieval.choose_threshold(pset)
    try:
        T = int(args.threshold)
    except ValueError:
        raise InvalidInput(f"--threshold must be 'auto' or a positive integer, got {args.threshold!r}")
    if T < 1:
        raise InvalidInput("--threshold must be at least 1")
    return T


def cmd_recognize(args) -> int:
    pset = _patterns(args)
    query = _query(args, pset)
    seed = _require_seed(args)
    T = _threshold(args, pset)
    result = retrieval.recognize(pset, query, T, np.random.default_rng(seed),
                                 max_qubits=args.max_qubits)
    payload = {"input": query.input, "mask": query.mask, "threshold": T, "seed": seed,
               **result.to_dict(),
               "p0_analytic": oracle.analytic_report(pset, query).p0}
    _emit(args, payload)
    return EXIT_OK


def cmd_experiment(args) -> int:
    pset = _patterns(args)
    query = _query(args, pset)
    seed = _require_seed(args)
    if args.trials is None or args.trials < 1:
        raise InvalidInput("--trials must be a positive integer")
    res = retrieval.run_experiment(pset, query, args.trials, seed, workers=args.workers,
                                   max_qubits=args.max_qubits)
    payload = {"n": pset.n, "p": pset.p, "input": query.input, "mask": query.mask,
               "f_table": list(query.f_table) if query.f_table else None, **res.to_dict()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerow(["experiment", "c=0", _fmt(res.p0_analytic), _fmt(res.p0_empirical), _fmt(res.p0_stderr)])
    for k in res.analytic:
        w.writerow(["experiment", k, _fmt(res.analytic[k]), _fmt(res.frequencies[k]), _fmt(res.stderrs[k])])
    _emit(args, payload, buf.getvalue())
    return EXIT_OK


def cmd_threshold(args) -> int:
    pset = _patterns(args)
    probs = retrieval.self_recognition_probabilities(pset)
    payload = {"n": pset.n, "p": pset.p, "self_recognition": probs,
               "p_min": min(probs.values()), "T": retrieval.choose_threshold(pset)}
    _emit(args, payload)
    return EXIT_OK


def cmd_worst_case(args) -> int:
    if args.n is None or args.x is None:
        raise InvalidInput("worst-case needs --n and --x")
    _emit(args, retrieval.worst_case_threshold_scaling(args.n, args.x).to_dict())
    return EXIT_OK


COMMANDS = {
    "store": cmd_store,
    "report": cmd_report,
    "recognize": cmd_recognize,
    "experiment": cmd_experiment,
    "threshold": cmd_threshold,
    "worst-case": cmd_worst_case,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--patterns", metavar="PATH", help="pattern file, one bit string per line")
    common.add_argument("--input", metavar="BITS", help="query pattern; '?' marks unknown bits")
    common.add_argument("--mask", metavar="BITS", help="1 = known input position")
    common.add_argument("--rescale-mask", action="store_true",
                        help="use pi/2q instead of pi/2n as the masked phase unit")
    common.add_argument("--trials", type=int, metavar="N")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--threshold", default="auto", metavar="auto|N")
    common.add_argument("--f-table", metavar="PATH", help="n+1 whitespace-separated integers")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", metavar="PATH")
    common.add_argument("--max-qubits", type=int, default=DEFAULT_MAX_QUBITS, metavar="N")
    common.add_argument("--workers", type=int, default=1, metavar="N")
    common.add_argument("--dump", metavar="PATH", help="(store) write the memory state as JSON")
    common.add_argument("--n", type=int, metavar="N", help="(worst-case) pattern length")
    common.add_argument("--x", type=int, metavar="X", help="(worst-case) cluster radius")

    parser = argparse.ArgumentParser(
        prog="pqam", description="Probabilistic quantum associative memory simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PatternFileError as exc:
        print(f"pqam {args.command}: {args.patterns}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidInput as exc:
        print(f"pqam {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"pqam {args.command}: numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
