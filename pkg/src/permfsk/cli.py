"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 search budget
exhausted before optimality was proven.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from permfsk.channel import ChannelScenario, link_budget_table
from permfsk.codec import DemodFrame, decode_max_agreement
from permfsk.permcode import (
    EXAMPLE_CODE_M4,
    M4_D3_CODE,
    M3_CODES,
    MAX_CODE_SIZES,
    CodeBook,
    cardinality_bound,
    encode,
)
from permfsk.search import CapacityError, search_max_code
from permfsk.simulate import ExperimentConfig, run_experiment

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_UNPROVEN = 3

PUBLISHED_LINK_BUDGET = {2: (16.0, 40.0), 3: (21.0, 37.0), 4: (38.0, 27.0)}

CANNED = {
    "example4": lambda: EXAMPLE_CODE_M4,
    "m4d3": lambda: M4_D3_CODE,
    "m3d2": lambda: M3_CODES[2],
    "m3d3": lambda: M3_CODES[3],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _parse_snr(spec: str | None) -> tuple[float, ...]:
    """``8,10,12`` or ``start:stop:step`` (inclusive stop)."""
    if not spec:
        return ()
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise UsageError("SNR step must be positive")
            values = []
            x = start
            while x <= stop + 1e-9:
                values.append(round(x, 9))
                x += step
            return tuple(values)
        return tuple(float(x) for x in spec.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --snr-db value {spec!r}") from exc


def _resolve_code(args) -> tuple[CodeBook, str]:
    if args.code_file:
        if args.code_file in CANNED:
            return CANNED[args.code_file](), args.code_file
        path = Path(args.code_file)
        if not path.exists():
            raise UsageError(f"codebook file {path} does not exist")
        return CodeBook.load(path), str(path)
    if args.M is None or args.d is None:
        raise UsageError("give --code-file, or both -M and -d for a searched code")
    report = search_max_code(args.M, args.d, time_limit=args.time_limit)
    return report.best_code, f"searched:M={args.M},d={args.d}"


# -- subcommands -------------------------------------------------------------


def cmd_bound(args) -> int:
    try:
        print(cardinality_bound(args.M, args.d))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return EXIT_OK


def cmd_search(args) -> int:
    try:
        report = search_max_code(args.M, args.d, max_nodes=args.max_nodes, time_limit=args.time_limit)
    except CapacityError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        report.best_code.save(args.out)
    summary = {
        "M": report.M,
        "d": report.d,
        "size": report.size,
        "bound": report.bound,
        "d_min": report.best_code.d_min,
        "proven_optimal": report.proven_optimal,
        "nodes_explored": report.nodes_explored,
        "time_spent_s": round(report.time_spent, 3),
    }
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    else:
        sys.stdout.write(_csv([list(summary), list(summary.values())]))
    return EXIT_OK if report.proven_optimal else EXIT_UNPROVEN


def small_code_rows() -> list[list]:
    rows = [["d_min", "message", "codeword"]]
    for d, code in M3_CODES.items():
        for i, w in enumerate(code.words, start=1):
            rows.append([d, i, " ".join(map(str, w))])
    return rows


def code_size_rows(max_M: int = 5, time_limit: float | None = None) -> tuple[list[list], bool]:
    rows = [["M", "d_min", "size", "bound", "proven_optimal", "published"]]
    all_proven = True
    for M in range(2, max_M + 1):
        for d in range(2, M + 1):
            rep = search_max_code(M, d, time_limit=time_limit)
            all_proven &= rep.proven_optimal
            rows.append([M, d, rep.size, rep.bound, rep.proven_optimal, MAX_CODE_SIZES.get((M, d), "")])
    return rows, all_proven


def link_budget_rows(b: float = 4800.0, M: int = 4, code_sizes: dict[int, int] | None = None) -> list[list]:
    rows = [["d_min", "code_size", "bandwidth_kHz", "snr_dB", "published_bandwidth_kHz", "published_snr_dB"]]
    for r in link_budget_table(b=b, M=M, code_sizes=code_sizes):
        published = PUBLISHED_LINK_BUDGET.get(r.d_min, ("", "")) if (M, b) == (4, 4800.0) else ("", "")
        rows.append([r.d_min, r.code_size, round(r.bandwidth_kHz, 2), round(r.snr_db, 1), *published])
    return rows


def cmd_tables(args) -> int:
    t3, proven = code_size_rows(time_limit=args.time_limit)
    sizes = {row[1]: row[2] for row in t3[1:] if row[0] == 4}
    sections = {
        "small_codes": small_code_rows(),
        "code_sizes": t3,
        "link_budget": link_budget_rows(code_sizes=sizes),
    }
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, rows in sections.items():
            (outdir / f"{name}.csv").write_text(_csv(rows))
    else:
        for name, rows in sections.items():
            sys.stdout.write(f"# {name}\n{_csv(rows)}\n")
    return EXIT_OK if proven else EXIT_UNPROVEN


def cmd_linkbudget(args) -> int:
    M = args.M or 4
    sizes = {}
    for d in range(2, M + 1):
        sizes[d] = search_max_code(M, d, time_limit=args.time_limit).size
    rows = link_budget_rows(b=args.bitrate, M=M, code_sizes=sizes)
    if args.format == "json":
        keys = rows[0]
        _emit(json.dumps([dict(zip(keys, r)) for r in rows[1:]], indent=2) + "\n", args.out)
    else:
        _emit(_csv(rows), args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    code, _ = _resolve_code(args)
    word = encode(args.message - 1, code)
    print(" ".join(map(str, word)))
    return EXIT_OK


def cmd_decode(args) -> int:
    code, _ = _resolve_code(args)
    text = Path(args.frame).read_text() if args.frame != "-" else sys.stdin.read()
    decision = decode_max_agreement(DemodFrame.from_text(text), code)
    out = {
        "kind": decision.kind.value,
        "message": None if decision.message is None else decision.message + 1,
        "codeword": None if decision.message is None else list(code.words[decision.message]),
        "candidates": sorted(i + 1 for i in decision.candidates),
        "score": decision.score,
    }
    print(json.dumps(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    code, source = _resolve_code(args)
    scenario = ChannelScenario.load(args.scenario) if args.scenario else ChannelScenario()
    try:
        config = ExperimentConfig(
            code=code,
            code_source=source,
            scenario=scenario,
            snr_db=_parse_snr(args.snr_db),
            trials=args.trials,
            seed=args.seed,
            bit_rate=args.bitrate,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_experiment(config, threads=args.threads)
    if args.out:
        result.write(args.out, args.format)
    else:
        sys.stdout.write(result.to_json() if args.format == "json" else result.to_csv())
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="permfsk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def code_opts(sp):
        sp.add_argument("-M", type=int)
        sp.add_argument("-d", type=int, help="search a maximum code with this distance")
        sp.add_argument(
            "--code-file",
            help="codebook text file, or one of: " + ", ".join(CANNED),
        )
        sp.add_argument("--time-limit", type=float, default=None, help="search budget in seconds")

    sp = sub.add_parser("bound", help="print the M!/(d-1)! code size bound")
    sp.add_argument("-M", type=int, required=True)
    sp.add_argument("-d", type=int, required=True)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("search", help="exact maximum code search")
    sp.add_argument("-M", type=int, required=True)
    sp.add_argument("-d", type=int, required=True)
    sp.add_argument("--max-nodes", type=int, default=None)
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--out", help="write the codebook here")
    sp.add_argument("--format", choices=["csv", "json"], default="json")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("tables", help="reproduce the code-size and link-budget tables")
    sp.add_argument("--out", help="directory for small_codes.csv, code_sizes.csv, link_budget.csv")
    sp.add_argument("--time-limit", type=float, default=None)
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("linkbudget", help="bandwidth and SNR bound per minimum distance")
    sp.add_argument("-M", type=int, default=4)
    sp.add_argument("--bitrate", type=float, default=4800.0)
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_linkbudget)

    sp = sub.add_parser("encode", help="codeword for a 1-based message number")
    code_opts(sp)
    sp.add_argument("--message", type=int, required=True)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="max-agreement decoding of a demodulator frame")
    code_opts(sp)
    sp.add_argument("--frame", required=True, help="frame text file ('-' for stdin)")
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo run")
    code_opts(sp)
    sp.add_argument("--bitrate", type=float, default=None)
    sp.add_argument("--scenario", help="scenario JSON file")
    sp.add_argument("--snr-db", help="SNR points: '8,10,12' or 'start:stop:step'")
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"permfsk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"permfsk: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
