"""Command-line entry point.

Exit codes: 0 success, 1 internal failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from .core import MAX_LATTICE_WIDTH, enumerate_lattice
from .ledger import Mode
from .simnet import SCHEMA_VERSION, SimConfig, SimResult, run
from .workload import GenParams, ScenarioError, emit, generate, load

log = logging.getLogger("bvclock")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2
TABLE_COLUMNS = ["schema_version", "mode", "label", "id", "sender", "submit_time", "confirm_time", "status"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 already; keep the message on stderr
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _configure_logging() -> None:
    level = os.environ.get("BVC_LOG", "error").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(Path(path), text)


def _table(result: SimResult, mode: Mode) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for t in result.metrics.transactions:
        writer.writerow([SCHEMA_VERSION, mode.value, t.label, t.id, t.sender, t.submit_time, t.confirm_time, t.status])
    return buf.getvalue()


def _load_scenario(path: str):
    if not Path(path).is_file():
        raise UsageError(f"scenario file not found: {path}")
    return load(path)


def _config(args, scenario, mode: Mode) -> SimConfig:
    return SimConfig.for_scenario(
        scenario,
        seed=args.seed,
        mode=mode,
        width=args.width,
        horizon=args.horizon,
        block_interval=args.block_interval,
        drop_probability=args.drop_prob,
    )


def cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    mode = Mode(args.mode)
    result = run(scenario, _config(args, scenario, mode))
    if args.trace:
        write_atomic(Path(args.trace), "".join(line + "\n" for line in result.trace))
    if args.table:
        write_atomic(Path(args.table), _table(result, mode))
    doc = result.metrics.to_document()
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    log.info("run %s: %d confirmed, trace %s", mode.value, result.metrics.confirmed, result.trace_hash)
    return EXIT_OK


DELTA_KEYS = ("confirmed", "stalled", "invalidated", "expired", "dropped")


def compare_report(scenario, args) -> tuple[dict, dict]:
    """The compare document plus the per-mode results it was built from."""
    results = {mode: run(scenario, _config(args, scenario, mode)) for mode in (Mode.BVC, Mode.NONCE)}
    aggregates = {mode: r.metrics.aggregates() for mode, r in results.items()}
    delta = {k: aggregates[Mode.BVC][k] - aggregates[Mode.NONCE][k] for k in DELTA_KEYS}
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "modes": {mode.value: r.metrics.to_document() for mode, r in results.items()},
        "delta": delta,
        "trace_hashes": {mode.value: r.trace_hash for mode, r in results.items()},
    }, results


def cmd_compare(args) -> int:
    scenario = _load_scenario(args.scenario)
    report, results = compare_report(scenario, args)
    if args.trace:
        for mode, r in results.items():
            path = Path(f"{args.trace}.{mode.value}.jsonl")
            write_atomic(path, "".join(line + "\n" for line in r.trace))
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def render_lattice(width: int) -> str:
    lattice = enumerate_lattice(width)
    names = [str(m) for m in lattice.masks]
    pad = max(len(n) for n in names)
    lines = [f"masks (k={width}): " + " ".join(names)]
    lines.append(" " * (pad + 1) + " ".join(n.rjust(pad) for n in names))
    for name, row in zip(names, lattice.matrix):
        lines.append(name + " " + " ".join(o.value.rjust(pad) for o in row))
    lines.append(f"incomparable pairs: {lattice.incomparable_pairs()}")
    return "\n".join(lines) + "\n"


def cmd_lattice(args) -> int:
    width = args.k if args.k is not None else args.width
    if width is None:
        width = 3
    if not 1 <= width <= MAX_LATTICE_WIDTH:
        raise UsageError(f"lattice width must be in 1..{MAX_LATTICE_WIDTH}, got {width}")
    _emit(render_lattice(width), args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    params = GenParams(
        senders=args.senders,
        txs=args.txs,
        alpha=args.alpha,
        dep_prob=args.dep_prob,
        rate=args.rate,
        width=args.width or 8,
    )
    scenario = generate(params, args.seed)
    _emit(emit(scenario), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _load_scenario(args.scenario)
    print(
        f"ok: width {scenario.width}, {len(scenario.accounts)} accounts, "
        f"{len(scenario.submissions)} submissions, {scenario.dependency_edges()} dependency edges, "
        f"{len(scenario.faults)} faults"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bvclock", description="Binary vector clock ledger simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sim_flags(p, with_mode: bool) -> None:
        p.add_argument("scenario")
        if with_mode:
            p.add_argument("--mode", choices=[m.value for m in Mode], default="bvc")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--width", type=int)
        p.add_argument("--out")
        p.add_argument("--trace")
        p.add_argument("--horizon", type=int)
        p.add_argument("--block-interval", type=int)
        p.add_argument("--drop-prob", type=float)

    p = sub.add_parser("run", help="simulate one mode")
    sim_flags(p, with_mode=True)
    p.add_argument("--table", help="also write one CSV row per transaction")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="simulate both modes with identical seed and faults")
    sim_flags(p, with_mode=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("lattice", help="print the comparability matrix of all k-bit masks")
    p.add_argument("k", nargs="?", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("gen", help="generate a pareto-skewed scenario")
    p.add_argument("--senders", type=int, default=10)
    p.add_argument("--txs", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.16)
    p.add_argument("--dep-prob", type=float, default=0.0)
    p.add_argument("--rate", type=float, default=50.0)
    p.add_argument("--width", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ScenarioError) as exc:
        print(f"bvclock: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        log.exception("internal failure")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
