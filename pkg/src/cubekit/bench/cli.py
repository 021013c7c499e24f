"""``cubekit ssb gen|load|bench``."""

from __future__ import annotations

import sys
from pathlib import Path

from ..errors import ConfigError
from . import IMPLS, QUERIES


def _split(value: str, allowed, what: str):
    if value == "all":
        return tuple(allowed)
    items = tuple(v.strip().upper().lstrip("Q") if what == "queries" else v.strip().lower() for v in value.split(","))
    bad = [i for i in items if i not in allowed]
    if bad:
        raise ConfigError(f"unknown {what}: {', '.join(bad)}; expected some of {', '.join(allowed)}")
    return items


def cmd_gen(args) -> int:
    from . import ssb

    paths = ssb.generate(args.sf, args.seed, args.out)
    counts = ssb.row_counts(args.sf)
    for name in paths:
        print(f"{name}: {counts[name]} rows")
    return 0


def cmd_load(args) -> int:
    from ..cli import connection_config
    from ..dbio import connect
    from . import ssb

    with connect(connection_config(args)) as db:
        loaded = ssb.load(db, args.dir)
    if not loaded:
        print(f"no table files in {args.dir}; nothing loaded", file=sys.stderr)
    for name, n in loaded.items():
        print(f"{name}: {n} rows")
    return 0


def cmd_bench(args) -> int:
    from ..cli import connection_config
    from .harness import BenchConfig, SubprocessRunner, run_bench

    config = BenchConfig(
        scale_factor=args.sf,
        queries=_split(args.queries, QUERIES, "queries"),
        impls=_split(args.impls, IMPLS, "implementations"),
        runs=args.runs,
        seed=args.seed,
    )
    conn = connection_config(args)
    if conn.driver == "sqlite":
        conn = type(conn).sqlite(str(Path(conn.dbname).resolve()))
    runner = SubprocessRunner(conn, timeout=args.timeout)
    report = run_bench(config, runner, progress=lambda msg: print(msg, file=sys.stderr))
    text = report.to_csv()
    if args.report and args.report != "-":
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def run(args) -> int:
    return {"gen": cmd_gen, "load": cmd_load, "bench": cmd_bench}[args.ssb_command](args)
