"""Command-line entry point.

Exit codes: 0 success, 1 user error, 2 database error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path
from typing import List, Optional

from .dbio import ConnectionConfig, connect
from .errors import ConfigError, DatabaseError, UserError

EXIT_OK, EXIT_USER, EXIT_DB, EXIT_INTERNAL = 0, 1, 2, 3


def _add_connection(p: argparse.ArgumentParser):
    g = p.add_argument_group("database connection (default: CUBEKIT_DB_* environment variables)")
    g.add_argument("--sqlite", metavar="PATH", help="use an sqlite database file")
    g.add_argument("--config", metavar="FILE", help="INI file with a [database] section")
    g.add_argument("--dbname")
    g.add_argument("--user")
    g.add_argument("--password")
    g.add_argument("--host")
    g.add_argument("--port")
    g.add_argument("--schema")


def connection_config(args) -> ConnectionConfig:
    if args.sqlite:
        return ConnectionConfig.sqlite(args.sqlite)
    if args.config:
        return ConnectionConfig.from_file(args.config)
    if args.dbname:
        kw = {k: getattr(args, k) for k in ("user", "password", "host", "port", "schema") if getattr(args, k)}
        return ConnectionConfig(dbname=args.dbname, **kw)
    return ConnectionConfig.from_env()


def _read_meta(path: str):
    from .metadata import parse_turtle

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read metadata file {path!r}: {exc.strerror}") from None
    return parse_turtle(text)


def _session(args):
    from .metadata import schema_from_graph
    from .navigator import create_session

    graph = _read_meta(args.meta)
    db = connect(connection_config(args))
    cube = schema_from_graph(graph, db.introspect())
    return create_session(db, [cube])


def cmd_infer(args) -> int:
    from .inference import infer_cube
    from .metadata import DEFAULT_BASE, add_to_graph, serialize_turtle

    with connect(connection_config(args)) as db:
        report = infer_cube(db.introspect(exact_counts=args.exact_counts), view_name=args.view_name)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    graph = add_to_graph(report.cube, dsd_name=args.dsd_name, base=args.base or DEFAULT_BASE, view_label=args.view_name)
    text = serialize_turtle(graph)
    if args.out and args.out != "-":
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _list(items) -> str:
    return "[" + ", ".join(str(i) for i in items) + "]"


def cmd_describe(args) -> int:
    session = _session(args)
    try:
        if not args.path:
            for name in session.views:
                print(name)
            return EXIT_OK
        parts = args.path.split(".")
        cube = session.cube(parts[0])
        if len(parts) == 1:
            print("measures:", _list(m.name for m in cube.measures))
            print("dimensions:", _list(d.name for d in cube.dimensions))
        elif len(parts) == 2:
            dim = cube.dimension(parts[1])
            print("[" + ", ".join(_list(h) for h in dim.hierarchies()) + "]")
        elif len(parts) == 3:
            lb = cube.dimension(parts[1]).level(parts[2])
            print(_list(lb.level.attrs))
        else:
            raise UserError(f"cannot describe {args.path!r}; use View, View.Dimension or View.Dimension.level")
    finally:
        session.close()
    return EXIT_OK


def cmd_query(args) -> int:
    from . import dsl, views
    from .shaper import render

    if args.file and args.file != "-":
        try:
            text = Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read query file {args.file!r}: {exc.strerror}") from None
    else:
        text = sys.stdin.read()
    query = dsl.parse_query(text)
    session = _session(args)
    try:
        view = dsl.build_view(query, session)
        if args.explain:
            print(views.explain(view, session.db, allow_huge=args.allow_huge).explain())
            return EXIT_OK
        table = views.output(view, session.db, allow_huge=args.allow_huge)
    finally:
        session.close()
    sys.stdout.write(render(table, args.format))
    t = table.timing
    print(f"engine={t['engine']:.4f}s db={t['db']:.4f}s", file=sys.stderr)
    return EXIT_OK


def cmd_ssb(args) -> int:
    from .bench import cli as bench_cli

    return bench_cli.run(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubekit", description="Infer cubes from snowflake schemas and query them.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="infer cube metadata and write it as Turtle")
    _add_connection(p)
    p.add_argument("--out", "-o", help="output file (default: stdout)")
    p.add_argument("--base", help="IRI namespace for generated names (default http://example.org/)")
    p.add_argument("--dsd-name", help="local name of the data structure definition (default <fact>_dsd)")
    p.add_argument("--view-name", help="name of the view (default: fact table name, capitalized)")
    p.add_argument("--exact-counts", action="store_true", help="count rows instead of using statistics")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("describe", help="list views, hierarchies or level attributes")
    _add_connection(p)
    p.add_argument("--meta", required=True)
    p.add_argument("path", nargs="?", help="View, View.Dimension or View.Dimension.level")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("query", help="run a cube-view query")
    _add_connection(p)
    p.add_argument("--meta", required=True)
    p.add_argument("--file", "-f", help="query file (default: stdin)")
    p.add_argument("--format", choices=("csv", "pretty"), default="pretty")
    p.add_argument("--explain", action="store_true", help="print the SQL instead of running it")
    p.add_argument("--allow-huge", action="store_true", help="allow running a view without axes")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("ssb", help="star schema benchmark tools")
    ssb = p.add_subparsers(dest="ssb_command", required=True)
    g = ssb.add_parser("gen", help="generate SSB tables as CSV files")
    g.add_argument("--sf", type=float, required=True)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out", required=True)
    l = ssb.add_parser("load", help="load generated files into an empty database")
    _add_connection(l)
    l.add_argument("--dir", required=True)
    b = ssb.add_parser("bench", help="run the benchmark protocol")
    _add_connection(b)
    b.add_argument("--sf", type=float, required=True, help="scale factor of the loaded data (for the report)")
    b.add_argument("--impls", default="engine,jff,jdf,sqlj")
    b.add_argument("--queries", default="all")
    b.add_argument("--runs", type=int, default=5)
    b.add_argument("--seed", type=int, default=7)
    b.add_argument("--report", help="CSV report path (default: stdout)")
    b.add_argument("--timeout", type=float, default=600.0, help="seconds allowed per run")
    p.set_defaults(func=cmd_ssb)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except DatabaseError as exc:
        print(f"database error: {exc}", file=sys.stderr)
        return EXIT_DB
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception:  # noqa: BLE001 - last-resort mapping to the documented exit code
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
