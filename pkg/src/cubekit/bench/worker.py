"""One measured execution, run in a fresh interpreter by the harness.

Usage: ``python -m cubekit.bench.worker QUERY IMPL``, with the connection
settings as JSON in ``CUBEKIT_BENCH_CONN``.  Prints one JSON object:
``total``, ``engine`` and ``db`` seconds, ``rss`` (the process's own peak
resident set in bytes) and ``oom``.

Session setup (introspection, cube inference, parsing the query and
resolving its members) happens before the clock starts; the timed part is
populating the view.
"""

from __future__ import annotations

import json
import os
import resource
import sys

CONN_ENV = "CUBEKIT_BENCH_CONN"


def _peak_rss_bytes() -> int:
    # VmHWM belongs to this address space. ru_maxrss survives exec and so
    # can report the parent's footprint at fork time.
    try:
        with open("/proc/self/status") as f:
            for line in f:
                if line.startswith("VmHWM:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    # ru_maxrss is in KiB on Linux
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def measure(query: str, impl: str, db) -> dict:
    from .. import dsl, views
    from ..navigator import create_session
    from . import baselines
    from .queries import query_text

    session = create_session(db)
    view = dsl.compile_query(query_text(query), session)
    try:
        if impl == "engine":
            timing = views.output(view, db).timing
        else:
            timing = baselines.run(impl, view, db).table.timing
    except MemoryError:
        return {"total": None, "engine": None, "db": None, "rss": _peak_rss_bytes(), "oom": True}
    return {**timing, "rss": _peak_rss_bytes(), "oom": False}


def main(argv=None) -> int:
    import logging

    from ..dbio import ConnectionConfig, connect

    logging.basicConfig(level=logging.ERROR)
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m cubekit.bench.worker QUERY IMPL", file=sys.stderr)
        return 2
    config = ConnectionConfig(**json.loads(os.environ[CONN_ENV]))
    with connect(config) as db:
        result = measure(argv[0], argv[1], db)
    print(json.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
