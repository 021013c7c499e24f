"""Benchmark protocol: shuffled (query, impl) cells, repeated runs, trimmed averages."""

from __future__ import annotations

import csv
import io
import json
import os
import random
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..dbio import ConnectionConfig
from ..errors import ConfigError
from . import IMPLS, QUERIES
from .worker import CONN_ENV

REPORT_COLUMNS = ("query", "impl", "avg_s", "engine_s", "db_s", "peak_rss_bytes", "oom")


@dataclass(frozen=True)
class BenchConfig:
    scale_factor: float
    queries: Tuple[str, ...] = QUERIES
    impls: Tuple[str, ...] = IMPLS
    runs: int = 5
    seed: int = 7

    def __post_init__(self):
        if not self.scale_factor > 0:
            raise ConfigError(f"scale factor must be positive, got {self.scale_factor}")
        if self.runs < 3:
            raise ConfigError(f"runs must be at least 3 so the highest and lowest can be dropped, got {self.runs}")
        bad = [q for q in self.queries if q not in QUERIES]
        if bad or not self.queries:
            raise ConfigError(f"unknown queries {bad}; expected some of {', '.join(QUERIES)}")
        bad = [i for i in self.impls if i not in IMPLS]
        if bad or not self.impls:
            raise ConfigError(f"unknown implementations {bad}; expected some of {', '.join(IMPLS)}")


@dataclass(frozen=True)
class Sample:
    total: Optional[float]
    engine: Optional[float] = None
    db: Optional[float] = None
    peak_rss: int = 0
    oom: bool = False


@dataclass
class Cell:
    query: str
    impl: str
    avg_s: Optional[float]
    engine_s: Optional[float]
    db_s: Optional[float]
    peak_rss_bytes: int
    oom: bool
    samples: List[Sample] = field(default_factory=list, repr=False)


@dataclass
class BenchReport:
    config: BenchConfig
    cells: List[Cell]
    order: List[Tuple[str, str]]  # execution order of the (query, impl) pairs

    def cell(self, query: str, impl: str) -> Cell:
        for c in self.cells:
            if c.query == query and c.impl == impl:
                return c
        raise KeyError((query, impl))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for c in self.cells:
            w.writerow([
                c.query, c.impl,
                "" if c.avg_s is None else f"{c.avg_s:.6f}",
                "" if c.engine_s is None else f"{c.engine_s:.6f}",
                "" if c.db_s is None else f"{c.db_s:.6f}",
                c.peak_rss_bytes,
                "true" if c.oom else "false",
            ])
        return out.getvalue()


def read_report(text: str) -> List[dict]:
    """Rows of a report CSV with numbers parsed back."""
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append({
            "query": r["query"],
            "impl": r["impl"],
            "avg_s": float(r["avg_s"]) if r["avg_s"] else None,
            "engine_s": float(r["engine_s"]) if r["engine_s"] else None,
            "db_s": float(r["db_s"]) if r["db_s"] else None,
            "peak_rss_bytes": int(r["peak_rss_bytes"]),
            "oom": r["oom"] == "true",
        })
    return rows


def trimmed_indices(values: Sequence[float]) -> List[int]:
    """Indices left after dropping one highest and one lowest value."""
    if len(values) < 3:
        raise ValueError(f"need at least 3 samples, got {len(values)}")
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    return sorted(order[1:-1])


def trimmed_mean(values: Sequence[float]) -> float:
    kept = trimmed_indices(values)
    return sum(values[i] for i in kept) / len(kept)


def summarize(query: str, impl: str, samples: List[Sample]) -> Cell:
    peak = max((s.peak_rss for s in samples), default=0)
    if any(s.oom for s in samples):
        return Cell(query, impl, None, None, None, peak, True, samples)
    totals = [s.total for s in samples]
    kept = trimmed_indices(totals)
    avg = sum(totals[i] for i in kept) / len(kept)

    def part(name):
        vals = [getattr(samples[i], name) for i in kept]
        return None if any(v is None for v in vals) else sum(vals) / len(vals)

    return Cell(query, impl, avg, part("engine"), part("db"), peak, False, samples)


Runner = Callable[[str, str, int], Sample]


def run_bench(config: BenchConfig, runner: Runner, progress: Optional[Callable[[str], None]] = None) -> BenchReport:
    """Run every (query, impl) cell ``config.runs`` times in a seed-shuffled order.

    ``runner(query, impl, run_index)`` performs one measured execution.  A
    cell stops at its first out-of-memory sample and is reported as OOM.
    """
    pairs = [(q, i) for q in config.queries for i in config.impls]
    random.Random(config.seed).shuffle(pairs)
    results: Dict[Tuple[str, str], Cell] = {}
    for query, impl in pairs:
        samples = []
        for r in range(config.runs):
            s = runner(query, impl, r)
            samples.append(s)
            if progress:
                progress(f"Q{query} {impl} run {r + 1}/{config.runs}: "
                         + ("OOM" if s.oom else f"{s.total:.3f}s rss={s.peak_rss / 2**20:.1f}MiB"))
            if s.oom:
                break
        results[(query, impl)] = summarize(query, impl, samples)
    cells = [results[(q, i)] for q in config.queries for i in config.impls]
    return BenchReport(config, cells, pairs)


class SubprocessRunner:
    """Runs each execution in ``python -m cubekit.bench.worker`` and samples its RSS."""

    def __init__(self, conn: ConnectionConfig, timeout: float = 600.0, interval: float = 0.05,
                 python: str = sys.executable):
        self.conn = conn
        self.timeout = timeout
        self.interval = interval
        self.python = python

    def __call__(self, query: str, impl: str, run: int) -> Sample:
        import psutil

        env = dict(os.environ)
        env[CONN_ENV] = json.dumps(asdict(self.conn))
        proc = subprocess.Popen(
            [self.python, "-m", "cubekit.bench.worker", query, impl],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, env=env, text=True,
        )
        watched = psutil.Process(proc.pid)
        peak = 0
        deadline = time.monotonic() + self.timeout
        while proc.poll() is None:
            try:
                peak = max(peak, watched.memory_info().rss)
            except psutil.Error:
                pass
            if time.monotonic() > deadline:
                proc.kill()
                proc.communicate()
                raise TimeoutError(f"Q{query} {impl} exceeded {self.timeout:.0f}s")
            time.sleep(self.interval)
        out, err = proc.communicate()
        if proc.returncode == -9 or "MemoryError" in err:
            # killed by the kernel's OOM killer, or died allocating outside the guarded section
            return Sample(None, peak_rss=peak, oom=True)
        if proc.returncode != 0:
            raise RuntimeError(f"worker for Q{query} {impl} failed ({proc.returncode}):\n{err.strip()}")
        data = json.loads(out.strip().splitlines()[-1])
        peak = max(peak, int(data["rss"]))
        if data["oom"]:
            return Sample(None, peak_rss=peak, oom=True)
        return Sample(data["total"], data["engine"], data["db"], peak, False)
