"""Client-side baselines: fetch tables, join, filter and aggregate in Python.

All three strategies read only the columns a view needs and then do the
same thing once the joined rows exist: evaluate the predicate, keep rows
whose axis values are listed members, group by the axis values and
aggregate.  They differ in how the joined rows are produced:

* ``jff`` fetches every table with its own SELECT and hash-joins the fact
  rows to each bottom level, then to the next level up, and so on;
* ``jdf`` fetches the same tables but first joins each dimension's levels
  into one denormalized dimension table, then joins the fact rows to it;
* ``sqlj`` lets the database do the joins in one SELECT (no filters
  pushed down) and fetches the joined rows.

Rows are plain tuples addressed through a column-name index, so memory
grows with the number of fact rows the way a dataframe's would.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .. import shaper, sqlgen, views
from ..dbio import DbSession, ResultSet, quote_ident as q
from ..model import (
    And,
    Atom,
    AttrRef,
    BinOp,
    BoolConst,
    CubeView,
    DimensionBinding,
    FactColumn,
    Group,
    Number,
    Predicate,
    compare,
    expr_columns,
    predicate_atoms,
)

IMPLS = ("jff", "jdf", "sqlj")


@dataclass
class Frame:
    columns: List[str]
    rows: List[tuple]

    def index(self, name: str) -> int:
        return self.columns.index(name)


@dataclass
class BaselineResult:
    table: shaper.PivotTable
    db_time: float
    total_time: float


def fact_col(name: str) -> str:
    return f"ft.{name}"


def level_col(alias: str, name: str) -> str:
    return f"{alias}.{name}"


# ---------------------------------------------------------------------------
# What a view needs
# ---------------------------------------------------------------------------


@dataclass
class DimNeeds:
    dim: DimensionBinding
    depth: int  # number of levels joined, bottom first
    attrs: Dict[int, List[str]] = field(default_factory=dict)  # level index -> needed attribute columns


def needs(view: CubeView) -> Tuple[List[str], List[DimNeeds]]:
    """Fact columns and per-dimension level columns the view touches."""
    cube = view.cube
    refs = [ax.ref for ax in view.axes] + [a.ref for a in predicate_atoms(view.predicate)]
    fact_cols: List[str] = []
    for _, m in view.measures:
        fact_cols.extend(c for c in expr_columns(m.expr) if c not in fact_cols)
    by_dim: Dict[str, DimNeeds] = {}
    for ref in refs:
        if ref.is_fact:
            if ref.attribute not in fact_cols:
                fact_cols.append(ref.attribute)
            continue
        dim, lb = cube.binding_of(ref)
        i = dim.level_bindings.index(lb)
        dn = by_dim.setdefault(dim.name, DimNeeds(dim, 0))
        dn.depth = max(dn.depth, i + 1)
        cols = dn.attrs.setdefault(i, [])
        if ref.attribute not in cols:
            cols.append(ref.attribute)
    ordered = [by_dim[d.name] for d in cube.dimensions if d.name in by_dim]
    for dn in ordered:
        if dn.dim.fact_fk_column not in fact_cols:
            fact_cols.append(dn.dim.fact_fk_column)
    return fact_cols, ordered


def _level_columns(dn: DimNeeds, i: int) -> List[str]:
    """Key, needed attributes and (when the parent is joined too) the parent FK."""
    lb = dn.dim.level_bindings[i]
    cols = [lb.key_column] + [c for c in dn.attrs.get(i, []) if c != lb.key_column]
    if i + 1 < dn.depth and lb.fk_column not in cols:
        cols.append(lb.fk_column)
    return cols


# ---------------------------------------------------------------------------
# Table algebra
# ---------------------------------------------------------------------------


class _Fetcher:
    def __init__(self, db: DbSession):
        self.db = db
        self.db_time = 0.0

    def table(self, table: str, columns: Sequence[str], prefix: str) -> Frame:
        sql = f"SELECT {', '.join(q(c) for c in columns)} FROM {q(table)}"
        rs = self.db.execute(sql)
        self.db_time += rs.db_time
        return Frame([level_col(prefix, c) for c in columns], rs.rows)

    def query(self, sql: str, columns: Sequence[str]) -> Frame:
        rs = self.db.execute(sql)
        self.db_time += rs.db_time
        return Frame(list(columns), rs.rows)


def hash_join(left: Frame, left_col: str, right: Frame, right_col: str) -> Frame:
    """Inner equi-join; the right side's key column is dropped from the output."""
    k = right.index(right_col)
    keep = [j for j in range(len(right.columns)) if j != k]
    if keep:
        lookup = {r[k]: tuple(r[j] for j in keep) for r in right.rows}
    else:
        lookup = {r[k]: () for r in right.rows}
    i = left.index(left_col)
    get = lookup.get
    rows = []
    append = rows.append
    for row in left.rows:
        extra = get(row[i])
        if extra is not None:
            append(row + extra)
    return Frame(left.columns + [right.columns[j] for j in keep], rows)


def _fetch_level(f: _Fetcher, dn: DimNeeds, i: int) -> Frame:
    lb = dn.dim.level_bindings[i]
    return f.table(lb.table, _level_columns(dn, i), lb.alias)


def _fact(f: _Fetcher, fact_table: str, fact_cols: List[str]) -> Frame:
    frame = f.table(fact_table, fact_cols, "ft")
    return frame


def joined_jff(f: _Fetcher, view: CubeView) -> Frame:
    fact_cols, dims = needs(view)
    frame = _fact(f, view.cube.fact_table, fact_cols)
    for dn in dims:
        link = fact_col(dn.dim.fact_fk_column)
        for i in range(dn.depth):
            lb = dn.dim.level_bindings[i]
            frame = hash_join(frame, link, _fetch_level(f, dn, i), level_col(lb.alias, lb.key_column))
            link = level_col(lb.alias, lb.fk_column)
    return frame


def joined_jdf(f: _Fetcher, view: CubeView) -> Frame:
    fact_cols, dims = needs(view)
    denorm = []
    for dn in dims:
        bottom = dn.dim.level_bindings[0]
        d = _fetch_level(f, dn, 0)
        for i in range(1, dn.depth):
            lb, below = dn.dim.level_bindings[i], dn.dim.level_bindings[i - 1]
            d = hash_join(d, level_col(below.alias, below.fk_column), _fetch_level(f, dn, i), level_col(lb.alias, lb.key_column))
        denorm.append((dn, d, level_col(bottom.alias, bottom.key_column)))
    frame = _fact(f, view.cube.fact_table, fact_cols)
    for dn, d, key in denorm:
        frame = hash_join(frame, fact_col(dn.dim.fact_fk_column), d, key)
    return frame


def joined_sqlj(f: _Fetcher, view: CubeView) -> Frame:
    fact_cols, dims = needs(view)
    select = [f"{q('ft')}.{q(c)}" for c in fact_cols]
    names = [fact_col(c) for c in fact_cols]
    for dn in dims:
        for i in range(dn.depth):
            lb = dn.dim.level_bindings[i]
            for c in _level_columns(dn, i):
                select.append(f"{q(lb.alias)}.{q(c)}")
                names.append(level_col(lb.alias, c))
    depth = {dn.dim.name: dn.depth - 1 for dn in dims}
    sql = "SELECT " + ", ".join(select) + "\nFROM " + sqlgen.from_clause(view.cube.fact_table, [dn.dim for dn in dims], depth)
    return f.query(sql, names)


JOINERS: Dict[str, Callable[[_Fetcher, CubeView], Frame]] = {
    "jff": joined_jff,
    "jdf": joined_jdf,
    "sqlj": joined_sqlj,
}


# ---------------------------------------------------------------------------
# Filter, aggregate, pivot
# ---------------------------------------------------------------------------


def _column_of(view: CubeView, ref: AttrRef) -> str:
    if ref.is_fact:
        return fact_col(ref.attribute)
    _, lb = view.cube.binding_of(ref)
    return level_col(lb.alias, ref.attribute)


def compile_predicate(view: CubeView, p: Predicate, frame: Frame) -> Callable[[tuple], Optional[bool]]:
    """A row -> three-valued truth function."""
    if isinstance(p, BoolConst):
        value = p.value
        return lambda row: value
    if isinstance(p, Group):
        return compile_predicate(view, p.inner, frame)
    if isinstance(p, Atom):
        i = frame.index(_column_of(view, p.ref))
        op, lit = p.op, p.literal
        return lambda row: compare(row[i], op, lit)
    left = compile_predicate(view, p.left, frame)
    right = compile_predicate(view, p.right, frame)
    if isinstance(p, And):
        def both(row):
            a = left(row)
            if a is False:
                return False
            b = right(row)
            if b is False:
                return False
            return True if (a and b) else None
        return both

    def either(row):
        a = left(row)
        if a is True:
            return True
        b = right(row)
        if b is True:
            return True
        return False if (a is False and b is False) else None
    return either


def compile_expr(expr, frame: Frame) -> Callable[[tuple], object]:
    if isinstance(expr, FactColumn):
        i = frame.index(fact_col(expr.name))
        return lambda row: row[i]
    if isinstance(expr, Number):
        v = expr.value
        return lambda row: v
    assert isinstance(expr, BinOp)
    a, b, op = compile_expr(expr.left, frame), compile_expr(expr.right, frame), expr.op

    def apply(row):
        x, y = a(row), b(row)
        if x is None or y is None:
            return None
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        return None if y == 0 else x / y
    return apply


class _Acc:
    """Running aggregate that skips NULLs like SQL does."""

    __slots__ = ("agg", "value", "count")

    def __init__(self, agg: str):
        self.agg = agg
        self.value = None
        self.count = 0

    def add(self, v):
        if v is None:
            return
        self.count += 1
        if self.value is None:
            self.value = v
        elif self.agg in ("SUM", "AVG"):
            self.value += v
        elif self.agg == "MIN":
            self.value = min(self.value, v)
        elif self.agg == "MAX":
            self.value = max(self.value, v)

    def result(self):
        if self.agg == "COUNT":
            return self.count
        if self.agg == "AVG" and self.count:
            return self.value / self.count
        return self.value


_AGGS = ("SUM", "MIN", "MAX", "COUNT", "AVG")


def aggregate(view: CubeView, frame: Frame) -> ResultSet:
    """Filter, group by axis values and aggregate into the engine's result layout."""
    keep = compile_predicate(view, view.predicate, frame)
    axis_idx = [frame.index(_column_of(view, ax.ref)) for ax in view.axes]
    allowed = [set(ax.members.values) for ax in view.axes]
    measures = []
    for _, m in view.measures:
        agg = m.agg.upper()
        if agg not in _AGGS:
            raise ValueError(f"unsupported aggregate {m.agg!r}")
        measures.append((agg, compile_expr(m.expr, frame)))
    groups: Dict[tuple, List[_Acc]] = {}
    for row in frame.rows:
        key = tuple(row[i] for i in axis_idx)
        if any(v not in ok for v, ok in zip(key, allowed)):
            continue
        if keep(row) is not True:
            continue
        accs = groups.get(key)
        if accs is None:
            accs = groups[key] = [_Acc(agg) for agg, _ in measures]
        for acc, (_, fn) in zip(accs, measures):
            acc.add(fn(row))
    rows = [key + tuple(a.result() for a in accs) for key, accs in groups.items()]
    columns = [ax.attribute for ax in view.axes] + list(view.measure_names)
    return ResultSet(columns, rows)


def run(impl: str, view: CubeView, db: DbSession, allow_huge: bool = False) -> BaselineResult:
    """Populate ``view`` with one of the baseline strategies."""
    try:
        joiner = JOINERS[impl]
    except KeyError:
        raise ValueError(f"unknown baseline {impl!r}; expected one of {', '.join(IMPLS)}") from None
    start = time.perf_counter()
    ready = views.prepare(view, db, allow_huge)
    f = _Fetcher(db)
    frame = joiner(f, ready)
    rs = aggregate(ready, frame)
    del frame
    table = shaper.pivot(rs, views.narrow(ready))
    total = time.perf_counter() - start
    table.timing = {"engine": total - f.db_time, "db": f.db_time, "total": total}
    return BaselineResult(table, f.db_time, total)
