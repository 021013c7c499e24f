"""Sessions, view discovery and member navigation.

A member path starts at some level's attribute and descends one level at a
time, each step naming a value of the child level's member attribute.  Every
step is checked against the database with one scoped query; results are
cached on the database session.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .dbio import DbSession, quote_ident as q
from .errors import LiteralTypeError, NoChildLevel, UnknownMember, UnknownView, UserError
from .model import (
    CHRONOLOGICAL,
    LEXICOGRAPHIC,
    USER_GIVEN,
    AttrRef,
    CubeBinding,
    MemberList,
    coerce_literal,
    is_temporal_type,
    norm,
)

MONTHS = (
    "january", "february", "march", "april", "may", "june",
    "july", "august", "september", "october", "november", "december",
)


@dataclass(frozen=True)
class MemberPath:
    """``steps`` are ``(level, attribute, value)`` from the anchor downward."""

    dimension: str
    steps: Tuple[Tuple[str, str, object], ...]

    @property
    def level(self) -> str:
        return self.steps[-1][0]

    @property
    def attribute(self) -> str:
        return self.steps[-1][1]

    @property
    def value(self):
        return self.steps[-1][2]

    @property
    def ref(self) -> AttrRef:
        return AttrRef(self.dimension, self.level, self.attribute)

    def as_members(self) -> MemberList:
        return MemberList(self.ref, (self.value,), USER_GIVEN)


# ---------------------------------------------------------------------------
# Ordering
# ---------------------------------------------------------------------------


def _lex_key(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (0, v, "")
    return (1, 0, str(v))


def _as_date(v):
    if isinstance(v, (_dt.date, _dt.datetime)):
        return v
    if isinstance(v, str):
        try:
            return _dt.datetime.fromisoformat(v)
        except ValueError:
            return None
    return None


def order_members(values: Iterable, sql_type: str = "") -> Tuple[tuple, str]:
    """Distinct values ordered chronologically when date-like, else lexicographically."""
    vals = [v for v in dict.fromkeys(values) if v is not None]
    if vals and all(isinstance(v, str) and v.strip().lower() in MONTHS for v in vals):
        return tuple(sorted(vals, key=lambda v: MONTHS.index(v.strip().lower()))), CHRONOLOGICAL
    if vals and (is_temporal_type(sql_type) or all(isinstance(v, str) for v in vals)):
        dates = [_as_date(v) for v in vals]
        if all(d is not None for d in dates):
            pairs = sorted(zip(dates, range(len(vals))))
            return tuple(vals[i] for _, i in pairs), CHRONOLOGICAL
    return tuple(sorted(vals, key=_lex_key)), LEXICOGRAPHIC


# ---------------------------------------------------------------------------
# Database lookups
# ---------------------------------------------------------------------------


def _cached(db: DbSession, key, compute):
    if key not in db.cache:
        db.cache[key] = compute()
    return db.cache[key]


def members(db: DbSession, cube: CubeBinding, ref: AttrRef) -> MemberList:
    """Every distinct value of the attribute, ordered."""
    ref = cube.resolve(ref)
    _, lb = cube.binding_of(ref)
    col = lb.column(ref.attribute)

    def compute():
        rs = db.execute(f"SELECT DISTINCT {q(col)} FROM {q(lb.table)}")
        return order_members((r[0] for r in rs.rows), lb.sql_type(col))

    values, ordering = _cached(db, ("members", cube.name, lb.table, col), compute)
    return MemberList(ref, values, ordering)


def _typed(cube: CubeBinding, ref: AttrRef, value):
    try:
        return coerce_literal(value, cube.sql_type(ref), str(ref))
    except LiteralTypeError as exc:
        raise UnknownMember(f"{value!r} is not a member of {ref}: {exc}", level=ref.level) from None


def _scoped_query(cube: CubeBinding, path: Optional[MemberPath], target_index: int, select_col: str):
    """SQL selecting ``select_col`` of level ``target_index`` under ``path``."""
    dim = cube.dimension(path.dimension)
    top = dim.depth(path.steps[0][0])
    chain = dim.level_bindings[target_index: top + 1]
    sql = f"SELECT DISTINCT {q(chain[0].alias)}.{q(select_col)} FROM {q(chain[0].table)} AS {q(chain[0].alias)}"
    for child, parent in zip(chain, chain[1:]):
        sql += f" JOIN {q(parent.table)} AS {q(parent.alias)} ON {q(parent.alias)}.{q(parent.key_column)} = {q(child.alias)}.{q(child.fk_column)}"
    conds, params = [], []
    for level, attr, value in path.steps:
        lb = dim.level(level)
        conds.append(f"{q(lb.alias)}.{q(attr)} = ?")
        params.append(value)
    return sql, conds, params


def member(db: DbSession, cube: CubeBinding, parent, value) -> MemberPath:
    """Anchor at an attribute (``AttrRef``) or descend one level from a path."""
    if isinstance(parent, AttrRef):
        ref = cube.resolve(parent)
        dim, lb = cube.binding_of(ref)
        v = _typed(cube, ref, value)
        path = MemberPath(dim.name, ((lb.name, ref.attribute, v),))
        sql = f"SELECT 1 FROM {q(lb.table)} WHERE {q(ref.attribute)} = ? LIMIT 1"
        params = [v]
    else:
        dim = cube.dimension(parent.dimension)
        idx = dim.depth(parent.level)
        if idx == 0:
            raise NoChildLevel(f"level {parent.level!r} of {dim.name} is the bottom level")
        child = dim.level_bindings[idx - 1]
        ref = AttrRef(dim.name, child.name, child.level.member)
        v = _typed(cube, ref, value)
        path = MemberPath(dim.name, parent.steps + ((child.name, child.level.member, v),))
        base, conds, params = _scoped_query(cube, path, idx - 1, child.level.member)
        sql = base + " WHERE " + " AND ".join(conds) + " LIMIT 1"
    found = _cached(db, ("exists", cube.name, sql, tuple(params)), lambda: bool(db.execute(sql, params).rows))
    if not found:
        where = " / ".join(str(s[2]) for s in path.steps[:-1])
        scope = f" under {where}" if where else ""
        raise UnknownMember(
            f"{value!r} is not a member of level {path.level!r} ({path.dimension}){scope}", level=path.level
        )
    return path


def children(db: DbSession, cube: CubeBinding, path: MemberPath) -> MemberList:
    dim = cube.dimension(path.dimension)
    idx = dim.depth(path.level)
    if idx == 0:
        raise NoChildLevel(f"level {path.level!r} of {dim.name} has no child level")
    child = dim.level_bindings[idx - 1]
    col = child.level.member
    base, conds, params = _scoped_query(cube, path, idx - 1, col)
    sql = base + " WHERE " + " AND ".join(conds)

    def compute():
        rs = db.execute(sql, params)
        return order_members((r[0] for r in rs.rows), child.sql_type(col))

    values, ordering = _cached(db, ("children", cube.name, sql, tuple(params)), compute)
    return MemberList(AttrRef(dim.name, child.name, col), values, ordering)


def merge_members(items: Sequence) -> MemberList:
    """One member list from paths and lists that share an attribute."""
    refs, values = [], []
    ordering = USER_GIVEN
    for item in items:
        if isinstance(item, MemberPath):
            refs.append(item.ref)
            values.append(item.value)
        elif isinstance(item, MemberList):
            refs.append(item.ref)
            values.extend(item.values)
            if len(items) == 1:
                ordering = item.ordering
        else:
            raise UserError(f"not a member or member list: {item!r}")
    if not refs:
        raise UserError("an axis needs at least one member")
    if len({(norm(r.dimension), norm(r.level), norm(r.attribute)) for r in refs}) > 1:
        raise UserError("all members of an axis must come from the same attribute")
    values = list(dict.fromkeys(values))
    if len(items) == 1 and isinstance(items[0], MemberList):
        return MemberList(refs[0], tuple(values), ordering, items[0].total)
    return MemberList(refs[0], tuple(values), ordering)


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------


class CubeSession:
    """Cubes bound to a live database; views are reached by name or attribute."""

    def __init__(self, db: DbSession, cubes: Sequence[CubeBinding]):
        self.db = db
        self.cubes: Dict[str, CubeBinding] = {c.name: c for c in cubes}

    @property
    def views(self) -> List[str]:
        return list(self.cubes)

    def cube(self, name: str) -> CubeBinding:
        for n, c in self.cubes.items():
            if norm(n) == norm(name):
                return c
        raise UnknownView(f"no view named {name!r}; known: {self.views}")

    def view(self, name: str):
        from .fluent import View
        from .model import default_view

        return View(self, default_view(self.cube(name)))

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return self.view(name)

    def close(self):
        self.db.close()


def create_session(db: DbSession, cubes: Optional[Sequence[CubeBinding]] = None) -> CubeSession:
    """Session over ``db``; without explicit cubes they are inferred from its catalog."""
    if cubes is None:
        from .errors import NothingToInfer
        from .inference import infer_cube

        try:
            cubes = [infer_cube(db.introspect()).cube]
        except NothingToInfer:
            cubes = []
    return CubeSession(db, cubes)


def views(session: CubeSession) -> List[str]:
    return session.views
