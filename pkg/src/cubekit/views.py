"""Building cube views and populating them.

Every function takes a :class:`CubeView` and returns a new one.  Axes must
be set in order (axis ``i`` needs axis ``i - 1``); setting the first axis
replaces the default view's implicit axes.
"""

from __future__ import annotations

import time
from dataclasses import replace
from typing import Optional, Sequence

from . import navigator, shaper, sqlgen
from .errors import AxisOrderError, DuplicateAxis, DuplicateMeasure, HugeViewError, NoMeasures, UnknownMeasure
from .model import (
    ALL_MEMBERS,
    AXIS_NAMES,
    And,
    Atom,
    AttrRef,
    Axis,
    BoolConst,
    CubeView,
    Group,
    MeasureSchema,
    MemberList,
    Or,
    Predicate,
    compare,
    expr_columns,
    norm,
    resolve_predicate,
)


def _as_member_list(view: CubeView, members) -> MemberList:
    if isinstance(members, (list, tuple)):
        ml = navigator.merge_members(list(members))
    else:
        ml = navigator.merge_members([members])
    ref = view.cube.resolve(ml.ref)
    return replace(ml, ref=ref)


def axis(view: CubeView, i: int, members) -> CubeView:
    if not isinstance(i, int) or isinstance(i, bool) or i < 0:
        raise AxisOrderError(f"axis index must be a natural number, got {i!r}")
    ml = _as_member_list(view, members)
    explicit = list(view.explicit_axes)
    if i > len(explicit):
        raise AxisOrderError(f"axis {i} set before axis {i - 1}")
    new = Axis(ml.ref.dimension, ml.ref.level, ml.ref.attribute, ml)
    for j, other in enumerate(explicit):
        if j != i and other.ref == new.ref:
            raise DuplicateAxis(f"{new.ref} is already on axis {j}")
    if i == len(explicit):
        explicit.append(new)
    else:
        explicit[i] = new
    return replace(view, axes=tuple(explicit))


def columns(view, members):
    return axis(view, 0, members)


def rows(view, members):
    return axis(view, 1, members)


def pages(view, members):
    return axis(view, 2, members)


def sections(view, members):
    return axis(view, 3, members)


def chapters(view, members):
    return axis(view, 4, members)


ALIASES = dict(zip(AXIS_NAMES, range(len(AXIS_NAMES))))


def where(view: CubeView, p: Predicate) -> CubeView:
    return replace(view, predicate=resolve_predicate(view.cube, p))


def _check_measure(view: CubeView, m: MeasureSchema) -> MeasureSchema:
    known = {norm(x.expr.name) for x in view.cube.measures if hasattr(x.expr, "name")}
    for col in expr_columns(m.expr):
        if norm(col) not in known:
            raise UnknownMeasure(f"{col!r} is not a measure column of {view.cube.name!r}")
    return m


def measures(view: CubeView, *items, **named) -> CubeView:
    """Replace the measure list.

    Items are measure names, :class:`MeasureSchema` values or
    ``(alias, measure)`` pairs; keyword arguments give aliased measures.
    """
    out = []
    for item in list(items) + list(named.items()):
        if isinstance(item, tuple):
            alias, m = item
        else:
            alias, m = None, item
        if isinstance(m, str):
            m = view.cube.measure(m)
        if not isinstance(m, MeasureSchema):
            raise UnknownMeasure(f"not a measure: {m!r}")
        m = _check_measure(view, m)
        out.append((alias or m.label, m))
    if not out:
        raise NoMeasures("a view needs at least one measure")
    seen = set()
    for alias, _ in out:
        if alias in seen:
            raise DuplicateMeasure(f"measure alias {alias!r} used twice")
        seen.add(alias)
    return replace(view, measures=tuple(out))


# ---------------------------------------------------------------------------
# Populating
# ---------------------------------------------------------------------------


def _definitely_false(p: Predicate, ref: AttrRef, value) -> bool:
    """True when ``p`` cannot hold for any row whose ``ref`` equals ``value``.

    Atoms on other attributes are unknown.  Only exact equality tests on
    text and ordered comparisons on numbers are decided, so the outcome
    never depends on the database's collation.
    """

    def atom(a: Atom):
        if a.ref != ref:
            return None
        lit = a.literal
        numeric = isinstance(value, (int, float)) and isinstance(lit, (int, float))
        if numeric or (isinstance(value, str) and isinstance(lit, str) and a.op in ("=", "!=")):
            return compare(value, a.op, lit)
        return None

    def ev(node):
        if isinstance(node, BoolConst):
            return node.value
        if isinstance(node, Group):
            return ev(node.inner)
        if isinstance(node, Atom):
            return atom(node)
        left, right = ev(node.left), ev(node.right)
        if isinstance(node, And):
            if left is False or right is False:
                return False
            return True if (left and right) else None
        if left is True or right is True:
            return True
        if left is False and right is False:
            return False
        return None

    return ev(p) is False


def narrow(view: CubeView) -> CubeView:
    """Drop axis members the predicate rules out; an axis is never emptied."""
    axes = []
    for ax in view.axes:
        ml = ax.members
        keep = tuple(v for v in ml.values if not _definitely_false(view.predicate, ax.ref, v))
        if keep and len(keep) != len(ml.values):
            ml = replace(ml, values=keep, total=False)
        axes.append(replace(ax, members=ml))
    return replace(view, axes=tuple(axes))


def resolve_members(view: CubeView, db) -> CubeView:
    """Replace ALL_MEMBERS markers by the attribute's current members."""
    axes = []
    for ax in view.axes:
        if ax.members is ALL_MEMBERS:
            ml = navigator.members(db, view.cube, ax.ref)
            if not ml.values:
                raise HugeViewError(f"no members for {ax.ref}; nothing to show")
            ax = replace(ax, members=replace(ml, total=True))
        axes.append(ax)
    return replace(view, axes=tuple(axes))


def prepare(view: CubeView, db, allow_huge: bool = False) -> CubeView:
    """Checks plus member resolution; the result is what gets compiled."""
    if not view.measures:
        raise NoMeasures("a view needs at least one measure")
    if not view.explicit_axes and view.axes and not allow_huge:
        raise HugeViewError(
            "no axes were set; the default view places every bottom-level member on its own axis. "
            "Set axes or pass allow_huge to run it anyway"
        )
    return resolve_members(view, db)


def explain(view: CubeView, db, allow_huge: bool = False, **gen) -> sqlgen.QueryPlan:
    return sqlgen.generate(prepare(view, db, allow_huge), **gen)


def output(view: CubeView, db, allow_huge: bool = False, **gen) -> shaper.PivotTable:
    """Run the view's single SQL query and pivot the result.

    The SQL filters on the full member lists; members the predicate rules
    out are dropped from the table's headers afterwards.
    """
    start = time.perf_counter()
    ready = prepare(view, db, allow_huge)
    plan = sqlgen.generate(ready, **gen)
    rs = db.execute(plan.sql, plan.params)
    table = shaper.pivot(rs, narrow(ready))
    total = time.perf_counter() - start
    table.timing = {"engine": total - rs.db_time, "db": rs.db_time, "total": total}
    return table
