"""Compile a cube view into one aggregating SQL statement.

Shape::

    SELECT <axis attributes>, SUM(<measure expr>) AS "<alias>", ...
    FROM "<fact>" AS "ft" JOIN <level chains>
    WHERE <attr> IN (...) AND ... AND (<predicate>)
    GROUP BY <axis attribute>, <level key>, ...

Every literal and member value is a ``?`` bind parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .dbio import quote_ident as q
from .model import (
    And,
    Atom,
    AttrRef,
    BinOp,
    BoolConst,
    CubeView,
    DimensionBinding,
    FactColumn,
    Group,
    MemberList,
    Number,
    Or,
    Predicate,
    predicate_atoms,
)

FACT_ALIAS = "ft"

_SQL_OPS = {"<": "<", "<=": "<=", "=": "=", "!=": "<>", ">=": ">=", ">": ">"}


@dataclass(frozen=True)
class QueryPlan:
    sql: str
    params: Tuple = ()
    columns: Tuple[str, ...] = ()

    def explain(self) -> str:
        lines = [self.sql, f"-- {len(self.params)} parameter(s)"]
        for i, p in enumerate(self.params, 1):
            lines.append(f"--   ${i} = {p!r}")
        return "\n".join(lines)


@dataclass
class _Fragment:
    text: str
    params: list = field(default_factory=list)


def column_sql(cube, ref: AttrRef) -> str:
    if ref.is_fact:
        return f"{q(FACT_ALIAS)}.{q(ref.attribute)}"
    _, lb = cube.binding_of(ref)
    return f"{q(lb.alias)}.{q(lb.column(ref.attribute))}"


def from_clause(fact_table: str, dims: Sequence[DimensionBinding], up_to: Dict[str, int]) -> str:
    """Fact table followed by one JOIN per level, bottom-up, per dimension."""
    lines = [f"{q(fact_table)} AS {q(FACT_ALIAS)}"]
    for dim in dims:
        child_alias, child_fk = FACT_ALIAS, dim.fact_fk_column
        for lb in dim.level_bindings[: up_to[dim.name] + 1]:
            lines.append(
                f"JOIN {q(lb.table)} AS {q(lb.alias)} ON {q(lb.alias)}.{q(lb.key_column)} = {q(child_alias)}.{q(child_fk)}"
            )
            child_alias, child_fk = lb.alias, lb.fk_column
    return "\n    ".join(lines)


def inclusion_clause(cube, axes, omit_total: bool = False) -> _Fragment:
    parts, params = [], []
    for ax in axes:
        members = ax.members
        if not isinstance(members, MemberList):
            raise ValueError(f"axis on {ax.ref} has unresolved members")
        if omit_total and members.total:
            continue
        parts.append(f"{column_sql(cube, ax.ref)} IN ({', '.join('?' * len(members.values))})")
        params.extend(members.values)
    if not parts:
        return _Fragment("TRUE")
    return _Fragment("\n  AND ".join(parts), params)


def predicate_clause(cube, p: Predicate) -> _Fragment:
    """Infix rendering of ``p``; empty when ``p`` is the constant true."""
    if isinstance(p, BoolConst) and p.value:
        return _Fragment("")
    while isinstance(p, Group):  # the caller brackets the whole clause
        p = p.inner
    params: list = []

    def render(node, parent: Optional[str]) -> str:
        if isinstance(node, BoolConst):
            return "TRUE" if node.value else "FALSE"
        if isinstance(node, Atom):
            params.append(node.literal)
            return f"{column_sql(cube, node.ref)} {_SQL_OPS[node.op]} ?"
        if isinstance(node, Group):
            return f"({render(node.inner, None)})"
        word = "AND" if isinstance(node, And) else "OR"
        text = f"{render(node.left, word)} {word} {render(node.right, word)}"
        # an unbracketed OR under AND still needs parentheses
        if word == "OR" and parent == "AND":
            return f"({text})"
        return text

    return _Fragment(render(p, None), params)


def measure_sql(expr, params: list, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(expr, FactColumn):
        return f"{q(FACT_ALIAS)}.{q(expr.name)}"
    if isinstance(expr, Number):
        params.append(expr.value)
        return "?"
    if expr.op == "/":
        left = measure_sql(expr.left, params)
        r = measure_sql(expr.right, params)
        return f"CAST({left} AS DOUBLE PRECISION) / NULLIF({r}, 0)"
    prec = 1 if expr.op in "+-" else 2
    left = measure_sql(expr.left, params, prec)
    r = measure_sql(expr.right, params, prec, right=True)
    text = f"{left} {expr.op} {r}"
    if prec < parent_prec or (right and prec == parent_prec):
        return f"({text})"
    return text


def referenced_depths(view: CubeView, prune_joins: bool = False) -> Tuple[List[DimensionBinding], Dict[str, int]]:
    """Dimensions to join, in order, and how far up each chain goes.

    Dimensions on axes join their whole chain unless ``prune_joins``;
    dimensions used only by the predicate stop at the highest level it uses.
    """
    cube = view.cube
    order: List[DimensionBinding] = []
    depth: Dict[str, int] = {}
    on_axes = set()

    def touch(ref: AttrRef, full: bool):
        dim, lb = cube.binding_of(ref)
        if dim.name not in depth:
            order.append(dim)
            depth[dim.name] = 0
        need = len(dim.level_bindings) - 1 if full else dim.level_bindings.index(lb)
        depth[dim.name] = max(depth[dim.name], need)

    for ax in view.axes:
        touch(ax.ref, not prune_joins)
        on_axes.add(ax.dimension)
    for atom in predicate_atoms(view.predicate):
        if not atom.ref.is_fact:
            touch(atom.ref, False)
    return order, depth


def generate(view: CubeView, omit_total: bool = False, prune_joins: bool = False) -> QueryPlan:
    cube = view.cube
    params: list = []

    select = [column_sql(cube, ax.ref) for ax in view.axes]
    for alias, m in view.measures:
        select.append(f"{m.agg}({measure_sql(m.expr, params)}) AS {q(alias)}")

    dims, depth = referenced_depths(view, prune_joins)
    inclusion = inclusion_clause(cube, view.axes, omit_total)
    params.extend(inclusion.params)
    where = inclusion.text
    pred = predicate_clause(cube, view.predicate)
    if pred.text:
        where += f"\n  AND ({pred.text})"
        params.extend(pred.params)

    group_by = []
    for ax in view.axes:
        _, lb = cube.binding_of(ax.ref)
        group_by.append(column_sql(cube, ax.ref))
        group_by.append(f"{q(lb.alias)}.{q(lb.key_column)}")

    sql = "SELECT " + ",\n       ".join(select)
    sql += "\nFROM " + from_clause(cube.fact_table, dims, depth)
    sql += "\nWHERE " + where
    if group_by:
        sql += "\nGROUP BY " + ",\n         ".join(group_by)
    columns = tuple(ax.attribute for ax in view.axes) + tuple(alias for alias, _ in view.measures)
    return QueryPlan(sql, tuple(params), columns)
