"""Cube metadata, measure expressions, predicates and cube views.

All values here are immutable; builder-style operations return new objects.
Names given by users are matched loosely (case and underscores ignored) so
``TotalSalesPrice`` finds the ``total_sales_price`` measure.
"""

from __future__ import annotations

import numbers
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Tuple, Union

from .errors import (
    AggMismatch,
    LiteralTypeError,
    NoMeasures,
    UnknownAttribute,
    UnknownDimension,
    UnknownLevel,
    UnknownMeasure,
)

ALL = "ALL"


def norm(name: str) -> str:
    """Loose key used for every user-facing name lookup."""
    return re.sub(r"[_\s-]", "", str(name)).lower()


_NUMERIC_MARKERS = ("INT", "REAL", "FLOA", "DOUB", "NUMERIC", "DECIMAL", "SERIAL", "MONEY")


def is_temporal_type(sql_type: str) -> bool:
    t = (sql_type or "").upper()
    return "DATE" in t or "TIME" in t


def is_numeric_type(sql_type: str) -> bool:
    t = (sql_type or "").upper()
    if is_temporal_type(t):
        return False
    return any(m in t for m in _NUMERIC_MARKERS)


# ---------------------------------------------------------------------------
# Levels and dimensions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelSchema:
    name: str
    key_attrs: Tuple[str, ...]
    attrs: Tuple[str, ...]
    member: str
    is_all: bool = False

    def __post_init__(self):
        if not self.attrs:
            raise ValueError(f"level {self.name!r} has no attributes")
        if not set(self.key_attrs) <= set(self.attrs):
            raise ValueError(f"level {self.name!r}: key attributes must be attributes")
        if self.member not in self.attrs:
            raise ValueError(f"level {self.name!r}: member attribute must be an attribute")
        if self.is_all and not (self.attrs == ("all",) == self.key_attrs):
            raise ValueError("the ALL level has exactly the 'all' attribute")

    def attribute(self, name: str) -> str:
        key = norm(name)
        for a in self.attrs:
            if norm(a) == key:
                return a
        raise UnknownAttribute(f"level {self.name!r} has no attribute {name!r}; known: {list(self.attrs)}")


ALL_LEVEL = LevelSchema(ALL, ("all",), ("all",), "all", is_all=True)


@dataclass(frozen=True)
class LevelBinding:
    """A level bound to its physical table.

    ``alias`` doubles as the SQL table alias and the metadata IRI local name;
    it is the table name unless the table is shared between dimensions.
    ``types`` maps every attribute to its declared SQL type.
    """

    level: LevelSchema
    table: str
    alias: str
    key_column: str
    fk_column: Optional[str]
    types: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.level.name

    def column(self, attr: str) -> str:
        return self.level.attribute(attr)

    def sql_type(self, attr: str) -> str:
        return self.types.get(attr, "")


@dataclass(frozen=True)
class DimensionSchema:
    name: str
    levels: Tuple[LevelSchema, ...]

    def __post_init__(self):
        if not self.levels or not self.levels[-1].is_all:
            raise ValueError(f"dimension {self.name!r} must end in the ALL level")
        if any(lv.is_all for lv in self.levels[:-1]):
            raise ValueError(f"dimension {self.name!r}: ALL may only be the top level")


@dataclass(frozen=True)
class DimensionBinding:
    schema: DimensionSchema
    level_bindings: Tuple[LevelBinding, ...]
    fact_fk_column: str
    role_name: str

    def __post_init__(self):
        if len(self.level_bindings) != len(self.schema.levels) - 1:
            raise ValueError(f"dimension {self.role_name!r}: one binding per non-ALL level")
        for child, parent in zip(self.level_bindings, self.level_bindings[1:]):
            if child.fk_column is None:
                raise ValueError(f"level {child.table!r} has a parent but no foreign key")

    @property
    def name(self) -> str:
        return self.role_name

    @property
    def bottom(self) -> LevelBinding:
        return self.level_bindings[0]

    def level(self, name: str) -> LevelBinding:
        key = norm(name)
        for lb in self.level_bindings:
            if key in (norm(lb.name), norm(lb.table), norm(lb.alias)):
                return lb
        raise UnknownLevel(
            f"dimension {self.name!r} has no level {name!r}; known: {[lb.name for lb in self.level_bindings]}"
        )

    def depth(self, level_name: str) -> int:
        lb = self.level(level_name)
        return self.level_bindings.index(lb)

    def hierarchies(self):
        return [[lb.name for lb in self.level_bindings] + [ALL]]


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

ARITH_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class FactColumn:
    name: str


@dataclass(frozen=True)
class Number:
    value: Union[int, float]


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"unsupported operator {self.op!r}")


Expr = Union[FactColumn, Number, BinOp]


def expr_columns(expr: Expr) -> list:
    if isinstance(expr, FactColumn):
        return [expr.name]
    if isinstance(expr, BinOp):
        return expr_columns(expr.left) + expr_columns(expr.right)
    return []


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, FactColumn):
        return expr.name
    if isinstance(expr, Number):
        return repr(expr.value)
    prec = 1 if expr.op in "+-" else 2
    # the right operand of - and / needs brackets at equal precedence
    left = format_expr(expr.left, prec)
    right = format_expr(expr.right, prec + 1 if expr.op in "-/" else prec)
    text = f"{left} {expr.op} {right}"
    return f"({text})" if prec < parent_prec else text


def eval_expr(expr: Expr, row) -> Optional[float]:
    """Row-wise value of ``expr``; ``row`` maps fact column to value.

    Division by zero and NULL operands give ``None`` like SQL does.
    """
    if isinstance(expr, FactColumn):
        return row[expr.name]
    if isinstance(expr, Number):
        return expr.value
    a = eval_expr(expr.left, row)
    b = eval_expr(expr.right, row)
    if a is None or b is None:
        return None
    if expr.op == "+":
        return a + b
    if expr.op == "-":
        return a - b
    if expr.op == "*":
        return a * b
    if b == 0:
        return None
    return a / b


@dataclass(frozen=True)
class MeasureSchema:
    name: Optional[str]
    expr: Expr
    agg: str = "SUM"

    @property
    def label(self) -> str:
        return self.name if self.name is not None else format_expr(self.expr)

    def named(self, name: str) -> "MeasureSchema":
        return replace(self, name=name)

    def __add__(self, other):
        return combine_measures(self, "+", other)

    def __radd__(self, other):
        return combine_measures(other, "+", self)

    def __sub__(self, other):
        return combine_measures(self, "-", other)

    def __rsub__(self, other):
        return combine_measures(other, "-", self)

    def __mul__(self, other):
        return combine_measures(self, "*", other)

    def __rmul__(self, other):
        return combine_measures(other, "*", self)

    def __truediv__(self, other):
        return combine_measures(self, "/", other)

    def __rtruediv__(self, other):
        return combine_measures(other, "/", self)


def combine_measures(left, op: str, right) -> MeasureSchema:
    """Row-wise arithmetic on measure values; the result is unnamed."""
    if op not in ARITH_OPS:
        raise ValueError(f"unsupported operator {op!r}")
    sides = [s for s in (left, right) if isinstance(s, MeasureSchema)]
    if not sides:
        raise TypeError("at least one operand must be a measure")
    aggs = {s.agg for s in sides}
    if len(aggs) > 1:
        raise AggMismatch(f"cannot combine measures aggregated with {sorted(aggs)}")

    def as_expr(side):
        if isinstance(side, MeasureSchema):
            return side.expr
        if isinstance(side, numbers.Real) and not isinstance(side, bool):
            return Number(side)
        raise TypeError(f"cannot combine a measure with {side!r}")

    return MeasureSchema(None, BinOp(op, as_expr(left), as_expr(right)), sides[0].agg)


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

COMPARISON_OPS = ("<", "<=", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class AttrRef:
    """``(dimension, level, attribute)``; dimension and level are None for fact columns."""

    dimension: Optional[str]
    level: Optional[str]
    attribute: str

    @property
    def is_fact(self) -> bool:
        return self.dimension is None

    def __str__(self):
        if self.is_fact:
            return self.attribute
        return f"{self.dimension}.{self.level}.{self.attribute}"


class Predicate:
    """Base for predicate nodes; ``&`` and ``|`` build conjunctions and disjunctions."""

    def __and__(self, other):
        return and_(self, other)

    def __or__(self, other):
        return or_(self, other)

    def __str__(self):
        from .dsl import format_predicate

        return format_predicate(self)


@dataclass(frozen=True, eq=True)
class BoolConst(Predicate):
    value: bool

    __str__ = Predicate.__str__


@dataclass(frozen=True)
class Atom(Predicate):
    ref: AttrRef
    op: str
    literal: Union[str, int, float]

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unsupported comparison {self.op!r}")

    __str__ = Predicate.__str__


@dataclass(frozen=True)
class And(Predicate):
    left: Predicate
    right: Predicate

    __str__ = Predicate.__str__


@dataclass(frozen=True)
class Or(Predicate):
    left: Predicate
    right: Predicate

    __str__ = Predicate.__str__


@dataclass(frozen=True)
class Group(Predicate):
    inner: Predicate

    __str__ = Predicate.__str__


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def group(p: Predicate) -> Group:
    return Group(p)


def and_(left: Predicate, right: Predicate) -> Predicate:
    """Left-associative conjunction.

    Operands that would need brackets in infix form are wrapped in Group,
    so the tree always prints back to text that parses to the same tree.
    """
    if isinstance(left, Or):
        left = Group(left)
    if isinstance(right, (And, Or)):
        right = Group(right)
    return And(left, right)


def or_(left: Predicate, right: Predicate) -> Predicate:
    if isinstance(right, Or):
        right = Group(right)
    return Or(left, right)


def predicate_atoms(p: Predicate) -> list:
    if isinstance(p, Atom):
        return [p]
    if isinstance(p, (And, Or)):
        return predicate_atoms(p.left) + predicate_atoms(p.right)
    if isinstance(p, Group):
        return predicate_atoms(p.inner)
    return []


def compare(value, op: str, literal) -> Optional[bool]:
    """SQL comparison with NULL giving None."""
    if value is None or literal is None:
        return None
    if op == "<":
        return value < literal
    if op == "<=":
        return value <= literal
    if op == "=":
        return value == literal
    if op == "!=":
        return value != literal
    if op == ">=":
        return value >= literal
    return value > literal


def eval_predicate(p: Predicate, lookup) -> Optional[bool]:
    """Three-valued evaluation; ``lookup(ref)`` returns the attribute value.

    A lookup may raise KeyError to mark the atom as unknown (None).
    """
    if isinstance(p, BoolConst):
        return p.value
    if isinstance(p, Group):
        return eval_predicate(p.inner, lookup)
    if isinstance(p, Atom):
        try:
            value = lookup(p.ref)
        except KeyError:
            return None
        return compare(value, p.op, p.literal)
    left = eval_predicate(p.left, lookup)
    right = eval_predicate(p.right, lookup)
    if isinstance(p, And):
        if left is False or right is False:
            return False
        if left is None or right is None:
            return None
        return True
    if left is True or right is True:
        return True
    if left is None or right is None:
        return None
    return False


# ---------------------------------------------------------------------------
# Cubes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubeBinding:
    name: str
    fact_table: str
    dimensions: Tuple[DimensionBinding, ...]
    measures: Tuple[MeasureSchema, ...]

    def __post_init__(self):
        roles = [norm(d.role_name) for d in self.dimensions]
        if len(set(roles)) != len(roles):
            raise ValueError("dimension role names must be unique")
        names = [norm(m.name) for m in self.measures]
        if len(set(names)) != len(names):
            raise ValueError("measure names must be unique")

    def dimension(self, name: str) -> DimensionBinding:
        key = norm(name)
        for d in self.dimensions:
            if norm(d.name) == key:
                return d
        raise UnknownDimension(f"cube {self.name!r} has no dimension {name!r}; known: {[d.name for d in self.dimensions]}")

    def measure(self, name: str) -> MeasureSchema:
        key = norm(name)
        for m in self.measures:
            if norm(m.name) == key:
                return m
        raise UnknownMeasure(f"cube {self.name!r} has no measure {name!r}; known: {[m.name for m in self.measures]}")

    def fact_column_type(self, name: str) -> str:
        return "NUMERIC"

    def resolve(self, ref: AttrRef) -> AttrRef:
        """Canonical spelling of ``ref``; raises UnknownAttribute if it names nothing."""
        if ref.is_fact:
            try:
                m = self.measure(ref.attribute)
            except UnknownMeasure as exc:
                raise UnknownAttribute(str(exc)) from None
            if not isinstance(m.expr, FactColumn):
                raise UnknownAttribute(f"{ref.attribute!r} is a calculated measure, not a fact column")
            return AttrRef(None, None, m.expr.name)
        try:
            dim = self.dimension(ref.dimension)
            lb = dim.level(ref.level)
        except (UnknownDimension, UnknownLevel) as exc:
            raise UnknownAttribute(str(exc)) from None
        return AttrRef(dim.name, lb.name, lb.column(ref.attribute))

    def binding_of(self, ref: AttrRef):
        """``(DimensionBinding, LevelBinding)`` for a dimension attribute ref."""
        dim = self.dimension(ref.dimension)
        return dim, dim.level(ref.level)

    def sql_type(self, ref: AttrRef) -> str:
        if ref.is_fact:
            return self.fact_column_type(ref.attribute)
        _, lb = self.binding_of(ref)
        return lb.sql_type(lb.column(ref.attribute))


def coerce_literal(value, sql_type: str, where: str = "attribute"):
    """Type a literal by the column it is compared with."""
    if isinstance(value, bool):
        raise LiteralTypeError(f"boolean literal not supported for {where}")
    if is_numeric_type(sql_type):
        if isinstance(value, numbers.Real):
            return value
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                try:
                    return float(value)
                except ValueError:
                    pass
        raise LiteralTypeError(f"{where} is numeric ({sql_type}); cannot compare with {value!r}")
    if isinstance(value, numbers.Real):
        raise LiteralTypeError(f"{where} is text ({sql_type or 'untyped'}); cannot compare with number {value!r}")
    return value


def make_predicate(cube: CubeBinding, ref: AttrRef, op: str, literal) -> Atom:
    """Validated comparison atom."""
    canonical = cube.resolve(ref)
    if op == "==":
        op = "="
    elif op == "<>":
        op = "!="
    return Atom(canonical, op, coerce_literal(literal, cube.sql_type(canonical), str(canonical)))


def resolve_predicate(cube: CubeBinding, p: Predicate) -> Predicate:
    """Re-validate every atom of ``p`` against ``cube``, keeping the tree shape."""
    if isinstance(p, BoolConst):
        return p
    if isinstance(p, Atom):
        return make_predicate(cube, p.ref, p.op, p.literal)
    if isinstance(p, Group):
        return Group(resolve_predicate(cube, p.inner))
    cls = type(p)
    return cls(resolve_predicate(cube, p.left), resolve_predicate(cube, p.right))


# ---------------------------------------------------------------------------
# Axes and views
# ---------------------------------------------------------------------------

CHRONOLOGICAL = "chronological"
LEXICOGRAPHIC = "lexicographic"
USER_GIVEN = "user"


@dataclass(frozen=True)
class MemberList:
    ref: AttrRef
    values: Tuple
    ordering: str = USER_GIVEN
    total: bool = False

    def __post_init__(self):
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"duplicate members in list for {self.ref}")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


class _AllMembers:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ALL_MEMBERS"

    def __reduce__(self):
        return (_AllMembers, ())


ALL_MEMBERS = _AllMembers()


@dataclass(frozen=True)
class Axis:
    dimension: str
    level: str
    attribute: str
    members: Union[MemberList, _AllMembers]
    implicit: bool = False

    def __post_init__(self):
        if isinstance(self.members, MemberList) and not self.members.values:
            raise ValueError("explicit axis member lists must be non-empty")

    @property
    def ref(self) -> AttrRef:
        return AttrRef(self.dimension, self.level, self.attribute)


AXIS_NAMES = ("columns", "rows", "pages", "sections", "chapters")


@dataclass(frozen=True)
class CubeView:
    cube: CubeBinding
    axes: Tuple[Axis, ...] = ()
    measures: Tuple[Tuple[str, MeasureSchema], ...] = ()
    predicate: Predicate = TRUE

    @property
    def explicit_axes(self) -> Tuple[Axis, ...]:
        return tuple(a for a in self.axes if not a.implicit)

    @property
    def measure_names(self):
        return [alias for alias, _ in self.measures]


def default_view(cube: CubeBinding) -> CubeView:
    """All bottom-level members of every dimension, the first measure, ``true``."""
    if not cube.measures:
        raise NoMeasures(f"cube {cube.name!r} has no measures")
    axes = tuple(
        Axis(d.name, d.bottom.name, d.bottom.level.member, ALL_MEMBERS, implicit=True) for d in cube.dimensions
    )
    first = cube.measures[0]
    return CubeView(cube, axes, ((first.name, first),), TRUE)


def dimensions_in(items: Iterable[AttrRef]) -> list:
    out = []
    for ref in items:
        if not ref.is_fact and ref.dimension not in out:
            out.append(ref.dimension)
    return out


__all__ = [name for name in dir() if not name.startswith("_")]
