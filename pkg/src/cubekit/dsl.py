"""Textual cube-view queries.

One clause per line; indented lines continue the previous clause and ``#``
starts a comment::

    view Sales
    columns Date.year.year[2022].children()
    rows [Product.category.category.Blouse, Product.category.category.Pants]
    pages Store.city.city["Aalborg"]
    where Date.month.month == "January" or Date.month.month == "February"
    measures TSP = TotalSalesPrice, US = UnitSales

Clauses may come in any order.  Axis clauses are ``columns``, ``rows``,
``pages``, ``sections``, ``chapters`` or ``axis N``; together they must
cover 0..n-1 without gaps.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from . import navigator, views
from .errors import AxisOrderError, DslSyntaxError, UserError
from .model import (
    AXIS_NAMES,
    FALSE,
    TRUE,
    And,
    Atom,
    AttrRef,
    BoolConst,
    CubeView,
    Group,
    MeasureSchema,
    Or,
    Predicate,
    and_,
    combine_measures,
    default_view,
    group,
    or_,
)

# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>==|!=|<>|<=|>=|[<>=])
  | (?P<punct>[.\[\](),+\-*/])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int

    @property
    def value(self):
        if self.kind == "string":
            return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), self.text[1:-1])
        if self.kind == "number":
            if re.fullmatch(r"\d+", self.text):
                return int(self.text)
            return float(self.text)
        return self.text


def tokenize(text: str) -> List[Tok]:
    toks: List[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Stream:
    def __init__(self, toks: List[Tok]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.peek()
        self.i += 1
        return t

    def at(self, *texts) -> bool:
        t = self.peek()
        return t.kind in ("punct", "op") and t.text in texts

    def at_word(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text.lower() == word

    def fail(self, msg: str, tok: Optional[Tok] = None):
        tok = tok or self.peek()
        found = repr(tok.text) if tok.kind != "eof" else "end of clause"
        raise DslSyntaxError(f"{msg}, found {found}", tok.line, tok.col)

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.next()

    def ident(self, what: str = "a name") -> Tok:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected {what}")
        return self.next()

    def done(self):
        if self.peek().kind != "eof":
            self.fail("unexpected text")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass
class MemberExpr:
    anchor: Tuple[str, str, str]
    steps: List[object]
    suffix: Optional[str]  # "children" | "members" | None
    tok: Tok


@dataclass
class MeasureName:
    name: str
    tok: Tok


@dataclass
class MeasureConst:
    value: Union[int, float]


@dataclass
class MeasureOp:
    op: str
    left: object
    right: object


@dataclass
class Query:
    view: Optional[str] = None
    axes: Dict[int, Tuple[List[MemberExpr], Tok]] = field(default_factory=dict)
    predicate: Optional[Predicate] = None
    measures: Optional[List[Tuple[Optional[str], object]]] = None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _literal(s: _Stream):
    neg = False
    if s.at("-"):
        s.next()
        neg = True
    t = s.peek()
    if t.kind == "string" and not neg:
        s.next()
        return t.value
    if t.kind == "number":
        s.next()
        return -t.value if neg else t.value
    s.fail("expected a string or number literal")


def _member_expr(s: _Stream) -> MemberExpr:
    first = s.ident("a dimension name")
    s.expect(".")
    level = s.ident("a level name")
    s.expect(".")
    attr = s.ident("an attribute name")
    steps: list = []
    suffix = None
    while True:
        if s.at("["):
            s.next()
            steps.append(_literal(s))
            s.expect("]")
        elif s.at("."):
            s.next()
            name = s.ident("a member or method")
            if s.at("(") and name.text in ("children", "members"):
                s.next()
                s.expect(")")
                suffix = name.text
                break
            steps.append(name.text)
        else:
            break
    return MemberExpr((first.text, level.text, attr.text), steps, suffix, first)


def parse_members(s: _Stream) -> List[MemberExpr]:
    if s.at("["):
        s.next()
        out = [_member_expr(s)]
        while s.at(","):
            s.next()
            out.append(_member_expr(s))
        s.expect("]")
        return out
    return [_member_expr(s)]


_CMP = {"==": "=", "=": "=", "!=": "!=", "<>": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def _attr_ref(s: _Stream) -> AttrRef:
    a = s.ident("an attribute reference")
    if s.at("."):
        s.next()
        b = s.ident("a level name")
        s.expect(".")
        c = s.ident("an attribute name")
        return AttrRef(a.text, b.text, c.text)
    return AttrRef(None, None, a.text)


def _pred_or(s: _Stream) -> Predicate:
    p = _pred_and(s)
    while s.at_word("or"):
        s.next()
        p = or_(p, _pred_and(s))
    return p


def _pred_and(s: _Stream) -> Predicate:
    p = _pred_unary(s)
    while s.at_word("and"):
        s.next()
        p = and_(p, _pred_unary(s))
    return p


def _pred_unary(s: _Stream) -> Predicate:
    if s.at("("):
        s.next()
        inner = _pred_or(s)
        s.expect(")")
        return group(inner)
    if s.at_word("true"):
        s.next()
        return TRUE
    if s.at_word("false"):
        s.next()
        return FALSE
    ref = _attr_ref(s)
    t = s.peek()
    if t.kind != "op":
        s.fail("expected a comparison operator")
    s.next()
    return Atom(ref, _CMP[t.text], _literal(s))


def parse_predicate(text: str) -> Predicate:
    s = _Stream(tokenize(text))
    p = _pred_or(s)
    s.done()
    return p


def _m_expr(s: _Stream):
    e = _m_term(s)
    while s.at("+", "-"):
        op = s.next().text
        e = MeasureOp(op, e, _m_term(s))
    return e


def _m_term(s: _Stream):
    e = _m_factor(s)
    while s.at("*", "/"):
        op = s.next().text
        e = MeasureOp(op, e, _m_factor(s))
    return e


def _m_factor(s: _Stream):
    if s.at("("):
        s.next()
        e = _m_expr(s)
        s.expect(")")
        return e
    t = s.peek()
    if t.kind == "number":
        s.next()
        return MeasureConst(t.value)
    if t.kind == "ident":
        s.next()
        return MeasureName(t.text, t)
    s.fail("expected a measure name, number or '('")


def _measure_items(s: _Stream):
    items = []
    while True:
        alias = None
        if s.peek().kind == "ident" and s.peek(1).kind == "op" and s.peek(1).text == "=":
            alias = s.next().text
            s.next()
        items.append((alias, _m_expr(s)))
        if not s.at(","):
            return items
        s.next()


def _split_clauses(toks: List[Tok]) -> List[List[Tok]]:
    clauses: List[List[Tok]] = []
    for t in toks[:-1]:
        if t.col == 1:
            clauses.append([t])
        elif not clauses:
            raise DslSyntaxError("indented text before the first clause", t.line, t.col)
        else:
            clauses[-1].append(t)
    return clauses


def parse_query(text: str) -> Query:
    toks = tokenize(text)
    q = Query()
    seen = set()
    for clause in _split_clauses(toks):
        head = clause[0]
        end = Tok("eof", "", clause[-1].line, clause[-1].col + len(clause[-1].text))
        s = _Stream(clause + [end])
        kw = s.ident("a clause keyword").text.lower()
        if kw == "axis":
            t = s.peek()
            if t.kind != "number" or not isinstance(t.value, int):
                s.fail("expected an axis number")
            s.next()
            key = ("axis", t.value)
        elif kw in AXIS_NAMES:
            key = ("axis", AXIS_NAMES.index(kw))
        elif kw in ("view", "where", "measures"):
            key = (kw,)
        else:
            raise DslSyntaxError(f"unknown clause {head.text!r}", head.line, head.col)
        if key in seen:
            raise DslSyntaxError(f"clause {head.text!r} given twice", head.line, head.col)
        seen.add(key)
        if key[0] == "axis":
            q.axes[key[1]] = (parse_members(s), head)
        elif kw == "view":
            q.view = s.ident("a view name").text
        elif kw == "where":
            q.predicate = _pred_or(s)
        else:
            q.measures = _measure_items(s)
        s.done()
    return q


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def format_literal(value) -> str:
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r") + '"'
    if isinstance(value, float):
        text = repr(value)
        return text if any(ch in text for ch in ".en") else text + ".0"
    return repr(value)


_PRINT_OP = {"=": "==", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def format_predicate(p: Predicate) -> str:
    if isinstance(p, BoolConst):
        return "true" if p.value else "false"
    if isinstance(p, Atom):
        return f"{p.ref} {_PRINT_OP[p.op]} {format_literal(p.literal)}"
    if isinstance(p, Group):
        return f"({format_predicate(p.inner)})"
    word = "and" if isinstance(p, And) else "or"
    return f"{format_predicate(p.left)} {word} {format_predicate(p.right)}"


# ---------------------------------------------------------------------------
# Binding to a session
# ---------------------------------------------------------------------------


def _eval_members(session, cube, expr: MemberExpr):
    db = session.db
    anchor = AttrRef(*expr.anchor)
    if expr.suffix == "members":
        if expr.steps:
            raise DslSyntaxError("members() applies to an attribute, not to a member", expr.tok.line, expr.tok.col)
        return navigator.members(db, cube, anchor)
    if not expr.steps:
        raise DslSyntaxError(
            f"{'.'.join(expr.anchor)} names an attribute; pick members with [value], .children() or .members()",
            expr.tok.line,
            expr.tok.col,
        )
    path = navigator.member(db, cube, anchor, expr.steps[0])
    for step in expr.steps[1:]:
        path = navigator.member(db, cube, path, step)
    if expr.suffix == "children":
        return navigator.children(db, cube, path)
    return path


def _eval_measure(cube, node) -> MeasureSchema:
    if isinstance(node, MeasureName):
        return cube.measure(node.name)
    if isinstance(node, MeasureConst):
        return node.value
    left = _eval_measure(cube, node.left)
    right = _eval_measure(cube, node.right)
    if not isinstance(left, MeasureSchema) and not isinstance(right, MeasureSchema):
        raise UserError("a calculated measure needs at least one measure operand")
    return combine_measures(left, node.op, right)


def build_view(query: Query, session) -> CubeView:
    if query.view is None:
        if len(session.views) != 1:
            raise UserError(f"name a view with 'view <name>'; available: {session.views}")
        cube = session.cube(session.views[0])
    else:
        cube = session.cube(query.view)
    v = default_view(cube)
    indices = sorted(query.axes)
    for expected, i in enumerate(indices):
        if i != expected:
            tok = query.axes[i][1]
            raise AxisOrderError(f"axis {i} given without axis {expected} (line {tok.line}, column {tok.col})")
    for i in indices:
        exprs, _ = query.axes[i]
        members = [_eval_members(session, cube, e) for e in exprs]
        v = views.axis(v, i, members)
    if query.predicate is not None:
        v = views.where(v, query.predicate)
    if query.measures is not None:
        items = []
        for alias, node in query.measures:
            m = _eval_measure(cube, node)
            if not isinstance(m, MeasureSchema):
                raise UserError("a measure must involve at least one measure column")
            if alias is None and isinstance(node, MeasureName):
                alias = node.name
            items.append((alias, m))
        v = views.measures(v, *items)
    return v


def compile_query(text: str, session) -> CubeView:
    return build_view(parse_query(text), session)
