from __future__ import annotations

import pytest

from cubekit import dsl, views
from cubekit.dsl import MeasureConst, MeasureName, MeasureOp, compile_query, format_predicate, parse_predicate, parse_query
from cubekit.errors import AxisOrderError, DslSyntaxError, UnknownMember, UserError
from cubekit.model import TRUE, And, Atom, AttrRef, Group, MemberList, Or

AALBORG_QUERY = """\
# two months, two categories, one city
view Sales
columns Date.year.year[2022].children()
rows [Product.category.category.Blouse,
      Product.category.category.Pants]
pages Store.city.city["Aalborg"]
where Date.month.month == "January" or Date.month.month == "February"
measures TSP = TotalSalesPrice, US = UnitSales
"""


def test_parse_aalborg_query():
    q = parse_query(AALBORG_QUERY)
    assert q.view == "Sales"
    assert sorted(q.axes) == [0, 1, 2]
    cols = q.axes[0][0]
    assert cols[0].anchor == ("Date", "year", "year") and cols[0].steps == [2022] and cols[0].suffix == "children"
    assert [e.steps for e in q.axes[1][0]] == [["Blouse"], ["Pants"]]
    assert q.axes[2][0][0].steps == ["Aalborg"]
    month = AttrRef("Date", "month", "month")
    assert q.predicate == Or(Atom(month, "=", "January"), Atom(month, "=", "February"))
    assert [(alias, node.name) for alias, node in q.measures] == [("TSP", "TotalSalesPrice"), ("US", "UnitSales")]


def test_axis_clauses_by_number():
    q = parse_query("axis 0 A.b.c.members()\naxis 1 A.b.c[1]\nsections D.e.f[2]")
    assert sorted(q.axes) == [0, 1, 3]


def test_measure_arithmetic_precedence():
    q = parse_query("measures margin = (Price - Cost) / Price * 100, Units")
    alias, node = q.measures[0]
    assert alias == "margin"
    assert node == MeasureOp(
        "*",
        MeasureOp("/", MeasureOp("-", MeasureName("Price", node.left.left.left.tok), MeasureName("Cost", node.left.left.right.tok)), MeasureName("Price", node.left.right.tok)),
        MeasureConst(100),
    )
    assert q.measures[1][0] is None


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("view Sales\ncolumns Date.year", 2, 18),
        ("view Sales\nfilter x == 1", 2, 1),
        ("view Sales\nview Other", 2, 1),
        ("   view Sales", 1, 4),
        ("view Sales\nwhere Store.city.city ~ 1", 2, 23),
        ('where a == "open', 1, 12),
        ("axis x A.b.c.members()", 1, 6),
        ("view Sales extra", 1, 12),
    ],
)
def test_syntax_errors_report_positions(text, line, col):
    with pytest.raises(DslSyntaxError) as info:
        parse_query(text)
    assert (info.value.line, info.value.column) == (line, col)


@pytest.mark.parametrize(
    "text",
    [
        'Store.city.city == "Aalborg"',
        "size >= 70 and (year == 2021 or year != 2022)",
        "true",
        "not_a_word < -3.5 or false",
        'a.b.c == "quote \\" and slash \\\\"',
    ],
)
def test_predicate_text_round_trip(text):
    p = parse_predicate(text)
    assert parse_predicate(format_predicate(p)) == p


def test_predicate_structure():
    p = parse_predicate("a == 1 and (b == 2 or c <> 3)")
    assert p == And(Atom(AttrRef(None, None, "a"), "=", 1), Group(Or(Atom(AttrRef(None, None, "b"), "=", 2), Atom(AttrRef(None, None, "c"), "!=", 3))))
    assert format_predicate(p) == "a == 1 and (b == 2 or c != 3)"


@pytest.mark.parametrize("value, text", [("x", '"x"'), (3, "3"), (2.0, "2.0"), (-1.5, "-1.5"), ("a\nb", '"a\\nb"')])
def test_format_literal(value, text):
    assert dsl.format_literal(value) == text


def test_compile_aalborg_query(sales_session):
    v = compile_query(AALBORG_QUERY, sales_session)
    assert [a.dimension for a in v.axes] == ["date", "product", "store"]
    assert v.axes[0].members == MemberList(AttrRef("date", "month", "month"), tuple(v.axes[0].members.values), v.axes[0].members.ordering)
    table = views.output(v, sales_session.db)
    assert table.cells == [[946513, 754, 468954, 659], [846598, 378, 120546, 129]]


def test_compile_members_and_default_view(sales_session):
    v = compile_query("columns Store.city.city.members()\nmeasures UnitSales / 2", sales_session)
    assert v.axes[0].members.values == ("Aalborg", "Copenhagen", "Hjorring")
    assert len(v.measures) == 1
    assert v.predicate == TRUE


def test_compile_member_paths(sales_session):
    v = compile_query('columns Store.county.county["North Jutland"].Hjorring\nmeasures UnitSales', sales_session)
    assert v.axes[0].members.values == ("Hjorring",)


@pytest.mark.parametrize(
    "text, error",
    [
        ("rows Store.city.city.members()", AxisOrderError),
        ("columns Store.city.city.Odense", UnknownMember),
        ("columns Store.city.city", DslSyntaxError),
        ("columns Store.city.city[\"Aalborg\"].members()", DslSyntaxError),
        ("columns Store.city.city.members()\nmeasures 1 + 2", UserError),
        ("view HR\ncolumns Store.city.city.members()", UserError),
    ],
)
def test_compile_errors(sales_session, text, error):
    with pytest.raises(error):
        compile_query(text, sales_session)
