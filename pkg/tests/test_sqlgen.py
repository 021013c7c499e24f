from __future__ import annotations

import re

import pytest

from cubekit import sqlgen, views
from cubekit.model import (
    TRUE,
    Atom,
    AttrRef,
    BinOp,
    FactColumn,
    MemberList,
    Number,
    default_view,
    group,
)

MONTH = AttrRef("date", "month", "month")
CATEGORY = AttrRef("product", "category", "category")
CITY = AttrRef("store", "city", "city")


def view_of(cube, *axes, predicate=TRUE, measures=("total_sales_price",)):
    v = default_view(cube)
    for i, (ref, values) in enumerate(axes):
        v = views.axis(v, i, MemberList(ref, tuple(values)))
    if predicate is not TRUE:
        v = views.where(v, predicate)
    return views.measures(v, *measures)


def test_generated_sql_shape(sales_cube):
    p = group(Atom(MONTH, "=", "January") | Atom(MONTH, "=", "February"))
    v = view_of(sales_cube, (MONTH, ["January", "February", "March"]), (CATEGORY, ["Blouse"]), predicate=p)
    plan = sqlgen.generate(v)
    assert plan.sql.startswith('SELECT "date_month"."month",\n       "product_category"."category",')
    assert 'SUM("ft"."total_sales_price") AS "total_sales_price"' in plan.sql
    assert plan.sql.count("JOIN") == 3 + 4
    assert '"date_month"."month" IN (?, ?, ?)' in plan.sql
    assert 'AND ("date_month"."month" = ? OR "date_month"."month" = ?)' in plan.sql
    assert plan.params == ("January", "February", "March", "Blouse", "January", "February")
    assert plan.columns == ("month", "category", "total_sales_price")
    group_by = plan.sql.split("GROUP BY")[1]
    assert re.findall(r'"(\w+)"\."(\w+)"', group_by) == [
        ("date_month", "month"), ("date_month", "month_id"),
        ("product_category", "category"), ("product_category", "category_id"),
    ]


def test_predicate_only_dimensions_stop_at_the_used_level(sales_cube):
    p = Atom(AttrRef("supplier", "nation", "nation"), "=", "Denmark")
    v = view_of(sales_cube, (CITY, ["Aalborg"]), predicate=p)
    sql = sqlgen.generate(v).sql
    assert '"supplier_nation"' in sql and '"supplier_continent"' not in sql


def test_pruned_joins(sales_cube):
    v = view_of(sales_cube, (CITY, ["Aalborg"]))
    assert '"store_county"' in sqlgen.generate(v).sql
    assert '"store_county"' not in sqlgen.generate(v, prune_joins=True).sql


def test_omit_total_drops_full_member_lists(sales_cube, sales_db):
    v = views.columns(default_view(sales_cube), sales_db and _all_cities(sales_db, sales_cube))
    v = views.measures(v, "unit_sales")
    ready = views.prepare(v, sales_db)
    assert " IN (" in sqlgen.generate(ready).sql
    assert " IN (" not in sqlgen.generate(ready, omit_total=True).sql


def _all_cities(db, cube):
    from cubekit import navigator

    ml = navigator.members(db, cube, CITY)
    return MemberList(ml.ref, ml.values, ml.ordering, total=True)


@pytest.mark.parametrize(
    "expr, sql, params",
    [
        (BinOp("-", FactColumn("a"), BinOp("-", FactColumn("b"), FactColumn("c"))), '"ft"."a" - ("ft"."b" - "ft"."c")', []),
        (BinOp("*", BinOp("+", FactColumn("a"), Number(1)), FactColumn("b")), '("ft"."a" + ?) * "ft"."b"', [1]),
        (BinOp("/", FactColumn("a"), FactColumn("b")), 'CAST("ft"."a" AS DOUBLE PRECISION) / NULLIF("ft"."b", 0)', []),
    ],
)
def test_measure_sql(expr, sql, params):
    got = []
    assert sqlgen.measure_sql(expr, got) == sql
    assert got == params


def test_or_under_and_gets_brackets(sales_cube):
    from cubekit.model import And, Or

    p = And(Atom(CITY, "=", "Aalborg"), Or(Atom(MONTH, "=", "May"), Atom(MONTH, "=", "June")))
    frag = sqlgen.predicate_clause(sales_cube, p)
    assert frag.text == '"store_city"."city" = ? AND ("date_month"."month" = ? OR "date_month"."month" = ?)'
    assert frag.params == ["Aalborg", "May", "June"]


def test_not_equal_renders_as_sql(sales_cube):
    frag = sqlgen.predicate_clause(sales_cube, Atom(CITY, "!=", "Aalborg"))
    assert frag.text == '"store_city"."city" <> ?'


def test_from_clause_follows_each_chain(sales_cube):
    store = sales_cube.dimension("store")
    text = sqlgen.from_clause("sales", [store], {"store": 1})
    assert text.splitlines() == [
        '"sales" AS "ft"',
        '    JOIN "store_address" AS "store_address" ON "store_address"."store_id" = "ft"."store_id"',
        '    JOIN "store_city" AS "store_city" ON "store_city"."city_id" = "store_address"."city_id"',
    ]


def test_unresolved_members_are_rejected(sales_cube):
    with pytest.raises(ValueError):
        sqlgen.generate(views.measures(default_view(sales_cube), "unit_sales"))


def test_explain_lists_parameters(sales_cube):
    plan = sqlgen.generate(view_of(sales_cube, (CITY, ["Aalborg", "Hjorring"])))
    text = plan.explain()
    assert "-- 2 parameter(s)" in text and "--   $2 = 'Hjorring'" in text
