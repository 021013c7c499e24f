from __future__ import annotations

import pytest

from cubekit.dbio import CatalogSnapshot, ColumnInfo, ForeignKey, TableInfo
from cubekit.errors import NothingToInfer
from cubekit.inference import (
    dimension_names,
    find_fact_table,
    find_level_attributes,
    find_measures,
    infer_cube,
    level_short_name,
    levenshtein,
)


def catalog(tables, fks=()):
    """``tables``: ``{name: (rows, [(col, type)], pk)}``."""
    infos = [TableInfo(n, rows) for n, (rows, _, _) in tables.items()]
    cols = {n: [ColumnInfo(c, t, t != "TEXT") for c, t in spec] for n, (_, spec, _) in tables.items()}
    pks = {n: pk for n, (_, _, pk) in tables.items()}
    return CatalogSnapshot.build(infos, cols, pks, [ForeignKey(*fk) for fk in fks])


@pytest.mark.parametrize(
    "a, b, d",
    [("", "", 0), ("abc", "", 3), ("kitten", "sitting", 3), ("flaw", "lawn", 2), ("city", "store_city", 6),
     ("same", "same", 0)],
)
def test_levenshtein(a, b, d):
    assert levenshtein(a, b) == d == levenshtein(b, a)


@pytest.mark.parametrize(
    "cols, table, member",
    [(["city"], "store_city", "city"), (["address", "size"], "store_address", "address"),
     (["name", "phone"], "customer", "name"), (["brand1"], "brand1", "brand1")],
)
def test_member_is_closest_column_name(cols, table, member):
    assert find_level_attributes(cols, table)[0] == member


def test_member_tie_warns_and_keeps_first():
    warnings = []
    member, rest = find_level_attributes(["ab", "ba"], "xy", warnings)
    assert (member, rest) == ("ab", ["ba"])
    assert warnings and "tie" in warnings[0]


def test_fact_table_is_largest_and_ties_warn():
    cat = catalog({"a": (5, [("id", "INTEGER")], ["id"]), "b": (5, [("id", "INTEGER")], ["id"])})
    warnings = []
    assert find_fact_table(cat, warnings) == "a"
    assert warnings


def test_empty_database():
    with pytest.raises(NothingToInfer):
        infer_cube(CatalogSnapshot())


def test_fact_without_foreign_keys():
    cat = catalog({"t": (3, [("id", "INTEGER"), ("v", "INTEGER")], ["id"])})
    with pytest.raises(NothingToInfer):
        infer_cube(cat)


def test_measures_are_numeric_non_key_fact_columns():
    cat = catalog(
        {
            "f": (10, [("dim_id", "INTEGER"), ("amount", "NUMERIC"), ("note", "TEXT"), ("qty", "INTEGER")], []),
            "dim": (2, [("dim_id", "INTEGER"), ("label", "TEXT")], ["dim_id"]),
        },
        [("f", "dim_id", "dim", "dim_id")],
    )
    assert [m.name for m in find_measures(cat, "f")] == ["amount", "qty"]
    assert all(m.agg == "SUM" for m in find_measures(cat, "f"))


def test_fact_without_measures_warns():
    cat = catalog(
        {"f": (10, [("dim_id", "INTEGER")], []), "dim": (2, [("dim_id", "INTEGER"), ("l", "TEXT")], ["dim_id"])},
        [("f", "dim_id", "dim", "dim_id")],
    )
    report = infer_cube(cat)
    assert report.cube.measures == ()
    assert any("no numeric" in w for w in report.warnings)


@pytest.mark.parametrize(
    "table, dim, short",
    [("store_city", "store", "city"), ("city", "customer", "city"), ("store", "store", "store")],
)
def test_level_short_name(table, dim, short):
    assert level_short_name(table, dim) == short


def test_dimension_names_role_playing_and_prefixes():
    chains = [
        ("store_id", ["store_address", "store_city"]),
        ("orderdate", ["day", "month", "year"]),
        ("commitdate", ["day", "month", "year"]),
        ("custkey", ["customer", "city", "nation"]),
    ]
    assert dimension_names(chains) == ["store", "orderdate", "commitdate", "customer"]


def test_multiple_parents_follow_first_foreign_key_with_warning():
    cat = catalog(
        {
            "f": (100, [("a_id", "INTEGER"), ("m", "INTEGER")], []),
            "a": (10, [("a_id", "INTEGER"), ("a", "TEXT"), ("p_id", "INTEGER"), ("q_id", "INTEGER")], ["a_id"]),
            "p": (2, [("p_id", "INTEGER"), ("p", "TEXT")], ["p_id"]),
            "q": (2, [("q_id", "INTEGER"), ("q", "TEXT")], ["q_id"]),
        },
        [("f", "a_id", "a", "a_id"), ("a", "p_id", "p", "p_id"), ("a", "q_id", "q", "q_id")],
    )
    report = infer_cube(cat)
    assert report.cube.dimensions[0].hierarchies() == [["a", "p", "ALL"]]
    assert any("following 'p_id'" in w for w in report.warnings)


def test_foreign_key_cycle_is_cut():
    cat = catalog(
        {
            "f": (100, [("a_id", "INTEGER"), ("m", "INTEGER")], []),
            "a": (10, [("a_id", "INTEGER"), ("a", "TEXT"), ("b_id", "INTEGER")], ["a_id"]),
            "b": (5, [("b_id", "INTEGER"), ("b", "TEXT"), ("a_id", "INTEGER")], ["b_id"]),
        },
        [("f", "a_id", "a", "a_id"), ("a", "b_id", "b", "b_id"), ("b", "a_id", "a", "a_id")],
    )
    report = infer_cube(cat)
    assert report.cube.dimensions[0].hierarchies() == [["a", "b", "ALL"]]
    assert any("cycle" in w for w in report.warnings)


def test_sales_cube(sales_cube):
    assert sales_cube.name == "Sales"
    assert sales_cube.fact_table == "sales"
    assert [d.name for d in sales_cube.dimensions] == ["supplier", "store", "product", "date"]
    assert [m.name for m in sales_cube.measures] == ["total_sales_price", "unit_sales"]
    store = sales_cube.dimension("store")
    assert [lb.table for lb in store.level_bindings] == ["store_address", "store_city", "store_county"]
    bottom = store.bottom
    assert bottom.level.member == "address"
    assert "size" in bottom.level.attrs
    assert bottom.key_column == "store_id" and bottom.fk_column == "city_id"


def test_ssb_cube(ssb_cube):
    assert ssb_cube.name == "Lineorder"
    assert [d.name for d in ssb_cube.dimensions] == ["customer", "part", "supplier", "orderdate", "commitdate"]
    assert [m.name for m in ssb_cube.measures] == [
        "quantity", "extendedprice", "ordtotalprice", "discount", "revenue", "supplycost", "tax",
    ]
    assert ssb_cube.dimension("orderdate").hierarchies() == [["day", "month", "year", "ALL"]]
    assert ssb_cube.dimension("part").hierarchies() == [["part", "brand1", "category", "mfgr", "ALL"]]
    # the shared calendar tables get per-role aliases
    aliases = [lb.alias for lb in ssb_cube.dimension("commitdate").level_bindings]
    assert aliases == ["commitdate_day", "commitdate_month", "commitdate_year"]
    assert ssb_cube.dimension("customer").level("region").level.member == "region"
