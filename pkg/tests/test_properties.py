"""Randomized properties; every test runs at least 100 generated cases."""

from __future__ import annotations

import math
from functools import lru_cache

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import salesdb
from cubekit import views
from cubekit.dbio import ConnectionConfig, ResultSet, connect
from cubekit.dsl import format_predicate, parse_predicate
from cubekit.inference import levenshtein
from cubekit.metadata import BNode, IRI, Literal, MetaGraph, isomorphic, parse_turtle, serialize_turtle
from cubekit.model import FALSE, TRUE, Atom, AttrRef, MemberList, and_, default_view, group, or_
from cubekit.shaper import pivot

PROPS = settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

KEYWORDS = {"and", "or", "true", "false"}

# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True).filter(lambda s: s.lower() not in KEYWORDS)
refs = st.one_of(
    st.builds(lambda a: AttrRef(None, None, a), names),
    st.builds(AttrRef, names, names, names),
)
literals = st.one_of(
    st.text(max_size=12),
    st.integers(min_value=-10**12, max_value=10**12),
    st.floats(allow_nan=False, allow_infinity=False),
)
atoms = st.builds(Atom, refs, st.sampled_from(["=", "!=", "<", "<=", ">", ">="]), literals)
predicates = st.recursive(
    st.one_of(atoms, st.just(TRUE), st.just(FALSE)),
    lambda inner: st.one_of(
        st.builds(and_, inner, inner),
        st.builds(or_, inner, inner),
        st.builds(group, inner),
    ),
    max_leaves=12,
)


@PROPS
@given(predicates)
def test_predicate_print_parse_round_trip(p):
    text = format_predicate(p)
    assert parse_predicate(text) == p
    assert format_predicate(parse_predicate(text)) == text


# ---------------------------------------------------------------------------
# Levenshtein against a textbook recursive definition
# ---------------------------------------------------------------------------


def edit_distance(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


short = st.text(alphabet="abcxyz_", max_size=9)


@PROPS
@given(short, short)
def test_levenshtein_agrees_with_the_recursive_definition(a, b):
    assert levenshtein(a, b) == edit_distance(a, b)
    assert levenshtein(a, b) == levenshtein(b, a)


@PROPS
@given(short, short, short)
def test_levenshtein_triangle_inequality(a, b, c):
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


# ---------------------------------------------------------------------------
# view builders
# ---------------------------------------------------------------------------

# (attribute, members) per dimension of the toy sales cube
SALES_AXES = [
    (AttrRef("date", "month", "month"), tuple(salesdb.MONTH_NAMES)),
    (AttrRef("product", "category", "category"), ("Blouse", "Pants", "Shirt", "Bread")),
    (AttrRef("store", "city", "city"), ("Aalborg", "Hjorring", "Copenhagen")),
    (AttrRef("supplier", "nation", "nation"), ("Denmark", "Germany", "China")),
]
BUILDERS = [views.columns, views.rows, views.pages, views.sections]


@st.composite
def axis_plans(draw, max_axes=4):
    """A list of (attr, member subset) on distinct dimensions."""
    picks = draw(st.permutations(range(len(SALES_AXES))))[: draw(st.integers(1, max_axes))]
    plan = []
    for i in picks:
        ref, values = SALES_AXES[i]
        subset = draw(st.lists(st.sampled_from(values), min_size=1, max_size=len(values), unique=True))
        plan.append((ref, tuple(subset)))
    return plan


@PROPS
@given(axis_plans())
def test_named_builders_equal_numbered_axes(sales_cube, plan):
    base = default_view(sales_cube)
    by_name, by_number = base, base
    for i, (ref, values) in enumerate(plan):
        ml = MemberList(ref, values)
        before = by_name
        by_name = BUILDERS[i](by_name, ml)
        by_number = views.axis(by_number, i, ml)
        assert by_name is not before
    assert by_name == by_number
    assert base == default_view(sales_cube)
    assert [a.members.values for a in by_name.axes] == [v for _, v in plan]


@PROPS
@given(axis_plans())
def test_builders_never_mutate_their_input(sales_cube, plan):
    v = default_view(sales_cube)
    snapshots = []
    for i, (ref, values) in enumerate(plan):
        snapshots.append((v, hash(v.axes), v.measures, v.predicate))
        v = views.axis(v, i, MemberList(ref, values))
    v2 = views.measures(v, "unit_sales", "total_sales_price")
    views.where(v2, Atom(AttrRef("store", "city", "city"), "=", "Aalborg"))
    for view, axes_hash, measures, predicate in snapshots:
        assert hash(view.axes) == axes_hash and view.measures == measures and view.predicate == predicate
    assert v.measures != v2.measures


# ---------------------------------------------------------------------------
# pivot shape and conservation
# ---------------------------------------------------------------------------


@st.composite
def grouped_results(draw):
    plan = draw(axis_plans())
    n_measures = draw(st.integers(1, 2))
    combos = [()]
    for _, values in plan:
        combos = [c + (v,) for c in combos for v in values]
    chosen = draw(st.lists(st.sampled_from(combos), unique=True, max_size=len(combos)))
    rows = [c + tuple(draw(st.integers(-1000, 1000)) for _ in range(n_measures)) for c in chosen]
    return plan, n_measures, rows


@PROPS
@given(grouped_results())
def test_pivot_shape_and_conservation(sales_cube, case):
    plan, n_measures, rows = case
    v = default_view(sales_cube)
    for i, (ref, values) in enumerate(plan):
        v = views.axis(v, i, MemberList(ref, values))
    measure_names = ["unit_sales", "total_sales_price"][:n_measures]
    v = views.measures(v, *measure_names)
    columns = [ref.attribute for ref, _ in plan] + measure_names
    table = pivot(ResultSet(columns, rows), v)

    sizes = [len(values) for _, values in plan]
    expected_width = math.prod(s for i, s in enumerate(sizes) if i != 1) * n_measures
    expected_height = sizes[1] if len(sizes) > 1 else 1
    assert (table.width, table.height) == (expected_width, expected_height)
    assert all(len(line) == expected_width for line in table.cells)

    filled = [c for line in table.cells for c in line if c is not None]
    assert len(filled) == len(rows) * n_measures
    for m, name in enumerate(measure_names):
        in_table = sum(c for line in table.cells for c, addr in zip(line, table.columns()) if c is not None and addr[-1] == name)
        assert in_table == sum(r[len(plan) + m] for r in rows)


# ---------------------------------------------------------------------------
# turtle
# ---------------------------------------------------------------------------

NS = "http://example.org/t/"
iris = st.builds(lambda s: IRI(NS + s), st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True))
bnodes = st.builds(BNode, st.sampled_from(["b0", "b1", "b2", "b3"]))
turtle_literals = st.builds(
    Literal,
    st.one_of(
        st.text(max_size=10),
        st.integers(min_value=-10**9, max_value=10**9),
        st.floats(allow_nan=False, allow_infinity=False, width=32),
    ),
)
triples = st.tuples(st.one_of(iris, bnodes), iris, st.one_of(iris, bnodes, turtle_literals))


@PROPS
@given(st.lists(triples, max_size=15))
def test_turtle_round_trip_is_isomorphic(ts):
    g = MetaGraph(tuple(dict.fromkeys(ts)), prefixes=(("t", NS),))
    text = serialize_turtle(g)
    back = parse_turtle(text)
    assert isomorphic(g, back)
    assert serialize_turtle(back) == text


# ---------------------------------------------------------------------------
# one SQL statement per output
# ---------------------------------------------------------------------------

SQL_PREDICATES = st.one_of(
    st.just(TRUE),
    st.builds(lambda v: Atom(AttrRef("store", "address", "size"), ">", v), st.integers(0, 120)),
    st.builds(lambda v: Atom(AttrRef("date", "day", "day"), ">=", v), st.integers(1, 28)),
    st.builds(lambda v: Atom(AttrRef("date", "month", "month"), "!=", v), st.sampled_from(salesdb.MONTH_NAMES)),
)


@PROPS
@given(axis_plans(), SQL_PREDICATES, st.integers(1, 2))
def test_each_output_is_one_statement(sales_path, sales_cube, plan, predicate, n_measures):
    v = default_view(sales_cube)
    for i, (ref, values) in enumerate(plan):
        v = views.axis(v, i, MemberList(ref, values))
    v = views.where(v, predicate)
    v = views.measures(v, *["unit_sales", "total_sales_price"][:n_measures])
    with connect(ConnectionConfig.sqlite(str(sales_path))) as db:
        before = db.statement_count
        views.output(v, db)
        assert db.statement_count == before + 1
