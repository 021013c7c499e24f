"""Brute-force SSB answers computed straight from the generated CSV files.

Nothing here touches a database or the cubekit package.  Each lineorder
row is denormalized into one flat dict, filtered with plain Python and
summed into ``{(row, column address): value}``; addresses put pages
before columns and end with the measure name, the same order pivot
tables use.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

TEXT_COLUMNS = {
    "region": {"region"},
    "nation": {"nation"},
    "city": {"city"},
    "customer": {"name", "address", "phone", "mktsegment"},
    "supplier": {"name", "address", "phone"},
    "mfgr": {"mfgr"},
    "category": {"category"},
    "brand1": {"brand1"},
    "part": {"name", "color", "type", "container"},
    "year": set(),
    "month": {"month", "yearmonth"},
    "day": {"dayofweek", "sellingseason"},
    "lineorder": {"orderpriority", "shippriority", "shipmode"},
}


def read_table(directory, name):
    text_cols = TEXT_COLUMNS[name]
    with open(Path(directory) / f"{name}.csv", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [{k: (v if k in text_cols else int(v)) for k, v in row.items()} for row in reader]


def by_key(rows, key):
    return {r[key]: r for r in rows}


def denormalize(directory):
    """Yield one flat dict per fact row with c_*, s_*, p_* and d_* fields."""
    t = {name: read_table(directory, name) for name in TEXT_COLUMNS}
    region = by_key(t["region"], "regionkey")
    nation = by_key(t["nation"], "nationkey")
    city = by_key(t["city"], "citykey")
    mfgr = by_key(t["mfgr"], "mfgrkey")
    category = by_key(t["category"], "categorykey")
    brand = by_key(t["brand1"], "brand1key")
    year = by_key(t["year"], "yearkey")
    month = by_key(t["month"], "monthkey")

    def geo(citykey):
        c = city[citykey]
        n = nation[c["nationkey"]]
        return c["city"], n["nation"], region[n["regionkey"]]["region"]

    cust = {r["custkey"]: geo(r["citykey"]) for r in t["customer"]}
    supp = {r["suppkey"]: geo(r["citykey"]) for r in t["supplier"]}
    part = {}
    for r in t["part"]:
        b = brand[r["brand1key"]]
        c = category[b["categorykey"]]
        part[r["partkey"]] = (b["brand1"], c["category"], mfgr[c["mfgrkey"]]["mfgr"])
    day = {}
    for r in t["day"]:
        m = month[r["monthkey"]]
        day[r["daykey"]] = (year[m["yearkey"]]["year"], m["yearmonthnum"], m["yearmonth"], r["daynuminyear"])

    for lo in t["lineorder"]:
        flat = dict(lo)
        flat["c_city"], flat["c_nation"], flat["c_region"] = cust[lo["custkey"]]
        flat["s_city"], flat["s_nation"], flat["s_region"] = supp[lo["suppkey"]]
        flat["p_brand1"], flat["p_category"], flat["p_mfgr"] = part[lo["partkey"]]
        flat["d_year"], flat["d_yearmonthnum"], flat["d_yearmonth"], flat["d_daynuminyear"] = day[lo["orderdate"]]
        yield flat


UK = ("UNITED KI1", "UNITED KI5")
BRANDS_22 = {f"MFGR#222{i}" for i in range(1, 9)}


def _flight1(keep, col):
    return {"keep": keep, "row": lambda r: None, "cols": lambda r: (r[col],), "measure": "revenue",
            "value": lambda r: r["extendedprice"] * r["discount"]}


def _revenue(keep, row, cols):
    return {"keep": keep, "row": row, "cols": cols, "measure": "revenue", "value": lambda r: r["revenue"]}


def _profit(keep, row, cols):
    return {"keep": keep, "row": row, "cols": cols, "measure": "profit",
            "value": lambda r: r["revenue"] - r["supplycost"]}


DEFINITIONS = {
    "1.1": _flight1(lambda r: r["d_year"] == 1993 and 1 <= r["discount"] <= 3 and r["quantity"] < 25, "d_year"),
    "1.2": _flight1(
        lambda r: r["d_yearmonthnum"] == 199401 and 4 <= r["discount"] <= 6 and 26 <= r["quantity"] <= 35,
        "d_yearmonthnum",
    ),
    "1.3": _flight1(
        lambda r: r["d_year"] == 1994 and 36 <= r["d_daynuminyear"] <= 42
        and 5 <= r["discount"] <= 7 and 26 <= r["quantity"] <= 35,
        "d_year",
    ),
    "2.1": _revenue(lambda r: r["p_category"] == "MFGR#12" and r["s_region"] == "AMERICA",
                    lambda r: r["p_brand1"], lambda r: (r["d_year"],)),
    "2.2": _revenue(lambda r: r["p_brand1"] in BRANDS_22 and r["s_region"] == "ASIA",
                    lambda r: r["p_brand1"], lambda r: (r["d_year"],)),
    "2.3": _revenue(lambda r: r["p_brand1"] == "MFGR#2239" and r["s_region"] == "EUROPE",
                    lambda r: r["p_brand1"], lambda r: (r["d_year"],)),
    "3.1": _revenue(lambda r: r["c_region"] == "ASIA" and r["s_region"] == "ASIA" and 1992 <= r["d_year"] <= 1997,
                    lambda r: r["c_nation"], lambda r: (r["s_nation"], r["d_year"])),
    "3.2": _revenue(
        lambda r: r["c_nation"] == "UNITED STATES" and r["s_nation"] == "UNITED STATES" and 1992 <= r["d_year"] <= 1997,
        lambda r: r["c_city"], lambda r: (r["s_city"], r["d_year"]),
    ),
    "3.3": _revenue(lambda r: r["c_city"] in UK and r["s_city"] in UK and 1992 <= r["d_year"] <= 1997,
                    lambda r: r["c_city"], lambda r: (r["s_city"], r["d_year"])),
    "3.4": _revenue(lambda r: r["c_city"] in UK and r["s_city"] in UK and r["d_yearmonth"] == "Dec1997",
                    lambda r: r["c_city"], lambda r: (r["s_city"], r["d_yearmonth"])),
    "4.1": _profit(
        lambda r: r["c_region"] == "AMERICA" and r["s_region"] == "AMERICA" and r["p_mfgr"] in ("MFGR#1", "MFGR#2"),
        lambda r: r["c_nation"], lambda r: (r["d_year"],),
    ),
    "4.2": _profit(
        lambda r: r["c_region"] == "AMERICA" and r["s_region"] == "AMERICA"
        and r["p_mfgr"] in ("MFGR#1", "MFGR#2") and r["d_year"] in (1997, 1998),
        lambda r: r["s_nation"], lambda r: (r["p_category"], r["d_year"]),
    ),
    "4.3": _profit(
        lambda r: r["c_region"] == "AMERICA" and r["s_nation"] == "UNITED STATES"
        and r["p_category"] == "MFGR#14" and r["d_year"] in (1997, 1998),
        lambda r: r["s_city"], lambda r: (r["p_brand1"], r["d_year"]),
    ),
}


def answer(qid, flat_rows):
    d = DEFINITIONS[qid]
    sums = defaultdict(int)
    for r in flat_rows:
        if d["keep"](r):
            sums[(d["row"](r), d["cols"](r) + (d["measure"],))] += d["value"](r)
    return dict(sums)


def answer_all(directory):
    rows = list(denormalize(directory))
    return {qid: answer(qid, rows) for qid in DEFINITIONS}


def pivot_cells(table):
    """``{(row label or None, column address): value}`` for the non-empty cells."""
    out = {}
    addresses = table.columns()
    labels = table.row_labels or [None]
    for label, line in zip(labels, table.cells):
        for address, value in zip(addresses, line):
            if value is not None:
                out[(label, tuple(address))] = value
    return out


def cells_match(expected, actual, rel=1e-6):
    """Missing keys, extra keys and values differing by more than ``rel``."""
    problems = []
    for key in expected.keys() - actual.keys():
        problems.append(f"missing {key}")
    for key in actual.keys() - expected.keys():
        problems.append(f"unexpected {key}={actual[key]}")
    for key in expected.keys() & actual.keys():
        a, b = expected[key], actual[key]
        if abs(a - b) > rel * max(abs(a), abs(b), 1):
            problems.append(f"{key}: expected {a}, got {b}")
    return problems
