"""Snowflaked SSB data at desk scale.

The generator follows the benchmark's value domains (regions, nations,
``MFGR#`` brand hierarchy, 1992-1998 calendar) but draws everything from a
seeded numpy generator, so the same ``(sf, seed)`` always writes the same
bytes.  Dimension hierarchies are split into their own tables with integer
surrogate keys: customer/supplier -> city -> nation -> region,
part -> brand1 -> category -> mfgr and day -> month -> year.
"""

from __future__ import annotations

import calendar
import csv
import datetime as dt
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..dbio import DbSession, quote_ident
from ..errors import LoadError

log = logging.getLogger(__name__)

FACT_ROWS_PER_SF = 6_000_000


@dataclass(frozen=True)
class Table:
    name: str
    columns: Tuple[Tuple[str, str], ...]  # (name, "int" | "text")
    primary_key: Tuple[str, ...]
    foreign_keys: Tuple[Tuple[str, str, str], ...] = ()  # (column, table, column)

    @property
    def column_names(self) -> List[str]:
        return [c for c, _ in self.columns]


def _cols(spec: str):
    out = []
    for item in spec.split():
        name, _, kind = item.partition(":")
        out.append((name, kind or "int"))
    return tuple(out)


# Parents before children, so this is also the load order.
SCHEMA: Tuple[Table, ...] = (
    Table("region", _cols("regionkey region:text"), ("regionkey",)),
    Table("nation", _cols("nationkey nation:text regionkey"), ("nationkey",), (("regionkey", "region", "regionkey"),)),
    Table("city", _cols("citykey city:text nationkey"), ("citykey",), (("nationkey", "nation", "nationkey"),)),
    Table(
        "customer",
        _cols("custkey name:text address:text phone:text mktsegment:text citykey"),
        ("custkey",),
        (("citykey", "city", "citykey"),),
    ),
    Table(
        "supplier",
        _cols("suppkey name:text address:text phone:text citykey"),
        ("suppkey",),
        (("citykey", "city", "citykey"),),
    ),
    Table("mfgr", _cols("mfgrkey mfgr:text"), ("mfgrkey",)),
    Table("category", _cols("categorykey category:text mfgrkey"), ("categorykey",), (("mfgrkey", "mfgr", "mfgrkey"),)),
    Table("brand1", _cols("brand1key brand1:text categorykey"), ("brand1key",), (("categorykey", "category", "categorykey"),)),
    Table(
        "part",
        _cols("partkey name:text color:text type:text size container:text brand1key"),
        ("partkey",),
        (("brand1key", "brand1", "brand1key"),),
    ),
    Table("year", _cols("yearkey year"), ("yearkey",)),
    Table(
        "month",
        _cols("monthkey month:text yearmonthnum yearmonth:text monthnuminyear yearkey"),
        ("monthkey",),
        (("yearkey", "year", "yearkey"),),
    ),
    Table(
        "day",
        _cols(
            "daykey dayofweek:text daynuminweek daynuminmonth sellingseason:text lastdayinweekfl "
            "lastdayinmonthfl holidayfl weekdayfl daynuminyear monthkey"
        ),
        ("daykey",),
        (("monthkey", "month", "monthkey"),),
    ),
    Table(
        "lineorder",
        _cols(
            "orderkey linenumber custkey partkey suppkey orderdate orderpriority:text shippriority:text "
            "quantity extendedprice ordtotalprice discount revenue supplycost tax commitdate shipmode:text"
        ),
        ("orderkey", "linenumber"),
        (
            ("custkey", "customer", "custkey"),
            ("partkey", "part", "partkey"),
            ("suppkey", "supplier", "suppkey"),
            ("orderdate", "day", "daykey"),
            ("commitdate", "day", "daykey"),
        ),
    ),
)

TABLES: Dict[str, Table] = {t.name: t for t in SCHEMA}

REGIONS = ["AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST"]
NATIONS = [
    ("ALGERIA", 0), ("ARGENTINA", 1), ("BRAZIL", 1), ("CANADA", 1), ("EGYPT", 4),
    ("ETHIOPIA", 0), ("FRANCE", 3), ("GERMANY", 3), ("INDIA", 2), ("INDONESIA", 2),
    ("IRAN", 4), ("IRAQ", 4), ("JAPAN", 2), ("JORDAN", 4), ("KENYA", 0),
    ("MOROCCO", 0), ("MOZAMBIQUE", 0), ("PERU", 1), ("CHINA", 2), ("ROMANIA", 3),
    ("SAUDI ARABIA", 4), ("VIETNAM", 2), ("RUSSIA", 3), ("UNITED KINGDOM", 3), ("UNITED STATES", 1),
]
SEGMENTS = ["AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD", "MACHINERY"]
PRIORITIES = ["1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECI", "5-LOW"]
SHIPMODES = ["AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP", "TRUCK"]
COLORS = [
    "almond", "antique", "aquamarine", "azure", "beige", "bisque", "black", "blanched", "blue", "blush",
    "brown", "burlywood", "chartreuse", "chocolate", "coral", "cornflower", "cream", "cyan", "dark", "deep",
    "dim", "dodger", "drab", "firebrick", "forest", "gainsboro", "ghost", "goldenrod", "green", "grey",
    "honeydew", "hot", "indian", "ivory", "khaki", "lace", "lavender", "lemon", "light", "lime",
]
TYPE_SIZES = ["STANDARD", "SMALL", "MEDIUM", "LARGE", "ECONOMY", "PROMO"]
TYPE_FINISHES = ["ANODIZED", "BURNISHED", "PLATED", "POLISHED", "BRUSHED"]
TYPE_METALS = ["TIN", "NICKEL", "BRASS", "STEEL", "COPPER"]
CONTAINER_SIZES = ["SM", "LG", "MED", "JUMBO", "WRAP"]
CONTAINER_KINDS = ["CASE", "BOX", "BAG", "JAR", "PKG", "PACK", "CAN", "DRUM"]
FIRST_DAY = dt.date(1992, 1, 1)
LAST_DAY = dt.date(1998, 12, 31)
LAST_ORDER_DAY = dt.date(1998, 8, 2)
BRANDS_PER_CATEGORY = 40


def row_counts(sf: float) -> Dict[str, int]:
    if not sf > 0:
        raise ValueError(f"scale factor must be positive, got {sf}")
    days = (LAST_DAY - FIRST_DAY).days + 1
    return {
        "region": len(REGIONS),
        "nation": len(NATIONS),
        "city": 10 * len(NATIONS),
        "customer": max(1, round(30_000 * sf)),
        "supplier": max(1, round(2_000 * sf)),
        "mfgr": 5,
        "category": 25,
        "brand1": 25 * BRANDS_PER_CATEGORY,
        "part": max(1, round(200_000 * sf)),
        "year": 7,
        "month": 84,
        "day": days,
        "lineorder": max(1, round(FACT_ROWS_PER_SF * sf)),
    }


def city_name(nation: str, digit: int) -> str:
    return f"{nation[:9]:<9}{digit}"


def _season(month: int, day: int) -> str:
    if month == 12:
        return "Christmas"
    if month in (6, 7, 8):
        return "Summer"
    if month in (1, 2):
        return "Winter"
    if month in (3, 4, 5):
        return "Spring"
    return "Fall"


_HOLIDAYS = {(1, 1), (7, 4), (11, 25), (12, 25), (12, 31)}


def _calendar_tables():
    years = [(i + 1, 1992 + i) for i in range(7)]
    months = []
    for y_index, (yearkey, year) in enumerate(years):
        for m in range(1, 13):
            months.append((y_index * 12 + m, calendar.month_name[m], year * 100 + m,
                           f"{calendar.month_abbr[m]}{year}", m, yearkey))
    days = []
    d = FIRST_DAY
    while d <= LAST_DAY:
        monthkey = (d.year - 1992) * 12 + d.month
        dow = (d.isoweekday() % 7) + 1  # Sunday = 1
        last_in_month = d.day == calendar.monthrange(d.year, d.month)[1]
        days.append((
            d.year * 10000 + d.month * 100 + d.day,
            calendar.day_name[d.weekday()],
            dow,
            d.day,
            _season(d.month, d.day),
            int(dow == 7),
            int(last_in_month),
            int((d.month, d.day) in _HOLIDAYS),
            int(dow not in (1, 7)),
            d.timetuple().tm_yday,
            monthkey,
        ))
        d += dt.timedelta(days=1)
    return years, months, days


def _random_text(rng: np.random.Generator, n: int, lo: int, hi: int) -> List[str]:
    alphabet = np.array(list("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,"))
    lengths = rng.integers(lo, hi + 1, size=n)
    chars = rng.integers(0, len(alphabet), size=int(lengths.sum()))
    flat = "".join(alphabet[chars].tolist())
    out, pos = [], 0
    for k in lengths.tolist():
        out.append(flat[pos:pos + k])
        pos += k
    return out


def _phones(rng: np.random.Generator, nationkeys: np.ndarray) -> List[str]:
    parts = rng.integers([100, 100, 1000], [1000, 1000, 10000], size=(len(nationkeys), 3)).tolist()
    return [f"{nk + 9}-{a}-{b}-{c}" for nk, (a, b, c) in zip(nationkeys.tolist(), parts)]


def retail_price(partkey: np.ndarray) -> np.ndarray:
    """Part price in cents, the benchmark's closed formula."""
    return 90000 + ((partkey // 10) % 20001) + 100 * (partkey % 1000)


def generate_tables(sf: float, seed: int) -> Dict[str, List[tuple]]:
    """Every table's rows, in load order."""
    counts = row_counts(sf)
    rng = np.random.default_rng(seed)
    out: Dict[str, List[tuple]] = {}

    out["region"] = [(i + 1, r) for i, r in enumerate(REGIONS)]
    out["nation"] = [(i + 1, n, r + 1) for i, (n, r) in enumerate(NATIONS)]
    out["city"] = [(i * 10 + d + 1, city_name(n, d), i + 1) for i, (n, _) in enumerate(NATIONS) for d in range(10)]
    city_nation = np.array([0] + [c[2] for c in out["city"]])

    n = counts["customer"]
    cities = rng.integers(1, counts["city"] + 1, size=n)
    out["customer"] = list(zip(
        range(1, n + 1),
        (f"Customer#{k:09d}" for k in range(1, n + 1)),
        _random_text(rng, n, 10, 25),
        _phones(rng, city_nation[cities]),
        (SEGMENTS[i] for i in rng.integers(0, len(SEGMENTS), size=n).tolist()),
        cities.tolist(),
    ))

    n = counts["supplier"]
    cities = rng.integers(1, counts["city"] + 1, size=n)
    out["supplier"] = list(zip(
        range(1, n + 1),
        (f"Supplier#{k:09d}" for k in range(1, n + 1)),
        _random_text(rng, n, 10, 25),
        _phones(rng, city_nation[cities]),
        cities.tolist(),
    ))

    out["mfgr"] = [(m, f"MFGR#{m}") for m in range(1, 6)]
    out["category"] = [((m - 1) * 5 + c, f"MFGR#{m}{c}", m) for m in range(1, 6) for c in range(1, 6)]
    out["brand1"] = [
        ((cat - 1) * BRANDS_PER_CATEGORY + b, f"{name}{b}", cat)
        for cat, name, _ in out["category"]
        for b in range(1, BRANDS_PER_CATEGORY + 1)
    ]

    n = counts["part"]
    c1 = rng.integers(0, len(COLORS), size=n).tolist()
    c2 = rng.integers(0, len(COLORS), size=n).tolist()
    types = rng.integers(0, [len(TYPE_SIZES), len(TYPE_FINISHES), len(TYPE_METALS)], size=(n, 3)).tolist()
    conts = rng.integers(0, [len(CONTAINER_SIZES), len(CONTAINER_KINDS)], size=(n, 2)).tolist()
    out["part"] = list(zip(
        range(1, n + 1),
        (f"{COLORS[a]} {COLORS[b]}" for a, b in zip(c1, c2)),
        (COLORS[a] for a in c1),
        (f"{TYPE_SIZES[a]} {TYPE_FINISHES[b]} {TYPE_METALS[c]}" for a, b, c in types),
        rng.integers(1, 51, size=n).tolist(),
        (f"{CONTAINER_SIZES[a]} {CONTAINER_KINDS[b]}" for a, b in conts),
        rng.integers(1, counts["brand1"] + 1, size=n).tolist(),
    ))

    years, months, days = _calendar_tables()
    out["year"], out["month"], out["day"] = years, months, days
    out["lineorder"] = _lineorder(rng, counts, [d[0] for d in days])
    return out


def _lineorder(rng: np.random.Generator, counts: Dict[str, int], daykeys: Sequence[int]) -> List[tuple]:
    n = counts["lineorder"]
    lines = rng.integers(1, 8, size=n // 4 + 8)
    while lines.sum() < n:  # pragma: no cover - needs an absurd draw
        lines = np.concatenate([lines, rng.integers(1, 8, size=n // 4 + 8)])
    n_orders = int(np.searchsorted(np.cumsum(lines), n) + 1)
    lines = lines[:n_orders].copy()
    lines[-1] -= int(lines.sum() - n)
    starts = np.concatenate([[0], np.cumsum(lines)[:-1]])

    order_idx = np.repeat(np.arange(n_orders), lines)
    orderkey = order_idx + 1
    linenumber = np.arange(n) - starts[order_idx] + 1

    last_order = daykeys.index(LAST_ORDER_DAY.year * 10000 + LAST_ORDER_DAY.month * 100 + LAST_ORDER_DAY.day)
    order_day = rng.integers(0, last_order + 1, size=n_orders)[order_idx]
    commit_day = np.minimum(order_day + rng.integers(30, 91, size=n), len(daykeys) - 1)
    keys = np.asarray(daykeys)

    custkey = rng.integers(1, counts["customer"] + 1, size=n_orders)[order_idx]
    priority = rng.integers(0, len(PRIORITIES), size=n_orders)[order_idx]
    partkey = rng.integers(1, counts["part"] + 1, size=n)
    suppkey = rng.integers(1, counts["supplier"] + 1, size=n)
    quantity = rng.integers(1, 51, size=n)
    discount = rng.integers(0, 11, size=n)
    tax = rng.integers(0, 9, size=n)
    shipmode = rng.integers(0, len(SHIPMODES), size=n)

    price = retail_price(partkey)
    extendedprice = quantity * price
    revenue = extendedprice * (100 - discount) // 100
    supplycost = 6 * price // 10
    ordtotal = np.add.reduceat(revenue, starts)[order_idx]

    return list(zip(
        orderkey.tolist(),
        linenumber.tolist(),
        custkey.tolist(),
        partkey.tolist(),
        suppkey.tolist(),
        keys[order_day].tolist(),
        [PRIORITIES[i] for i in priority.tolist()],
        ["0"] * n,
        quantity.tolist(),
        extendedprice.tolist(),
        ordtotal.tolist(),
        discount.tolist(),
        revenue.tolist(),
        supplycost.tolist(),
        tax.tolist(),
        keys[commit_day].tolist(),
        [SHIPMODES[i] for i in shipmode.tolist()],
    ))


def generate(sf: float, seed: int, out_dir) -> Dict[str, Path]:
    """Write one ``<table>.csv`` (with a header line) per table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, rows in generate_tables(sf, seed).items():
        path = out / f"{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLES[name].column_names)
            w.writerows(rows)
        paths[name] = path
        log.info("wrote %s (%d rows)", path, len(rows))
    return paths


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def ddl(table: Table) -> str:
    cols = [f"{quote_ident(c)} {'INTEGER' if k == 'int' else 'TEXT'} NOT NULL" for c, k in table.columns]
    cols.append(f"PRIMARY KEY ({', '.join(map(quote_ident, table.primary_key))})")
    for col, ref_table, ref_col in table.foreign_keys:
        cols.append(f"FOREIGN KEY ({quote_ident(col)}) REFERENCES {quote_ident(ref_table)} ({quote_ident(ref_col)})")
    return f"CREATE TABLE {quote_ident(table.name)} (\n  " + ",\n  ".join(cols) + "\n)"


def fact_indexes() -> List[str]:
    """One index per fact foreign key.

    Dimension-side FK columns are left unindexed: with those indexes
    SQLite starts some star joins from the dimensions and revisits the fact
    table once per dimension combination.
    """
    fact = TABLES["lineorder"]
    return [
        f"CREATE INDEX {quote_ident(f'{fact.name}_{col}_idx')} ON {quote_ident(fact.name)} ({quote_ident(col)})"
        for col, _, _ in fact.foreign_keys
    ]


def _read(path: Path, table: Table):
    """Yield ``(line_number, row)`` with integer columns converted."""
    kinds = [k for _, k in table.columns]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != table.column_names:
            raise LoadError(f"{path}: expected header {table.column_names}, found {header}")
        for line, raw in enumerate(reader, start=2):
            if len(raw) != len(kinds):
                raise LoadError(f"{path}:{line}: expected {len(kinds)} fields, found {len(raw)}: {raw}")
            try:
                yield line, tuple(int(v) if k == "int" else v for v, k in zip(raw, kinds))
            except ValueError:
                raise LoadError(f"{path}:{line}: non-integer value in row {raw}") from None


def _check(files: Dict[str, Path]):
    """PK and FK checks in load order, so a bad row is named before anything is written."""
    keys: Dict[str, set] = {}
    for table in SCHEMA:
        idx = {c: i for i, c in enumerate(table.column_names)}
        pk_idx = [idx[c] for c in table.primary_key]
        fks = [(idx[c], keys[t], t) for c, t, _ in table.foreign_keys]
        seen = set()
        for line, row in _read(files[table.name], table):
            key = row[pk_idx[0]] if len(pk_idx) == 1 else tuple(row[i] for i in pk_idx)
            if key in seen:
                raise LoadError(f"{files[table.name]}:{line}: duplicate primary key {key!r} in row {row}")
            seen.add(key)
            for i, parent_keys, parent in fks:
                if row[i] not in parent_keys:
                    raise LoadError(
                        f"{files[table.name]}:{line}: {table.column_names[i]}={row[i]!r} has no match in {parent}; row {row}"
                    )
        # only parents' keys are needed later
        keys[table.name] = seen if any(table.name == t for x in SCHEMA for _, t, _ in x.foreign_keys) else set()


def load(db: DbSession, directory, chunk: int = 50_000, analyze: Optional[bool] = None) -> Dict[str, int]:
    """Create the schema and load ``<table>.csv`` files into an empty database."""
    directory = Path(directory)
    files = {t.name: directory / f"{t.name}.csv" for t in SCHEMA}
    present = {name for name, p in files.items() if p.exists()}
    if not present:
        log.info("no table files in %s; nothing to load", directory)
        return {}
    missing = sorted(set(files) - present)
    if missing:
        raise LoadError(f"missing table files in {directory}: {', '.join(m + '.csv' for m in missing)}")
    existing = db.introspect(exact_counts=True).table_names()
    if existing:
        raise LoadError(f"target schema is not empty (has {', '.join(existing[:5])}{', ...' if len(existing) > 5 else ''})")
    _check(files)

    loaded = {}
    for table in SCHEMA:
        db.execute_script(ddl(table))
        batch, count = [], 0
        for _, row in _read(files[table.name], table):
            batch.append(row)
            if len(batch) >= chunk:
                db.bulk_insert(table.name, table.column_names, batch)
                count += len(batch)
                batch = []
        if batch:
            db.bulk_insert(table.name, table.column_names, batch)
            count += len(batch)
        loaded[table.name] = count
        log.info("loaded %s: %d rows", table.name, count)
    db.commit()
    for stmt in fact_indexes():
        db.execute_script(stmt)
    db.commit()
    if analyze is None:
        # SQLite's planner (3.37) turns the star joins into dimension cross
        # products once sqlite_stat1 exists; without statistics it scans the
        # fact table and probes the levels by primary key.
        analyze = db.driver != "sqlite"
    if analyze:
        db.analyze()
    return loaded
