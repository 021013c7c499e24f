"""Infer a cube from the catalog of a snowflake-schema database.

The fact table is the largest table.  Each of its foreign keys starts a
dimension; following one foreign key per table upward yields the chain of
levels.  Numeric non-key fact columns become SUM measures.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .dbio import CatalogSnapshot
from .errors import NothingToInfer
from .model import (
    ALL_LEVEL,
    CubeBinding,
    DimensionBinding,
    DimensionSchema,
    FactColumn,
    LevelBinding,
    LevelSchema,
    MeasureSchema,
)

log = logging.getLogger(__name__)


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit costs (two-row dynamic programme)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


@dataclass
class InferenceReport:
    cube: CubeBinding
    warnings: List[str] = field(default_factory=list)


def find_fact_table(catalog: CatalogSnapshot, warnings: Optional[list] = None) -> str:
    if not catalog.tables:
        raise NothingToInfer("nothing to infer: the database has no tables")
    best = max(t.row_count for t in catalog.tables)
    tied = sorted(t.name for t in catalog.tables if t.row_count == best)
    if len(tied) > 1 and warnings is not None:
        warnings.append(f"fact table tie at {best} rows between {tied}; picked {tied[0]!r}")
    return tied[0]


def find_bottom_levels(catalog: CatalogSnapshot, fact: str) -> List[Tuple[str, str]]:
    fks = catalog.foreign_keys_from(fact)
    if not fks:
        raise NothingToInfer(f"nothing to infer: fact table {fact!r} has no foreign keys")
    return [(fk.from_column, fk.to_table) for fk in fks]


def key_columns(catalog: CatalogSnapshot, table: str) -> set:
    keys = set(catalog.primary_key(table))
    keys.update(fk.from_column for fk in catalog.foreign_keys_from(table))
    return keys


def find_non_key_columns(catalog: CatalogSnapshot, table: str) -> List[str]:
    keys = key_columns(catalog, table)
    return [c.name for c in catalog.columns_of(table) if c.name not in keys]


def find_level_attributes(cols: Sequence[str], table_name: str, warnings: Optional[list] = None):
    """Split ``cols`` into the member column and the remaining attributes."""
    if not cols:
        raise ValueError("need at least one column")
    target = table_name.lower()
    dists = [levenshtein(c.lower(), target) for c in cols]
    best = min(dists)
    winners = [c for c, d in zip(cols, dists) if d == best]
    if len(winners) > 1 and warnings is not None:
        warnings.append(f"{table_name}: member column tie between {winners}; picked {winners[0]!r}")
    member = winners[0]
    return member, [c for c in cols if c != member]


def find_next_table(catalog: CatalogSnapshot, table: str, warnings: Optional[list] = None):
    """``(fk_column, referenced_table, referenced_column)`` or None at the top."""
    fks = catalog.foreign_keys_from(table)
    if not fks:
        return None
    if len(fks) > 1 and warnings is not None:
        warnings.append(
            f"{table}: {len(fks)} outgoing foreign keys; following {fks[0].from_column!r} only"
        )
    fk = fks[0]
    return fk.from_column, fk.to_table, fk.to_column


def find_measures(catalog: CatalogSnapshot, fact: str, warnings: Optional[list] = None) -> List[MeasureSchema]:
    keys = key_columns(catalog, fact)
    out = [
        MeasureSchema(c.name, FactColumn(c.name), "SUM")
        for c in catalog.columns_of(fact)
        if c.name not in keys and c.is_numeric
    ]
    if not out and warnings is not None:
        warnings.append(f"fact table {fact!r} has no numeric non-key columns; the cube has no measures")
    return out


def _walk(catalog: CatalogSnapshot, bottom: str, warnings: list):
    """Chain of ``(table, fk_column_up, parent_key_column)`` from the bottom table."""
    chain = []
    seen = set()
    current = bottom
    while current is not None:
        if current in seen:
            warnings.append(f"foreign-key cycle at {current!r}; hierarchy cut there")
            break
        seen.add(current)
        nxt = find_next_table(catalog, current, warnings)
        if nxt is None:
            chain.append((current, None, None))
            current = None
        else:
            chain.append((current, nxt[0], nxt[2]))
            current = nxt[1]
    return chain


def _common_prefix(tables: Sequence[str]) -> str:
    split = [t.split("_") for t in tables]
    out = []
    for parts in zip(*split):
        if len(set(parts)) != 1:
            break
        out.append(parts[0])
    return "_".join(out)


def level_short_name(table: str, dim_name: str) -> str:
    prefix = dim_name + "_"
    if table.startswith(prefix) and len(table) > len(prefix):
        return table[len(prefix):]
    return table


def dimension_names(chains: Sequence[Tuple[str, List[str]]]) -> List[str]:
    """Names for dimensions given ``(fact_fk_column, chain tables)`` pairs.

    Role-playing dimensions (bottom table referenced more than once) take the
    fact column name; others take the shared ``_`` prefix of their tables, or
    the bottom table name when there is none.
    """
    bottoms = Counter(tables[0] for _, tables in chains)
    names = []
    for fk_col, tables in chains:
        if bottoms[tables[0]] > 1:
            names.append(fk_col)
        else:
            names.append(_common_prefix(tables) or tables[0])
    counts = Counter(names)
    return [fk if counts[n] > 1 else n for n, (fk, _) in zip(names, chains)]


def classify_level(catalog, table, key_column, member_override=None, warnings=None):
    """``(key_attrs, attrs, member, types)`` for a level table."""
    pk = list(catalog.primary_key(table)) or [key_column]
    non_key = find_non_key_columns(catalog, table)
    if member_override is not None:
        member = member_override
    elif non_key:
        member, _ = find_level_attributes(non_key, table, warnings)
    else:
        member = pk[0]
        if warnings is not None:
            warnings.append(f"{table}: no non-key columns; using key {member!r} as level member")
    fk_cols = {fk.from_column for fk in catalog.foreign_keys_from(table)}
    attrs = [c.name for c in catalog.columns_of(table) if c.name not in fk_cols or c.name in pk]
    types = {c.name: c.sql_type for c in catalog.columns_of(table) if c.name in attrs}
    return (pk, attrs, member, types)


def infer_cube(catalog: CatalogSnapshot, view_name: Optional[str] = None) -> InferenceReport:
    warnings: List[str] = []
    fact = find_fact_table(catalog, warnings)
    bottoms = find_bottom_levels(catalog, fact)
    fact_fk_target = {fk.from_column: fk.to_column for fk in catalog.foreign_keys_from(fact)}
    walks = [(fk_col, _walk(catalog, table, warnings)) for fk_col, table in bottoms]
    names = dimension_names([(fk_col, [t for t, _, _ in chain]) for fk_col, chain in walks])

    usage = Counter()
    for _, chain in walks:
        for t in {t for t, _, _ in chain}:
            usage[t] += 1

    dims = []
    for dim_name, (fk_col, chain) in zip(names, walks):
        bindings = []
        key_col = fact_fk_target[fk_col]
        for table, up_fk, parent_key in chain:
            pk, attrs, member, types = classify_level(catalog, table, key_col, warnings=warnings)
            short = level_short_name(table, dim_name)
            schema = LevelSchema(short, tuple(pk), tuple(attrs), member)
            alias = f"{dim_name}_{table}" if usage[table] > 1 else table
            bindings.append(LevelBinding(schema, table, alias, key_col, up_fk, types))
            key_col = parent_key
        schema = DimensionSchema(dim_name, tuple(b.level for b in bindings) + (ALL_LEVEL,))
        dims.append(DimensionBinding(schema, tuple(bindings), fk_col, dim_name))

    measures = find_measures(catalog, fact, warnings)
    name = view_name or fact.capitalize()
    for w in warnings:
        log.warning(w)
    return InferenceReport(CubeBinding(name, fact, tuple(dims), tuple(measures)), warnings)
