"""Database access: connection settings, catalog introspection, execution.

Two drivers sit behind one small interface: PostgreSQL through psycopg
(optional dependency) and the embedded sqlite3 module.  Generated SQL uses
``?`` placeholders and double-quoted identifiers; the PostgreSQL session
rewrites placeholders into psycopg's ``%s`` style.
"""

from __future__ import annotations

import configparser
import decimal
import os
import sqlite3
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import ConfigError, ConnectionFailed, PermissionDenied, QueryFailed
from .model import is_numeric_type

ENV_PREFIX = "CUBEKIT_DB_"


def quote_ident(name: str) -> str:
    return '"' + str(name).replace('"', '""') + '"'


@dataclass(frozen=True)
class ConnectionConfig:
    """Where to connect.  For sqlite, ``dbname`` is the database file path."""

    dbname: str
    user: str = ""
    password: str = ""
    host: str = "127.0.0.1"
    port: int = 5432
    driver: str = "postgres"
    schema: str = "public"

    def __post_init__(self):
        if self.driver not in ("postgres", "sqlite"):
            raise ConfigError(f"unknown driver {self.driver!r}")
        if not self.dbname:
            raise ConfigError("database name must be given")
        if self.driver == "postgres":
            if not self.host:
                raise ConfigError("host must be non-empty")
            try:
                port = int(self.port)
            except (TypeError, ValueError):
                raise ConfigError(f"port must be numeric, got {self.port!r}") from None
            if not 1 <= port <= 65535:
                raise ConfigError(f"port out of range: {port}")
            object.__setattr__(self, "port", port)

    @classmethod
    def sqlite(cls, path: str) -> "ConnectionConfig":
        return cls(dbname=str(path), driver="sqlite")

    @classmethod
    def from_env(cls, environ=None) -> "ConnectionConfig":
        env = os.environ if environ is None else environ
        values = {}
        for key in ("NAME", "USER", "PASSWORD", "HOST", "PORT", "DRIVER", "SCHEMA"):
            v = env.get(ENV_PREFIX + key)
            if v is not None:
                values["dbname" if key == "NAME" else key.lower()] = v
        if "dbname" not in values:
            raise ConfigError(f"{ENV_PREFIX}NAME is not set")
        return cls(**values)

    @classmethod
    def from_file(cls, path: str, section: str = "database") -> "ConnectionConfig":
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path!r}")
        if not parser.has_section(section):
            raise ConfigError(f"config file {path!r} has no [{section}] section")
        sec = parser[section]
        values = {k: sec[k] for k in ("user", "password", "host", "port", "driver", "schema") if k in sec}
        name = sec.get("dbname") or sec.get("name")
        if name is None:
            raise ConfigError(f"config file {path!r} lacks dbname")
        return cls(dbname=name, **values)


@dataclass(frozen=True)
class TableInfo:
    name: str
    row_count: int


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    sql_type: str
    is_numeric: bool


@dataclass(frozen=True)
class ForeignKey:
    from_table: str
    from_column: str
    to_table: str
    to_column: str


@dataclass(frozen=True)
class CatalogSnapshot:
    tables: Tuple[TableInfo, ...] = ()
    columns: Tuple[Tuple[str, Tuple[ColumnInfo, ...]], ...] = ()
    primary_keys: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    foreign_keys: Tuple[ForeignKey, ...] = ()

    def __post_init__(self):
        cols = {t: {c.name for c in cs} for t, cs in self.columns}
        for fk in self.foreign_keys:
            if fk.from_column not in cols.get(fk.from_table, ()) or fk.to_column not in cols.get(fk.to_table, ()):
                raise ValueError(f"foreign key endpoint missing: {fk}")
        for t in self.tables:
            if t.row_count < 0:
                raise ValueError(f"negative row count for {t.name}")

    @classmethod
    def build(cls, tables, columns: Dict[str, Sequence[ColumnInfo]], primary_keys: Dict[str, Sequence[str]], foreign_keys):
        names = sorted(t.name for t in tables)
        return cls(
            tables=tuple(sorted(tables, key=lambda t: t.name)),
            columns=tuple((n, tuple(columns.get(n, ()))) for n in names),
            primary_keys=tuple((n, tuple(primary_keys.get(n, ()))) for n in names),
            foreign_keys=tuple(foreign_keys),
        )

    def table_names(self) -> List[str]:
        return [t.name for t in self.tables]

    def has_table(self, name: str) -> bool:
        return any(t.name == name for t in self.tables)

    def row_count(self, table: str) -> int:
        for t in self.tables:
            if t.name == table:
                return t.row_count
        raise KeyError(table)

    def columns_of(self, table: str) -> Tuple[ColumnInfo, ...]:
        for t, cs in self.columns:
            if t == table:
                return cs
        raise KeyError(table)

    def column(self, table: str, name: str) -> ColumnInfo:
        for c in self.columns_of(table):
            if c.name == name:
                return c
        raise KeyError(f"{table}.{name}")

    def primary_key(self, table: str) -> Tuple[str, ...]:
        for t, pk in self.primary_keys:
            if t == table:
                return pk
        return ()

    def foreign_keys_from(self, table: str) -> List[ForeignKey]:
        """Outgoing foreign keys of ``table`` in column order."""
        order = {c.name: i for i, c in enumerate(self.columns_of(table))}
        fks = [fk for fk in self.foreign_keys if fk.from_table == table]
        return sorted(fks, key=lambda fk: order.get(fk.from_column, len(order)))


@dataclass
class ResultSet:
    columns: List[str]
    rows: List[tuple]
    db_time: float = 0.0

    def __post_init__(self):
        width = len(self.columns)
        for r in self.rows:
            if len(r) != width:
                raise ValueError("row width does not match column count")


def _plain(value):
    # NUMERIC sums come back as Decimal from PostgreSQL
    if isinstance(value, decimal.Decimal):
        if value == value.to_integral_value():
            return int(value)
        return float(value)
    return value


class DbSession:
    """Common surface of the drivers.  One statement in flight at a time."""

    driver = "abstract"

    def __init__(self):
        self.statement_count = 0
        self.cache: dict = {}

    # driver hooks -------------------------------------------------------
    def _run(self, sql: str, params: Sequence):  # pragma: no cover - abstract
        raise NotImplementedError

    def introspect(self, exact_counts: bool = False) -> CatalogSnapshot:  # pragma: no cover
        raise NotImplementedError

    def close(self):  # pragma: no cover
        raise NotImplementedError

    # shared -------------------------------------------------------------
    def execute(self, sql: str, params: Sequence = ()) -> ResultSet:
        self.statement_count += 1
        start = time.perf_counter()
        columns, rows = self._run(sql, list(params))
        elapsed = time.perf_counter() - start
        return ResultSet(columns, rows, elapsed)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SQLiteSession(DbSession):
    driver = "sqlite"

    def __init__(self, path: str):
        super().__init__()
        try:
            self.conn = sqlite3.connect(path)
        except sqlite3.Error as exc:
            raise ConnectionFailed(f"cannot open sqlite database {path!r}: {exc}") from exc
        self.conn.execute("PRAGMA foreign_keys = ON")
        self.path = path

    def _run(self, sql, params):
        try:
            cur = self.conn.execute(sql, params)
            rows = cur.fetchall()
        except sqlite3.Error as exc:
            raise QueryFailed(str(exc), sql) from exc
        cols = [d[0] for d in cur.description] if cur.description else []
        return cols, rows

    def execute_script(self, sql: str):
        try:
            self.conn.executescript(sql)
        except sqlite3.Error as exc:
            raise QueryFailed(str(exc), sql) from exc

    def bulk_insert(self, table: str, columns: Sequence[str], rows: Iterable[Sequence]):
        sql = f"INSERT INTO {quote_ident(table)} ({', '.join(map(quote_ident, columns))}) VALUES ({', '.join('?' * len(columns))})"
        try:
            self.conn.executemany(sql, rows)
        except sqlite3.Error as exc:
            raise QueryFailed(str(exc), sql) from exc

    def commit(self):
        self.conn.commit()

    def analyze(self):
        self.conn.execute("ANALYZE")
        self.conn.commit()

    def introspect(self, exact_counts: bool = False) -> CatalogSnapshot:
        names = [r[0] for r in self.conn.execute(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
        )]
        stats = {}
        if not exact_counts:
            has_stat = self.conn.execute("SELECT 1 FROM sqlite_master WHERE name = 'sqlite_stat1'").fetchone()
            if has_stat:
                for tbl, stat in self.conn.execute("SELECT tbl, stat FROM sqlite_stat1"):
                    try:
                        stats.setdefault(tbl, int(str(stat).split()[0]))
                    except (ValueError, IndexError):
                        pass
        tables, columns, pks, fks = [], {}, {}, []
        for name in names:
            count = stats.get(name)
            if count is None:
                count = self.conn.execute(f"SELECT COUNT(*) FROM {quote_ident(name)}").fetchone()[0]
            tables.append(TableInfo(name, count))
            info = self.conn.execute(f"PRAGMA table_info({quote_ident(name)})").fetchall()
            columns[name] = [ColumnInfo(r[1], r[2] or "", is_numeric_type(r[2] or "")) for r in info]
            pks[name] = [r[1] for r in sorted((r for r in info if r[5]), key=lambda r: r[5])]
            for r in self.conn.execute(f"PRAGMA foreign_key_list({quote_ident(name)})").fetchall():
                target = r[4]
                if target is None:
                    target_pk = [x[1] for x in self.conn.execute(f"PRAGMA table_info({quote_ident(r[2])})") if x[5]]
                    target = target_pk[r[1]] if r[1] < len(target_pk) else target_pk[0]
                fks.append(ForeignKey(name, r[3], r[2], target))
        return CatalogSnapshot.build(tables, columns, pks, fks)

    def close(self):
        self.conn.close()


_PG_COLUMNS = """
SELECT table_name, column_name, data_type
FROM information_schema.columns
WHERE table_schema = %s
ORDER BY table_name, ordinal_position
"""

_PG_CONSTRAINT_COLUMNS = """
SELECT cl.relname, att.attname, clf.relname, attf.attname
FROM pg_constraint c
JOIN pg_class cl ON cl.oid = c.conrelid
JOIN pg_namespace n ON n.oid = cl.relnamespace
CROSS JOIN LATERAL unnest(c.conkey, COALESCE(c.confkey, c.conkey)) WITH ORDINALITY AS u(k, fk, ord)
JOIN pg_attribute att ON att.attrelid = c.conrelid AND att.attnum = u.k
LEFT JOIN pg_class clf ON clf.oid = c.confrelid
LEFT JOIN pg_attribute attf ON attf.attrelid = c.confrelid AND attf.attnum = u.fk
WHERE n.nspname = %s AND c.contype = %s
ORDER BY cl.relname, c.conname, u.ord
"""


class PostgresSession(DbSession):
    driver = "postgres"

    def __init__(self, config: ConnectionConfig):
        super().__init__()
        try:
            import psycopg
        except ImportError as exc:  # pragma: no cover - depends on environment
            raise ConnectionFailed("the PostgreSQL driver needs the 'psycopg' package") from exc
        self._psycopg = psycopg
        try:
            self.conn = psycopg.connect(
                dbname=config.dbname,
                user=config.user or None,
                password=config.password or None,
                host=config.host,
                port=config.port,
                autocommit=True,
                connect_timeout=10,
                options=f"-c search_path={config.schema}",
            )
        except psycopg.Error as exc:
            raise ConnectionFailed(f"cannot connect to {config.host}:{config.port}/{config.dbname}: {exc}") from exc
        self.schema = config.schema

    @staticmethod
    def translate(sql: str) -> str:
        return sql.replace("%", "%%").replace("?", "%s")

    def _raw(self, sql, params):
        errors = self._psycopg.errors
        try:
            with self.conn.cursor() as cur:
                cur.execute(sql, params)
                if cur.description is None:
                    return [], []
                return [d.name for d in cur.description], cur.fetchall()
        except errors.InsufficientPrivilege as exc:
            raise PermissionDenied(str(exc).strip()) from exc
        except self._psycopg.Error as exc:
            raise QueryFailed(str(exc).strip(), sql) from exc

    def _run(self, sql, params):
        columns, rows = self._raw(self.translate(sql), params)
        return columns, [tuple(_plain(v) for v in r) for r in rows]

    def execute_script(self, sql: str):
        self._raw(sql, None)

    def bulk_insert(self, table: str, columns: Sequence[str], rows: Iterable[Sequence]):
        cols = ", ".join(map(quote_ident, columns))
        sql = f"COPY {quote_ident(self.schema)}.{quote_ident(table)} ({cols}) FROM STDIN"
        try:
            with self.conn.cursor() as cur:
                with cur.copy(sql) as copy:
                    for r in rows:
                        copy.write_row(r)
        except self._psycopg.Error as exc:
            raise QueryFailed(str(exc).strip(), sql) from exc

    def commit(self):
        pass  # autocommit

    def analyze(self):
        self._raw("ANALYZE", None)

    def introspect(self, exact_counts: bool = False) -> CatalogSnapshot:
        _, rows = self._raw(
            "SELECT c.relname, c.reltuples FROM pg_class c JOIN pg_namespace n ON n.oid = c.relnamespace "
            "WHERE n.nspname = %s AND c.relkind IN ('r', 'p') ORDER BY c.relname",
            [self.schema],
        )
        tables = []
        for name, estimate in rows:
            count = int(estimate)
            if exact_counts or count < 0:
                _, c = self._raw(f"SELECT COUNT(*) FROM {quote_ident(self.schema)}.{quote_ident(name)}", None)
                count = c[0][0]
            tables.append(TableInfo(name, count))
        known = {t.name for t in tables}
        columns: Dict[str, list] = {}
        for t, col, typ in self._raw(_PG_COLUMNS, [self.schema])[1]:
            if t in known:
                columns.setdefault(t, []).append(ColumnInfo(col, typ.upper(), is_numeric_type(typ)))
        pks: Dict[str, list] = {}
        for t, col, _, _ in self._raw(_PG_CONSTRAINT_COLUMNS, [self.schema, "p"])[1]:
            pks.setdefault(t, []).append(col)
        fks = [ForeignKey(*r) for r in self._raw(_PG_CONSTRAINT_COLUMNS, [self.schema, "f"])[1]]
        return CatalogSnapshot.build(tables, columns, pks, fks)

    def close(self):
        self.conn.close()


def connect(config: ConnectionConfig) -> DbSession:
    if config.driver == "sqlite":
        return SQLiteSession(config.dbname)
    return PostgresSession(config)


def introspect(session: DbSession, exact_counts: bool = False) -> CatalogSnapshot:
    return session.introspect(exact_counts=exact_counts)


def execute(session: DbSession, plan) -> ResultSet:
    """Run a QueryPlan (anything with ``sql`` and ``params``)."""
    return session.execute(plan.sql, plan.params)
