from __future__ import annotations

import subprocess
import sys

import pytest

from metahelpers import dsd, golden
from cubekit import cli
from cubekit.bench.harness import read_report
from cubekit.metadata import isomorphic, parse_turtle

QUERY = """\
view Sales
columns Date.year.year[2022].children()
rows [Product.category.category.Blouse, Product.category.category.Pants]
pages [Store.city.city.Aalborg]
where Date.month.month == "January" or Date.month.month == "February"
measures TSP = TotalSalesPrice, US = UnitSales
"""


@pytest.fixture(scope="module")
def meta(sales_path, tmp_path_factory):
    path = tmp_path_factory.mktemp("meta") / "sales.ttl"
    assert cli.main(["infer", "--sqlite", str(sales_path), "--dsd-name", "salesdb_snowflake_dsd", "-o", str(path)]) == 0
    return path


@pytest.fixture
def query_file(tmp_path):
    path = tmp_path / "q.cv"
    path.write_text(QUERY)
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_infer_writes_the_golden_structure(meta):
    assert isomorphic(dsd(parse_turtle(meta.read_text())), golden("salesdb_dsd.ttl"))


def test_infer_to_stdout(capsys, sales_path, meta):
    code, out, _ = run(capsys, "infer", "--sqlite", sales_path, "--dsd-name", "salesdb_snowflake_dsd")
    assert code == 0 and out == meta.read_text()


@pytest.mark.parametrize(
    "path, expected",
    [
        (None, "Sales\n"),
        ("Sales", "measures: [total_sales_price, unit_sales]\ndimensions: [supplier, store, product, date]\n"),
        ("Sales.Date", "[[day, month, year, ALL]]\n"),
        ("Sales.Store.address", "[store_id, address, size]\n"),
    ],
)
def test_describe(capsys, sales_path, meta, path, expected):
    argv = ["describe", "--sqlite", sales_path, "--meta", meta] + ([path] if path else [])
    assert run(capsys, *argv)[:2] == (0, expected)


@pytest.mark.parametrize("path", ["Sales.Weather", "HR", "Sales.Store.address.size"])
def test_describe_bad_paths(capsys, sales_path, meta, path):
    code, _, err = run(capsys, "describe", "--sqlite", sales_path, "--meta", meta, path)
    assert code == cli.EXIT_USER and err.startswith("error:")


def test_query_csv(capsys, sales_path, meta, query_file):
    code, out, err = run(capsys, "query", "--sqlite", sales_path, "--meta", meta, "-f", query_file, "--format", "csv")
    assert code == 0
    assert out.splitlines() == [
        "city,Aalborg,Aalborg,Aalborg,Aalborg",
        "month,January,January,February,February",
        "measures,TSP,US,TSP,US",
        "category,,,,",
        "Blouse,946513,754,468954,659",
        "Pants,846598,378,120546,129",
    ]
    assert "engine=" in err and "db=" in err


def test_query_from_stdin_pretty(capsys, monkeypatch, sales_path, meta):
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO(QUERY))
    code, out, _ = run(capsys, "query", "--sqlite", sales_path, "--meta", meta)
    assert code == 0 and out.startswith("┌") and "946513" in out


def test_query_explain(capsys, sales_path, meta, query_file):
    code, out, _ = run(capsys, "query", "--sqlite", sales_path, "--meta", meta, "-f", query_file, "--explain")
    assert code == 0
    sql = out.split("\n-- ")[0]
    assert sql.startswith("SELECT ") and sql.count("SELECT") == 1
    assert 'SUM("ft"."total_sales_price") AS "TSP"' in sql
    assert sql.count(" IN (") == 3
    assert "-- 17 parameter(s)" in out


@pytest.mark.parametrize(
    "argv, code",
    [
        (["query", "--sqlite", "{db}", "--meta", "{meta}", "-f", "{bad}"], cli.EXIT_USER),
        (["query", "--sqlite", "{db}", "--meta", "{tmp}/none.ttl", "-f", "{q}"], cli.EXIT_USER),
        (["query", "--sqlite", "{db}", "--meta", "{meta}", "-f", "{tmp}/none.cv"], cli.EXIT_USER),
        (["describe", "--sqlite", "{tmp}/empty.db", "--meta", "{meta}"], cli.EXIT_USER),
        (["describe", "--sqlite", "{tmp}/no/such/dir.db", "--meta", "{meta}"], cli.EXIT_DB),
        (["ssb", "bench", "--sqlite", "{db}", "--sf", "1", "--runs", "2"], cli.EXIT_USER),
        (["ssb", "bench", "--sqlite", "{db}", "--sf", "1", "--queries", "9.9"], cli.EXIT_USER),
    ],
)
def test_exit_codes(capsys, tmp_path, sales_path, meta, query_file, argv, code):
    bad = tmp_path / "bad.cv"
    bad.write_text("columns Store.city.city.members(\n")
    fill = {"db": sales_path, "meta": meta, "bad": bad, "tmp": tmp_path, "q": query_file}
    assert run(capsys, *[a.format(**fill) for a in argv])[0] == code


def test_syntax_errors_name_the_position(capsys, tmp_path, sales_path, meta):
    bad = tmp_path / "bad.cv"
    bad.write_text("view Sales\ncolumns Store.city.city.members(\n")
    code, _, err = run(capsys, "query", "--sqlite", sales_path, "--meta", meta, "-f", bad)
    assert code == 1 and "line 2" in err


def test_ssb_commands_end_to_end(capsys, tmp_path):
    data = tmp_path / "data"
    db = tmp_path / "ssb.db"
    code, out, _ = run(capsys, "ssb", "gen", "--sf", "0.001", "--seed", "3", "--out", data)
    assert code == 0 and "lineorder: 6000 rows" in out
    code, out, _ = run(capsys, "ssb", "load", "--sqlite", db, "--dir", data)
    assert code == 0 and "lineorder: 6000 rows" in out
    report = tmp_path / "report.csv"
    code, _, err = run(capsys, "ssb", "bench", "--sqlite", db, "--sf", "0.001", "--impls", "engine,sqlj",
                       "--queries", "1.1,Q4.1", "--runs", "3", "--report", report)
    assert code == 0 and "run 3/3" in err
    rows = read_report(report.read_text())
    assert [(r["query"], r["impl"]) for r in rows] == [("1.1", "engine"), ("1.1", "sqlj"), ("4.1", "engine"), ("4.1", "sqlj")]
    assert all(r["avg_s"] > 0 and r["peak_rss_bytes"] > 0 and not r["oom"] for r in rows)
    # a second load into the same database is refused
    assert run(capsys, "ssb", "load", "--sqlite", db, "--dir", data)[0] == cli.EXIT_DB


def test_module_entry_point(sales_path, meta):
    proc = subprocess.run([sys.executable, "-m", "cubekit", "describe", "--sqlite", str(sales_path), "--meta", str(meta)],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and proc.stdout == "Sales\n"
