from __future__ import annotations

import os
import shutil
import socket
import subprocess
import sys
import tempfile
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import salesdb  # noqa: E402

from cubekit.dbio import ConnectionConfig, connect  # noqa: E402
from cubekit.inference import infer_cube  # noqa: E402
from cubekit.navigator import create_session  # noqa: E402

SSB_SF = 0.01
SSB_SEED = 367  # at sf 0.01 every query selects rows with this seed, Q3.3 and Q3.4 included


@pytest.fixture(scope="session")
def sales_path(tmp_path_factory):
    return salesdb.create_sqlite(tmp_path_factory.mktemp("sales") / "sales.db")


@pytest.fixture
def sales_db(sales_path):
    db = connect(ConnectionConfig.sqlite(str(sales_path)))
    yield db
    db.close()


@pytest.fixture(scope="session")
def sales_cube(sales_path):
    with connect(ConnectionConfig.sqlite(str(sales_path))) as db:
        return infer_cube(db.introspect()).cube


@pytest.fixture
def sales_session(sales_db, sales_cube):
    return create_session(sales_db, [sales_cube])


@pytest.fixture
def sales_view(sales_session):
    return sales_session.view("Sales")


@pytest.fixture(scope="session")
def ssb_dir(tmp_path_factory):
    from cubekit.bench import ssb

    out = tmp_path_factory.mktemp("ssb")
    ssb.generate(SSB_SF, SSB_SEED, out)
    return out


@pytest.fixture(scope="session")
def ssb_path(ssb_dir, tmp_path_factory):
    from cubekit.bench import ssb

    path = tmp_path_factory.mktemp("ssbdb") / "ssb.db"
    with connect(ConnectionConfig.sqlite(str(path))) as db:
        ssb.load(db, ssb_dir)
    return path


@pytest.fixture
def ssb_db(ssb_path):
    db = connect(ConnectionConfig.sqlite(str(ssb_path)))
    yield db
    db.close()


@pytest.fixture(scope="session")
def ssb_cube(ssb_path):
    with connect(ConnectionConfig.sqlite(str(ssb_path))) as db:
        return infer_cube(db.introspect()).cube


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def _pg_bindir():
    found = shutil.which("initdb")
    if found:
        return Path(found).parent
    try:
        import pgserver
    except ImportError:
        return None
    bindir = Path(pgserver.__file__).parent / "pginstall" / "bin"
    return bindir if (bindir / "initdb").exists() else None


@pytest.fixture(scope="session")
def pg_config():
    """A throwaway PostgreSQL cluster, or a skip when none can be started.

    ``CUBEKIT_TEST_PG`` may name an existing database as
    ``host:port:dbname:user`` instead.
    """
    pytest.importorskip("psycopg")
    given = os.environ.get("CUBEKIT_TEST_PG")
    if given:
        host, port, dbname, user = given.split(":")
        yield ConnectionConfig(dbname=dbname, user=user, host=host, port=port)
        return
    bindir = _pg_bindir()
    if bindir is None:
        pytest.skip("no PostgreSQL binaries found")
    # postgres refuses to run as root
    prefix = []
    if os.geteuid() == 0:
        if not shutil.which("setpriv"):
            pytest.skip("running as root without setpriv")
        prefix = ["setpriv", "--reuid=nobody", "--regid=nogroup", "--clear-groups"]
    root = Path(tempfile.mkdtemp(prefix="cubekit-pg-"))
    if prefix:
        shutil.chown(root, user="nobody")
    data = root / "data"
    port = _free_port()

    def run(*args):
        return subprocess.run(prefix + [str(a) for a in args], capture_output=True, timeout=120)

    try:
        if run(bindir / "initdb", "-D", data, "-U", "test", "-A", "trust").returncode:
            pytest.skip("initdb failed")
        started = run(bindir / "pg_ctl", "-D", data, "-o", f"-p {port} -k {root} -h 127.0.0.1",
                      "-w", "start", "-l", root / "log")
        if started.returncode:
            pytest.skip("postgres did not start")
        yield ConnectionConfig(dbname="postgres", user="test", host="127.0.0.1", port=str(port))
    finally:
        run(bindir / "pg_ctl", "-D", data, "-m", "immediate", "stop")
        shutil.rmtree(root, ignore_errors=True)
