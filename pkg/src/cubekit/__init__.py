"""Semantic layer over snowflake-schema databases.

Cubes are inferred from the database catalog, queried through immutable
cube views, compiled to one SQL statement each and returned as pivot tables.
"""

from .dbio import ConnectionConfig, connect
from .errors import CubeKitError, DatabaseError, UserError
from .model import CubeBinding, CubeView, default_view
from .navigator import CubeSession, create_session
from .shaper import PivotTable

__all__ = [
    "ConnectionConfig",
    "CubeBinding",
    "CubeKitError",
    "CubeSession",
    "CubeView",
    "DatabaseError",
    "PivotTable",
    "UserError",
    "connect",
    "create_session",
    "default_view",
]
