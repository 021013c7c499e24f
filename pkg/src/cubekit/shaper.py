"""Turn grouped query results into pivot tables, and render them.

Layout: axis 0 members across the columns, axis 1 members down the rows,
axes 2 and up as extra column-header levels above axis 0 (the highest axis
outermost), measure aliases as the innermost header level.  Cells hold
numbers or ``None`` for combinations without facts.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import AmbiguousLabel
from .model import CubeView, MemberList

MEASURES_LEVEL = "measures"


@dataclass
class PivotTable:
    header_names: List[str]
    column_header: List[List]
    row_name: str
    row_labels: List
    cells: List[List]
    timing: Optional[dict] = field(default=None, compare=False)

    @property
    def width(self) -> int:
        return len(self.column_header[-1]) if self.column_header else 0

    @property
    def height(self) -> int:
        return len(self.cells)

    def columns(self) -> List[tuple]:
        """Column addresses, outermost label first."""
        return list(zip(*self.column_header)) if self.column_header else []

    def cell(self, row_label, *column_address):
        r = self.row_labels.index(row_label) if self.row_labels else 0
        c = self.columns().index(tuple(column_address))
        return self.cells[r][c]

    def __str__(self):
        return render(self, "pretty")


def _axis_values(view: CubeView, i: int) -> list:
    members = view.axes[i].members
    if not isinstance(members, MemberList):
        raise ValueError(f"axis {i} has unresolved members")
    return list(members.values)


def layout(view: CubeView):
    """``(header_names, column addresses, row_name, row labels)`` for ``view``."""
    n = len(view.axes)
    outer = [i for i in range(n - 1, 1, -1)]
    col_axes = outer + ([0] if n >= 1 else [])
    names = [view.axes[i].attribute for i in col_axes] + [MEASURES_LEVEL]
    spans = [_axis_values(view, i) for i in col_axes] + [view.measure_names]
    addresses = list(itertools.product(*spans))
    row_name = view.axes[1].attribute if n >= 2 else ""
    rows = _axis_values(view, 1) if n >= 2 else []
    return names, col_axes, addresses, row_name, rows


def pivot(resultset, view: CubeView) -> PivotTable:
    """Place each result row's measures into the cell its axis values address."""
    names, col_axes, addresses, row_name, rows = layout(view)
    n = len(view.axes)
    n_measures = len(view.measures)
    col_index = {a: j for j, a in enumerate(addresses)}
    row_index = {r: i for i, r in enumerate(rows)}
    height = max(1, len(rows))
    cells = [[None] * len(addresses) for _ in range(height)]
    seen = set()
    for rec in resultset.rows:
        axis_vals = rec[:n]
        if axis_vals in seen:
            shown = ", ".join(repr(v) for v in axis_vals)
            raise AmbiguousLabel(f"two groups share the label ({shown}); the attribute is not unique within its level")
        seen.add(axis_vals)
        r = row_index[axis_vals[1]] if n >= 2 else 0
        prefix = tuple(axis_vals[i] for i in col_axes)
        for k, alias in enumerate(view.measure_names):
            cells[r][col_index[prefix + (alias,)]] = rec[n + k]
    header = [list(level) for level in zip(*addresses)] if addresses else [[] for _ in names]
    return PivotTable(names, header, row_name, list(rows), cells)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(table: PivotTable) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    for name, labels in zip(table.header_names, table.column_header):
        w.writerow([name] + [_fmt(x) for x in labels])
    w.writerow([table.row_name] + [""] * table.width)
    labels = table.row_labels if table.row_labels else [""]
    for label, row in zip(labels, table.cells):
        w.writerow([_fmt(label)] + [_fmt(v) for v in row])
    return out.getvalue()


def _parse_value(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_label(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def parse_csv(text: str, header_levels: Optional[int] = None) -> PivotTable:
    """Read back :func:`render_csv` output.

    Without ``header_levels`` the header ends at the first line whose cells
    after the first are all empty (the row-name line).
    """
    rows = list(csv.reader(io.StringIO(text)))
    if header_levels is None:
        header_levels = next(i for i, r in enumerate(rows) if all(c == "" for c in r[1:]))
    names = [r[0] for r in rows[:header_levels]]
    header = [[_parse_label(c) for c in r[1:]] for r in rows[:header_levels]]
    header[-1] = [str(c) for c in rows[header_levels - 1][1:]]  # measure aliases stay text
    row_name = rows[header_levels][0]
    body = rows[header_levels + 1:]
    if row_name == "" and len(body) == 1 and body[0][0] == "":
        labels = []
    else:
        labels = [_parse_label(r[0]) for r in body]
    cells = [[_parse_value(c) for c in r[1:]] for r in body]
    return PivotTable(names, header, row_name, labels, cells)


def _spans(labels: Sequence, parents: Sequence[Tuple[int, int]]) -> List[Tuple[int, int, object]]:
    """Merge runs of equal labels, never across a parent span boundary."""
    out = []
    for start, end in parents:
        i = start
        while i < end:
            j = i
            while j + 1 < end and labels[j + 1] == labels[i]:
                j += 1
            out.append((i, j + 1, labels[i]))
            i = j + 1
    return out


def render_pretty(table: PivotTable) -> str:
    width = table.width
    label_texts = [_fmt(x) for x in (table.row_labels or [""])]
    stub = max([len(table.row_name)] + [len(t) for t in label_texts] + [len(n) for n in table.header_names])
    col_w = [1] * width
    for j in range(width):
        for row in table.cells:
            col_w[j] = max(col_w[j], len(_fmt(row[j])))
    # widen columns so merged labels fit
    parents = [(0, width)]
    levels = []
    for labels in table.column_header:
        spans = _spans(labels, parents)
        levels.append(spans)
        for s, e, lab in spans:
            have = sum(col_w[s:e]) + 3 * (e - s - 1)
            need = len(_fmt(lab))
            if need > have:
                col_w[e - 1] += need - have
        parents = [(s, e) for s, e, _ in spans]

    def rule(left, mid, right):
        return left + "─" * (stub + 2) + "".join(mid + "─" * (w + 2) for w in col_w) + right

    def span_width(s, e):
        return sum(col_w[s:e]) + 3 * (e - s - 1)

    lines = [rule("┌", "┬", "┐")]
    for name, spans in zip(table.header_names, levels):
        cells = "".join(f"│ {_fmt(lab).center(span_width(s, e))} " for s, e, lab in spans)
        lines.append(f"│ {name.ljust(stub)} {cells}│")
    lines.append(f"│ {table.row_name.ljust(stub)} " + "".join(f"│ {'':{w}} " for w in col_w) + "│")
    lines.append(rule("├", "┼", "┤"))
    for label, row in zip(label_texts, table.cells):
        body = "".join(f"│ {_fmt(v).rjust(w)} " for v, w in zip(row, col_w))
        lines.append(f"│ {label.ljust(stub)} {body}│")
    lines.append(rule("└", "┴", "┘"))
    return "\n".join(lines) + "\n"


def render(table: PivotTable, fmt: str = "pretty") -> str:
    if fmt == "csv":
        return render_csv(table)
    if fmt == "pretty":
        return render_pretty(table)
    raise ValueError(f"unknown format {fmt!r}")
