"""Attribute-style access to views, in the manner of a notebook session::

    view = session.Sales
    view.columns(view.Date.year.year[2022].children()) \\
        .rows(view.Product.category.category.members()) \\
        .where((view.Date.day.day >= 7) & (view.Supplier.nation.nation == "Denmark")) \\
        .measures(view.UnitSales) \\
        .output()
"""

from __future__ import annotations

from typing import List

from . import navigator, views
from .errors import UnknownDimension, UnknownMeasure
from .model import AttrRef, CubeView, MeasureSchema, make_predicate


class View:
    """A :class:`CubeView` plus the session it runs against.  Immutable."""

    def __init__(self, session, cube_view: CubeView):
        object.__setattr__(self, "_session", session)
        object.__setattr__(self, "cube_view", cube_view)

    def __setattr__(self, name, value):
        raise AttributeError("views are immutable")

    def _with(self, cv: CubeView) -> "View":
        return View(self._session, cv)

    @property
    def cube(self):
        return self.cube_view.cube

    # introspection / measure selection ---------------------------------
    def measures(self, *items, **named):
        """Without arguments, the cube's measure names; otherwise set the view's measures."""
        if not items and not named:
            return [m.name for m in self.cube.measures]
        return self._with(views.measures(self.cube_view, *items, **named))

    def dimensions(self) -> List[str]:
        return [d.name for d in self.cube.dimensions]

    # builder -------------------------------------------------------------
    def axis(self, i, members):
        return self._with(views.axis(self.cube_view, i, unwrap(members)))

    def columns(self, members):
        return self.axis(0, members)

    def rows(self, members):
        return self.axis(1, members)

    def pages(self, members):
        return self.axis(2, members)

    def sections(self, members):
        return self.axis(3, members)

    def chapters(self, members):
        return self.axis(4, members)

    def where(self, p):
        return self._with(views.where(self.cube_view, p))

    def output(self, allow_huge: bool = False, **gen):
        return views.output(self.cube_view, self._session.db, allow_huge=allow_huge, **gen)

    def explain(self, allow_huge: bool = False, **gen):
        return views.explain(self.cube_view, self._session.db, allow_huge=allow_huge, **gen)

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        try:
            return Dimension(self, self.cube.dimension(name))
        except UnknownDimension:
            pass
        try:
            return self.cube.measure(name)
        except UnknownMeasure:
            pass
        raise AttributeError(f"view {self.cube.name!r} has no dimension or measure {name!r}")

    def fact(self, column: str) -> "Attribute":
        """A fact column usable in predicates, e.g. ``view.fact("quantity") < 25``."""
        return Attribute(self, self.cube.resolve(AttrRef(None, None, column)))

    def __eq__(self, other):
        return isinstance(other, View) and other.cube_view == self.cube_view

    def __hash__(self):
        return hash(self.cube_view)

    def __repr__(self):
        return f"<View {self.cube.name} axes={len(self.cube_view.axes)} measures={self.cube_view.measure_names}>"


class Dimension:
    def __init__(self, view: View, binding):
        self._view = view
        self.binding = binding

    def hierarchies(self):
        return self.binding.hierarchies()

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return Level(self._view, self.binding, self.binding.level(name))

    def __repr__(self):
        return f"<Dimension {self.binding.name}>"


class Level:
    def __init__(self, view: View, dim, lb):
        self._view = view
        self._dim = dim
        self.binding = lb

    def attributes(self) -> List[str]:
        return list(self.binding.level.attrs)

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        ref = AttrRef(self._dim.name, self.binding.name, self.binding.column(name))
        return Attribute(self._view, ref)

    def __repr__(self):
        return f"<Level {self._dim.name}.{self.binding.name}>"


class _Comparable:
    """Comparison operators build predicate atoms."""

    def _atom(self, op, other):
        return make_predicate(self._view.cube, self.ref, op, other)

    def __eq__(self, other):  # type: ignore[override]
        return self._atom("=", other)

    def __ne__(self, other):  # type: ignore[override]
        return self._atom("!=", other)

    def __lt__(self, other):
        return self._atom("<", other)

    def __le__(self, other):
        return self._atom("<=", other)

    def __gt__(self, other):
        return self._atom(">", other)

    def __ge__(self, other):
        return self._atom(">=", other)

    __hash__ = None


class Attribute(_Comparable):
    def __init__(self, view: View, ref: AttrRef):
        self._view = view
        self.ref = ref

    def members(self):
        return navigator.members(self._view._session.db, self._view.cube, self.ref)

    def __getitem__(self, value):
        return Member(self._view, navigator.member(self._view._session.db, self._view.cube, self.ref, value))

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return self[name]

    def __repr__(self):
        return f"<Attribute {self.ref}>"


class Member:
    def __init__(self, view: View, path: navigator.MemberPath):
        self._view = view
        self.path = path

    def children(self):
        return navigator.children(self._view._session.db, self._view.cube, self.path)

    def __getitem__(self, value):
        return Member(self._view, navigator.member(self._view._session.db, self._view.cube, self.path, value))

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return self[name]

    def __repr__(self):
        return f"<Member {'/'.join(str(s[2]) for s in self.path.steps)}>"


def unwrap(members):
    """Fluent handles to plain member paths/lists for the builder."""
    if isinstance(members, Member):
        return members.path
    if isinstance(members, (list, tuple)):
        return [unwrap(m) for m in members]
    return members
