"""Cube metadata as a QB4OLAP triple graph, with a small Turtle reader/writer.

Only the Turtle needed for this vocabulary is handled: ``@prefix``
directives, prefixed names, ``<iri>`` references, ``a``, ``;`` and ``,``
lists, ``[ ... ]`` anonymous nodes, ``_:label`` blank nodes, string and
number literals and ``#`` comments.  Graphs keep insertion order so that
writing a parsed document reproduces its layout.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .dbio import CatalogSnapshot
from .errors import ConfigError, MissingTable, TurtleSyntaxError
from .inference import classify_level, find_level_attributes, find_non_key_columns, level_short_name
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

QB = "http://purl.org/linked-data/cube#"
QB4O = "http://purl.org/qb4olap/cubes#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
DEFAULT_BASE = "http://example.org/"

RDF_TYPE = RDF + "type"


@dataclass(frozen=True)
class IRI:
    value: str


@dataclass(frozen=True)
class BNode:
    id: str


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float]


Term = Union[IRI, BNode, Literal]
Triple = Tuple[Term, IRI, Term]


@dataclass(frozen=True)
class MetaGraph:
    """Ordered, duplicate-free collection of triples plus prefix bindings."""

    triples: Tuple[Triple, ...] = ()
    prefixes: Tuple[Tuple[str, str], ...] = (("qb", QB), ("qb4o", QB4O), ("eg", DEFAULT_BASE))

    def __len__(self):
        return len(self.triples)

    def subjects(self, predicate: str, obj: Optional[Term] = None) -> List[Term]:
        out = []
        for s, p, o in self.triples:
            if p.value == predicate and (obj is None or o == obj) and s not in out:
                out.append(s)
        return out

    def objects(self, subject: Term, predicate: str) -> List[Term]:
        return [o for s, p, o in self.triples if s == subject and p.value == predicate]

    def value(self, subject: Term, predicate: str) -> Optional[Term]:
        objs = self.objects(subject, predicate)
        return objs[0] if objs else None

    def typed(self, cls_iri: str) -> List[Term]:
        return self.subjects(RDF_TYPE, IRI(cls_iri))


class GraphBuilder:
    def __init__(self, base: str = DEFAULT_BASE, prefix: str = "eg"):
        self.base = base
        self.prefixes = [("qb", QB), ("qb4o", QB4O), (prefix, base)]
        self._triples: List[Triple] = []
        self._seen = set()
        self._bnodes = 0

    def iri(self, local: str) -> IRI:
        return IRI(self.base + local)

    def bnode(self) -> BNode:
        self._bnodes += 1
        return BNode(f"b{self._bnodes}")

    def add(self, s: Term, p: str, o: Term):
        t = (s, IRI(p), o)
        if t not in self._seen:
            self._seen.add(t)
            self._triples.append(t)

    def graph(self) -> MetaGraph:
        prefixes = list(self.prefixes)
        if any(p.value.startswith(RDFS) or (isinstance(o, IRI) and o.value.startswith(RDFS)) for _, p, o in self._triples):
            prefixes.append(("rdfs", RDFS))
        return MetaGraph(tuple(self._triples), tuple(prefixes))


def local_name(value: str) -> str:
    return value.lower()


def add_to_graph(
    cube: CubeBinding,
    dsd_name: Optional[str] = None,
    base: str = DEFAULT_BASE,
    view_label: Optional[str] = None,
) -> MetaGraph:
    """QB4OLAP description of ``cube``.

    Per dimension: the dimension property, its level attributes, then its
    levels bottom-up.  Finally one DSD with a component per bottom level and
    per measure.  ``view_label`` is written as ``rdfs:label`` of the DSD.
    """
    b = GraphBuilder(base)
    typ = RDF_TYPE
    for dim in cube.dimensions:
        d = b.iri(local_name(dim.name))
        b.add(d, typ, IRI(QB + "DimensionProperty"))
        for lb in dim.level_bindings:
            for attr in level_attribute_columns(lb):
                b.add(b.iri(local_name(attr)), typ, IRI(QB + "AttributeProperty"))
        for i, lb in enumerate(dim.level_bindings):
            lv = b.iri(local_name(lb.alias))
            b.add(lv, typ, IRI(QB4O + "LevelProperty"))
            for attr in level_attribute_columns(lb):
                b.add(lv, QB4O + "hasAttribute", b.iri(local_name(attr)))
            b.add(lv, QB4O + "inDimension", d)
            if i + 1 < len(dim.level_bindings):
                b.add(lv, QB4O + "parentLevel", b.iri(local_name(dim.level_bindings[i + 1].alias)))
    dsd = b.iri(local_name(dsd_name or f"{cube.fact_table}_dsd"))
    b.add(dsd, typ, IRI(QB + "DataStructureDefinition"))
    if view_label:
        b.add(dsd, RDFS + "label", Literal(view_label))
    for dim in cube.dimensions:
        comp = b.bnode()
        b.add(dsd, QB + "component", comp)
        b.add(comp, QB4O + "level", b.iri(local_name(dim.bottom.alias)))
    for m in cube.measures:
        comp = b.bnode()
        b.add(dsd, QB + "component", comp)
        b.add(comp, QB + "measure", b.iri(local_name(m.name)))
        b.add(comp, QB4O + "hasAggregateFunction", IRI(QB4O + m.agg.lower()))
    return b.graph()


def level_attribute_columns(lb: LevelBinding) -> List[str]:
    """Descriptive columns of a level: everything but keys and the member."""
    lv = lb.level
    return [a for a in lv.attrs if a not in lv.key_attrs and a != lv.member]


# ---------------------------------------------------------------------------
# Turtle writer
# ---------------------------------------------------------------------------

_PN_LOCAL = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?$")


def _qname(iri: str, prefixes: Sequence[Tuple[str, str]]) -> str:
    best = None
    for prefix, ns in prefixes:
        if iri.startswith(ns) and _PN_LOCAL.match(iri[len(ns):]):
            if best is None or len(ns) > len(best[1]):
                best = (prefix, ns)
    if best is None:
        return f"<{iri}>"
    return f"{best[0]}:{iri[len(best[1]):]}"


def _literal(value) -> str:
    if isinstance(value, bool):
        raise ValueError("boolean literals are not supported")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = repr(value)
        if "e" in text or "E" in text:
            return text
        return text if "." in text else text + ".0"
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    return f'"{escaped}"'


def serialize_turtle(graph: MetaGraph) -> str:
    prefixes = graph.prefixes
    by_subject: Dict[Term, List[Tuple[IRI, Term]]] = {}
    for s, p, o in graph.triples:
        by_subject.setdefault(s, []).append((p, o))
    as_object = Counter(o for _, _, o in graph.triples if isinstance(o, BNode))
    # a blank node referenced exactly once is written inline; others get labels
    inline = {n for n, c in as_object.items() if c == 1}
    inline = _drop_cyclic(inline, by_subject)
    labels: Dict[BNode, str] = {}

    def term(t: Term, indent: int) -> str:
        if isinstance(t, IRI):
            return _qname(t.value, prefixes)
        if isinstance(t, Literal):
            return _literal(t.value)
        if t in inline:
            body = pred_list(by_subject.get(t, []), indent + 4)
            return f"[ {body} ]" if body else "[]"
        if t not in labels:
            labels[t] = f"b{len(labels)}"
        return f"_:{labels[t]}"

    def pred_list(pairs, indent: int) -> str:
        groups: Dict[IRI, List[Term]] = {}
        for p, o in pairs:
            groups.setdefault(p, []).append(o)
        parts = []
        for p, objs in groups.items():
            verb = "a" if p.value == RDF_TYPE else _qname(p.value, prefixes)
            sep = ",\n" + " " * (indent + 4)
            parts.append(f"{verb} " + sep.join(term(o, indent + 4) for o in objs))
        return (" ;\n" + " " * indent).join(parts)

    lines = [f"@prefix {p}: <{ns}> ." for p, ns in prefixes]
    blocks = []
    for s, pairs in by_subject.items():
        if s in inline:
            continue
        blocks.append(f"{term(s, 0)} {pred_list(pairs, 4)} .")
    text = "\n".join(lines) + "\n"
    if blocks:
        text += "\n" + "\n\n".join(blocks) + "\n"
    return text


def _drop_cyclic(inline: set, by_subject) -> set:
    """Inline nodes may not (transitively) contain themselves."""
    keep = set(inline)
    for start in inline:
        stack = [o for _, o in by_subject.get(start, []) if isinstance(o, BNode)]
        seen = set()
        while stack:
            n = stack.pop()
            if n == start:
                keep.discard(start)
                break
            if n in seen or n not in inline:
                continue
            seen.add(n)
            stack.extend(o for _, o in by_subject.get(n, []) if isinstance(o, BNode))
    return keep


# ---------------------------------------------------------------------------
# Turtle reader
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<directive>@prefix\b)
  | (?P<iriref><[^<>"{}|^`\\\s]*>)
  | (?P<bnode>_:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?)
  | (?P<a>a(?![A-Za-z0-9_:-]))
  | (?P<punct>[\[\];,.])
    """,
    re.VERBOSE,
)

_UNESCAPE = {"n": "\n", "r": "\r", "t": "\t", '"': '"', "\\": "\\", "'": "'"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TurtleSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes: List[Tuple[str, str]] = []
        self.triples: List[Triple] = []
        self.seen = set()
        self.labels: Dict[str, BNode] = {}
        self.anon = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        shown = tok.text or "end of input"
        raise TurtleSyntaxError(f"{msg}, found {shown!r}", tok.line, tok.col)

    def expect(self, text: str):
        t = self.peek()
        if t.text != text or t.kind not in ("punct",):
            self.fail(f"expected {text!r}")
        return self.next()

    def add(self, s, p, o):
        t = (s, p, o)
        if t not in self.seen:
            self.seen.add(t)
            self.triples.append(t)

    def new_bnode(self) -> BNode:
        self.anon += 1
        return BNode(f"#{self.anon}")

    def parse(self) -> MetaGraph:
        while self.peek().kind != "eof":
            if self.peek().kind == "directive":
                self.directive()
            else:
                self.statement()
        return MetaGraph(tuple(self.triples), tuple(self.prefixes))

    def directive(self):
        self.next()
        t = self.next()
        if t.kind != "pname" or not t.text.endswith(":") or t.text.count(":") != 1:
            self.fail("expected prefix name ending in ':'", t)
        iri = self.next()
        if iri.kind != "iriref":
            self.fail("expected <iri>", iri)
        self.expect(".")
        name = t.text[:-1]
        self.prefixes = [(p, ns) for p, ns in self.prefixes if p != name]
        self.prefixes.append((name, iri.text[1:-1]))

    def statement(self):
        t = self.peek()
        if t.kind == "punct" and t.text == "[":
            subject = self.blank_node_property_list()
            if not (self.peek().kind == "punct" and self.peek().text == "."):
                self.predicate_object_list(subject)
        else:
            subject = self.subject()
            self.predicate_object_list(subject)
        self.expect(".")

    def subject(self):
        t = self.next()
        if t.kind in ("iriref", "pname"):
            return self.resolve(t)
        if t.kind == "bnode":
            return self.labelled(t.text)
        self.fail("expected a subject", t)

    def labelled(self, text: str) -> BNode:
        if text not in self.labels:
            self.labels[text] = BNode(text[2:])
        return self.labels[text]

    def resolve(self, t: _Tok) -> IRI:
        if t.kind == "iriref":
            return IRI(t.text[1:-1])
        prefix, _, local = t.text.partition(":")
        for p, ns in self.prefixes:
            if p == prefix:
                return IRI(ns + local)
        self.fail(f"undeclared prefix {prefix!r}", t)

    def verb(self) -> IRI:
        t = self.next()
        if t.kind == "a":
            return IRI(RDF_TYPE)
        if t.kind in ("iriref", "pname"):
            return self.resolve(t)
        self.fail("expected a predicate", t)

    def predicate_object_list(self, subject):
        while True:
            p = self.verb()
            self.add_object(subject, p)
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                self.add_object(subject, p)
            if not (self.peek().kind == "punct" and self.peek().text == ";"):
                return
            while self.peek().kind == "punct" and self.peek().text == ";":
                self.next()
            t = self.peek()
            if t.kind == "punct" and t.text in ".]":
                return

    def add_object(self, subject, p):
        # the triple linking to a nested node goes in before the node's own triples
        t = self.peek()
        if t.kind == "punct" and t.text == "[":
            node = self.new_bnode()
            self.add(subject, p, node)
            self.next()
            if not (self.peek().kind == "punct" and self.peek().text == "]"):
                self.predicate_object_list(node)
            self.expect("]")
            return
        self.add(subject, p, self.obj())

    def blank_node_property_list(self):
        self.expect("[")
        node = self.new_bnode()
        if not (self.peek().kind == "punct" and self.peek().text == "]"):
            self.predicate_object_list(node)
        self.expect("]")
        return node

    def obj(self):
        t = self.next()
        if t.kind in ("iriref", "pname"):
            return self.resolve(t)
        if t.kind == "bnode":
            return self.labelled(t.text)
        if t.kind == "string":
            body = t.text[1:-1]
            return Literal(re.sub(r"\\(.)", lambda m: _UNESCAPE.get(m.group(1), m.group(1)), body))
        if t.kind == "number":
            text = t.text
            if re.fullmatch(r"[+-]?\d+", text):
                return Literal(int(text))
            return Literal(float(text))
        self.fail("expected an object", t)


def parse_turtle(text: str) -> MetaGraph:
    return _Parser(text).parse()


def isomorphic(g1: MetaGraph, g2: MetaGraph) -> bool:
    """Graph equality up to blank-node renaming."""
    import networkx as nx
    from networkx.algorithms import isomorphism as iso

    if len(g1.triples) != len(g2.triples):
        return False
    ground1 = {t for t in g1.triples if not any(isinstance(x, BNode) for x in t)}
    ground2 = {t for t in g2.triples if not any(isinstance(x, BNode) for x in t)}
    if ground1 != ground2:
        return False

    def to_nx(g: MetaGraph):
        G = nx.MultiDiGraph()
        for s, p, o in g.triples:
            for n in (s, o):
                G.add_node(n, label="_" if isinstance(n, BNode) else n)
            G.add_edge(s, o, p=p.value)
        return G

    def edge_match(a, b):
        return sorted(d["p"] for d in a.values()) == sorted(d["p"] for d in b.values())

    return nx.is_isomorphic(
        to_nx(g1), to_nx(g2), node_match=lambda a, b: a["label"] == b["label"], edge_match=edge_match
    )


# ---------------------------------------------------------------------------
# Rebinding to a live catalog
# ---------------------------------------------------------------------------


def _local(iri: Term, graph: MetaGraph) -> str:
    if not isinstance(iri, IRI):
        raise ConfigError(f"expected an IRI, got {iri!r}")
    value = iri.value
    for _, ns in sorted(graph.prefixes, key=lambda p: -len(p[1])):
        if value.startswith(ns) and ns not in (QB, QB4O, RDF, RDFS):
            return value[len(ns):]
    return re.split(r"[/#]", value)[-1]


def _find_table(catalog: CatalogSnapshot, name: str) -> Optional[str]:
    for t in catalog.table_names():
        if t.lower() == name.lower():
            return t
    return None


def _find_column(catalog: CatalogSnapshot, table: str, name: str) -> Optional[str]:
    for c in catalog.columns_of(table):
        if c.name.lower() == name.lower():
            return c.name
    return None


def schema_from_graph(graph: MetaGraph, catalog: CatalogSnapshot) -> CubeBinding:
    """Bind the cube described by ``graph`` to the tables of ``catalog``."""
    dsds = graph.typed(QB + "DataStructureDefinition")
    if len(dsds) != 1:
        raise ConfigError(f"metadata must describe exactly one data structure definition, found {len(dsds)}")
    dsd = dsds[0]
    bottoms, measure_iris = [], []
    for comp in graph.objects(dsd, QB + "component"):
        lvl = graph.value(comp, QB4O + "level")
        if lvl is not None:
            bottoms.append(lvl)
        m = graph.value(comp, QB + "measure")
        if m is not None:
            agg = graph.value(comp, QB4O + "hasAggregateFunction")
            measure_iris.append((m, _local(agg, graph).upper() if agg is not None else "SUM"))

    # resolve chains to tables
    missing = []
    chains = []
    for bottom in bottoms:
        dim_iri = graph.value(bottom, QB4O + "inDimension")
        dim_name = _local(dim_iri, graph) if dim_iri is not None else _local(bottom, graph)
        chain = []
        node, seen = bottom, set()
        while node is not None and node not in seen:
            seen.add(node)
            local = _local(node, graph)
            table = _find_table(catalog, local)
            if table is None and local.lower().startswith(dim_name.lower() + "_"):
                table = _find_table(catalog, local[len(dim_name) + 1:])
            if table is None:
                missing.append(local)
            attrs = [_local(a, graph) for a in graph.objects(node, QB4O + "hasAttribute")]
            chain.append((node, local, table, attrs))
            node = graph.value(node, QB4O + "parentLevel")
        chains.append((dim_name, chain))
    if missing:
        raise MissingTable(missing)

    measure_names = [_local(m, graph) for m, _ in measure_iris]
    fact = _find_fact(catalog, [c[0][2] for _, c in chains], measure_names)
    missing_cols = [m for m in measure_names if fact is None or _find_column(catalog, fact, m) is None]
    if missing_cols:
        raise MissingTable([f"measure column {m}" for m in missing_cols])

    usage = Counter()
    for _, chain in chains:
        for t in {c[2] for c in chain}:
            usage[t] += 1

    fact_fks = catalog.foreign_keys_from(fact) if fact else []
    used_fk = set()
    dims = []
    for dim_name, chain in chains:
        bottom_table = chain[0][2]
        candidates = [fk for fk in fact_fks if fk.to_table == bottom_table and fk.from_column not in used_fk]
        if not candidates:
            raise MissingTable([f"foreign key from {fact} to {bottom_table}"])
        named = [fk for fk in candidates if fk.from_column.lower() == dim_name.lower()]
        fk = (named or candidates)[0]
        used_fk.add(fk.from_column)
        key_col = fk.to_column
        bindings = []
        for i, (node, local, table, attrs) in enumerate(chain):
            parent = chain[i + 1][2] if i + 1 < len(chain) else None
            up_fk = None
            parent_key = None
            if parent is not None:
                ups = [f for f in catalog.foreign_keys_from(table) if f.to_table == parent]
                if not ups:
                    raise MissingTable([f"foreign key from {table} to {parent}"])
                up_fk, parent_key = ups[0].from_column, ups[0].to_column
            attr_cols = {(_find_column(catalog, table, a) or a) for a in attrs}
            candidates_m = [c for c in find_non_key_columns(catalog, table) if c not in attr_cols]
            if len(candidates_m) > 1:
                member, _ = find_level_attributes(candidates_m, table)
            else:
                member = candidates_m[0] if candidates_m else None
            pk, cols, member, types = classify_level(catalog, table, key_col, member_override=member)
            schema = LevelSchema(level_short_name(table, dim_name), tuple(pk), tuple(cols), member)
            alias = f"{dim_name}_{table}" if usage[table] > 1 else table
            bindings.append(LevelBinding(schema, table, alias, key_col, up_fk, types))
            key_col = parent_key
        dschema = DimensionSchema(dim_name, tuple(b.level for b in bindings) + (ALL_LEVEL,))
        dims.append((fk.from_column, DimensionBinding(dschema, tuple(bindings), fk.from_column, dim_name)))

    order = {c.name: i for i, c in enumerate(catalog.columns_of(fact))} if fact else {}
    dims.sort(key=lambda x: order.get(x[0], 0))
    measures = []
    for (m_iri, agg), name in zip(measure_iris, measure_names):
        col = _find_column(catalog, fact, name)
        measures.append(MeasureSchema(col, FactColumn(col), agg))
    measures.sort(key=lambda m: order.get(m.name, 0))

    label = graph.value(dsd, RDFS + "label")
    view_name = label.value if isinstance(label, Literal) else (fact or "cube").capitalize()
    return CubeBinding(view_name, fact or "", tuple(d for _, d in dims), tuple(measures))


def _find_fact(catalog: CatalogSnapshot, bottom_tables: Sequence[str], measures: Sequence[str]) -> Optional[str]:
    need = Counter(bottom_tables)
    best = None
    for t in catalog.tables:
        targets = Counter(fk.to_table for fk in catalog.foreign_keys_from(t.name))
        if any(targets[b] < n for b, n in need.items()):
            continue
        if any(_find_column(catalog, t.name, m) is None for m in measures):
            continue
        if best is None or t.row_count > best.row_count:
            best = t
    return best.name if best else None


def cube_name_from_graph(graph: MetaGraph) -> Optional[str]:
    dsds = graph.typed(QB + "DataStructureDefinition")
    if not dsds:
        return None
    label = graph.value(dsds[0], RDFS + "label")
    return label.value if isinstance(label, Literal) else None
