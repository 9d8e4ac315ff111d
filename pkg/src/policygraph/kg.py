"""Ontology-validated triple store with pattern queries and import/export.

Classes: Policy, PolicyInstrument, TargetGroup, Location, GovernmentAgency.
Literal kinds: Topic, Scope, Objective, InstrumentType. Every predicate has
exactly one domain class and one range (class or literal kind); a triple
that violates domain or range is rejected with a typed error. Duplicate
(s, p, o) assertions merge provenance instead of duplicating.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import GraphImportError, InputError, NotFoundError, OntologyError

ENTITY_CLASSES = ("Policy", "PolicyInstrument", "TargetGroup", "Location", "GovernmentAgency")
LITERAL_KINDS = ("Topic", "Scope", "Objective", "InstrumentType")

# predicate -> (domain class, range class-or-literal-kind)
PREDICATES: dict[str, tuple[str, str]] = {
    "issued_by": ("Policy", "GovernmentAgency"),
    "has_instrument": ("Policy", "PolicyInstrument"),
    "instrument_type": ("PolicyInstrument", "InstrumentType"),
    "targets": ("PolicyInstrument", "TargetGroup"),
    "has_topic": ("Policy", "Topic"),
    "has_scope": ("Policy", "Scope"),
    "has_objective": ("Policy", "Objective"),
    "applies_in": ("Policy", "Location"),
}


def is_literal_kind(range_name: str) -> bool:
    return range_name in LITERAL_KINDS


@dataclass
class StoredTriple:
    subject: str
    predicate: str
    obj: str  # entity id or literal value
    provenance: list[tuple[str, int]] = field(default_factory=list)
    confidence: float = 1.0

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.subject, self.predicate, self.obj)


class KnowledgeGraph:
    """In-memory graph with serialized writes and snapshot export."""

    def __init__(self):
        self._entities: dict[str, str] = {}  # id -> class
        self._triples: list[StoredTriple] = []
        self._by_key: dict[tuple[str, str, str], StoredTriple] = {}
        self._lock = threading.RLock()

    # -- entities ----------------------------------------------------------

    def register_entity(self, entity_id: str, entity_class: str):
        if entity_class not in ENTITY_CLASSES:
            raise OntologyError(f"unknown entity class {entity_class!r}")
        if not entity_id:
            raise InputError("entity id must be non-empty")
        with self._lock:
            existing = self._entities.get(entity_id)
            if existing is not None and existing != entity_class:
                raise OntologyError(
                    f"entity {entity_id!r} already registered as {existing}",
                    expected=existing, actual=entity_class)
            self._entities[entity_id] = entity_class

    def entity_class(self, entity_id: str) -> str:
        cls = self._entities.get(entity_id)
        if cls is None:
            raise NotFoundError(f"unknown entity {entity_id!r}")
        return cls

    def entities(self) -> dict[str, str]:
        return dict(self._entities)

    # -- assertion ---------------------------------------------------------

    def assert_triple(self, subject: str, predicate: str, obj: str,
                      provenance: list[tuple[str, int]] | None = None,
                      confidence: float = 1.0) -> StoredTriple:
        if predicate not in PREDICATES:
            raise OntologyError(f"unknown predicate {predicate!r}")
        if not 0.0 < confidence <= 1.0:
            raise InputError("confidence must be in (0, 1]")
        domain, range_ = PREDICATES[predicate]
        with self._lock:
            subject_class = self._entities.get(subject)
            if subject_class is None:
                raise NotFoundError(f"subject entity {subject!r} not registered")
            if subject_class != domain:
                raise OntologyError(
                    f"domain violation for {predicate!r}: expected {domain}, "
                    f"got {subject_class}", expected=domain, actual=subject_class)
            if not is_literal_kind(range_):
                obj_class = self._entities.get(obj)
                if obj_class is None:
                    raise NotFoundError(f"object entity {obj!r} not registered")
                if obj_class != range_:
                    raise OntologyError(
                        f"range violation for {predicate!r}: expected {range_}, "
                        f"got {obj_class}", expected=range_, actual=obj_class)
            key = (subject, predicate, obj)
            existing = self._by_key.get(key)
            if existing is not None:
                for ref in provenance or []:
                    ref = (ref[0], int(ref[1]))
                    if ref not in existing.provenance:
                        existing.provenance.append(ref)
                existing.confidence = max(existing.confidence, confidence)
                return existing
            triple = StoredTriple(
                subject=subject, predicate=predicate, obj=obj,
                provenance=[(r[0], int(r[1])) for r in (provenance or [])],
                confidence=confidence,
            )
            self._triples.append(triple)
            self._by_key[key] = triple
            return triple

    # -- queries -----------------------------------------------------------

    def query(self, subject: str | None = None, predicate: str | None = None,
              obj: str | None = None) -> list[StoredTriple]:
        """Pattern match with None as wildcard; insertion order preserved."""
        return [t for t in self._triples
                if (subject is None or t.subject == subject)
                and (predicate is None or t.predicate == predicate)
                and (obj is None or t.obj == obj)]

    def neighborhood(self, entity_id: str, depth: int) -> dict:
        """Direction-agnostic BFS closure within ``depth`` hops."""
        if depth < 0:
            raise InputError("depth must be >= 0")
        self.entity_class(entity_id)  # not-found propagates
        nodes = {entity_id}
        edges: list[StoredTriple] = []
        frontier = {entity_id}
        seen_edges = set()
        for _ in range(depth):
            nxt = set()
            for triple in self._triples:
                if triple.subject in frontier or triple.obj in frontier:
                    if triple.key not in seen_edges:
                        seen_edges.add(triple.key)
                        edges.append(triple)
                    for node in (triple.subject, triple.obj):
                        if node not in nodes:
                            nodes.add(node)
                            nxt.add(node)
            frontier = nxt
            if not frontier:
                break
        return {"nodes": sorted(nodes), "edges": edges}

    # -- serialization -----------------------------------------------------

    @staticmethod
    def _quote(value: str) -> str:
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'

    def export_text(self) -> str:
        """Line-oriented snapshot; import(export(S)) reproduces S exactly."""
        with self._lock:
            lines = []
            for entity_id, cls in self._entities.items():
                lines.append(f"@entity {self._quote(entity_id)} {cls}")
            for t in self._triples:
                prov = ",".join(f"{d}:{i}" for d, i in t.provenance) or "-"
                lines.append(
                    f"{self._quote(t.subject)} {t.predicate} {self._quote(t.obj)} "
                    f"{prov} {t.confidence!r}")
            return "".join(line + "\n" for line in lines)

    @classmethod
    def import_text(cls, text: str) -> "KnowledgeGraph":
        """Parse and validate atomically: any bad line rejects the whole input."""
        graph = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                fields = _split_line(line)
            except ValueError as exc:
                raise GraphImportError(str(exc), lineno)
            try:
                if fields[0] == "@entity":
                    if len(fields) != 3:
                        raise InputError("@entity needs id and class")
                    graph.register_entity(fields[1], fields[2])
                    continue
                if len(fields) != 5:
                    raise InputError(f"expected 5 fields, got {len(fields)}")
                subject, predicate, obj, prov_raw, conf_raw = fields
                provenance = []
                if prov_raw != "-":
                    for part in prov_raw.split(","):
                        doc_id, _, idx = part.rpartition(":")
                        if not doc_id or not idx.isdigit():
                            raise InputError(f"bad provenance ref {part!r}")
                        provenance.append((doc_id, int(idx)))
                graph.assert_triple(subject, predicate, obj, provenance, float(conf_raw))
            except (InputError, NotFoundError, OntologyError, ValueError) as exc:
                raise GraphImportError(str(exc), lineno)
        return graph


def _split_line(line: str) -> list[str]:
    """Split on spaces, honoring double quotes with backslash escapes."""
    fields: list[str] = []
    buf: list[str] = []
    in_quote = False
    escape = False
    had_any = False
    for ch in line:
        if escape:
            buf.append(ch)
            escape = False
        elif ch == "\\" and in_quote:
            escape = True
        elif ch == '"':
            in_quote = not in_quote
            had_any = True
        elif ch == " " and not in_quote:
            if buf or had_any:
                fields.append("".join(buf))
                buf = []
                had_any = False
        else:
            buf.append(ch)
    if in_quote or escape:
        raise ValueError("unterminated quote")
    if buf or had_any:
        fields.append("".join(buf))
    return fields


def save_graph(graph: KnowledgeGraph, path: str | Path):
    Path(path).write_text(graph.export_text(), encoding="utf-8")


def load_graph(path: str | Path) -> KnowledgeGraph:
    path = Path(path)
    if not path.exists():
        return KnowledgeGraph()
    return KnowledgeGraph.import_text(path.read_text(encoding="utf-8"))
