"""System of record for sources, documents, sentences, labels, and predictions.

Layout under the store root:

    objects/<doc_id>        raw document bytes, content-addressed
    texts/<doc_id>.json     normalized display/analysis text
    meta.db                 sqlite metadata (documents, sentences, labels, ...)
    sources.jsonl           source registry, one record per line
    audit.log               append-only transition log, one JSON event per line
    runs/<run_id>.json      persisted pipeline run reports

Documents are content-addressed: doc_id is the hex digest of the raw bytes,
so re-ingesting identical content is a no-op. Nothing is ever deleted;
filtered-out documents are retained and filters can be re-run.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConflictError, IntegrityError, InputError, NotFoundError, StateError

INSTRUMENT_CLASSES = (
    "tax_benefits",
    "direct_payments",
    "fines",
    "loans",
    "supplies",
    "technical_assistance",
)

LABEL_KINDS = ("incentive_presence", "instrument", "topic")

JURISDICTION_LEVELS = ("federal", "state", "municipal")

DOCUMENT_FORMATS = ("html", "pdf_text", "pdf_scan", "txt")

# Lifecycle: fetched -> converted -> {filtered_out | filtered_in} -> sentenced
# -> classified -> linked. filtered_out is terminal.
STATUS_TRANSITIONS = {
    "fetched": {"converted"},
    "converted": {"filtered_out", "filtered_in"},
    "filtered_in": {"sentenced"},
    "sentenced": {"classified"},
    "classified": {"linked"},
    "filtered_out": set(),
    "linked": set(),
}

# Rank used by the pipeline planner to decide whether a stage's input status
# has already been reached.
STATUS_ORDER = ["fetched", "converted", "filtered_in", "sentenced", "classified", "linked"]


def content_id(raw_bytes: bytes) -> str:
    return hashlib.sha256(raw_bytes).hexdigest()


@dataclass
class SourceSpec:
    source_id: str
    country: str
    level: str  # federal | state | municipal
    region: str
    base_locator: str
    fetch_interval: float  # seconds
    format_hint: str = "txt"
    keyword_list_ref: str = ""
    enabled: bool = True

    def validate(self):
        if not self.source_id:
            raise InputError("source_id must be non-empty")
        if self.level not in JURISDICTION_LEVELS:
            raise InputError(f"unknown jurisdiction level {self.level!r}")
        if self.fetch_interval <= 0:
            raise InputError("fetch_interval must be > 0")
        if self.format_hint not in DOCUMENT_FORMATS:
            raise InputError(f"unknown format hint {self.format_hint!r}")


@dataclass
class DocumentRecord:
    doc_id: str
    source_id: str
    title: str
    content_digest: str
    raw_format: str = "txt"
    issuing_body: str = ""
    publication_date: str | None = None
    language: str = "en"
    fetched_at: float = 0.0
    status: str = "fetched"
    filter_report: dict | None = None


@dataclass
class SentenceRecord:
    doc_id: str
    index: int
    display_text: str
    analysis_text: str
    span: tuple[int, int]
    section_path: tuple[str, ...] = ()


@dataclass
class LabelRecord:
    doc_id: str
    index: int
    kind: str
    value: str
    provenance: str  # pre_labeled | confirmed | rejected | gold
    rater_id: str = "system"
    score: float | None = None
    created_at: float = 0.0
    decided_at: float | None = None
    decided_by: str | None = None


def _validate_label(kind: str, value: str):
    if kind not in LABEL_KINDS:
        raise InputError(f"unknown label kind {kind!r}")
    if kind == "instrument" and value not in INSTRUMENT_CLASSES:
        raise InputError(f"unknown instrument class {value!r}")
    if kind == "incentive_presence" and value not in ("true", "false"):
        raise InputError("incentive_presence value must be 'true' or 'false'")


_SCHEMA = """
CREATE TABLE IF NOT EXISTS documents (
    doc_id TEXT PRIMARY KEY,
    status TEXT NOT NULL,
    record TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sentences (
    doc_id TEXT NOT NULL,
    idx INTEGER NOT NULL,
    record TEXT NOT NULL,
    PRIMARY KEY (doc_id, idx)
);
CREATE TABLE IF NOT EXISTS labels (
    doc_id TEXT NOT NULL,
    idx INTEGER NOT NULL,
    kind TEXT NOT NULL,
    value TEXT NOT NULL,
    provenance TEXT NOT NULL,
    rater_id TEXT NOT NULL,
    score REAL,
    created_at REAL NOT NULL,
    decided_at REAL,
    decided_by TEXT,
    PRIMARY KEY (doc_id, idx, kind, value)
);
CREATE TABLE IF NOT EXISTS predictions (
    doc_id TEXT NOT NULL,
    idx INTEGER NOT NULL,
    kind TEXT NOT NULL,
    value TEXT NOT NULL,
    score REAL NOT NULL,
    PRIMARY KEY (doc_id, idx, kind, value)
);
CREATE TABLE IF NOT EXISTS fetch_state (
    source_id TEXT NOT NULL,
    locator TEXT NOT NULL,
    digest TEXT NOT NULL,
    PRIMARY KEY (source_id, locator, digest)
);
CREATE TABLE IF NOT EXISTS fetch_clock (
    source_id TEXT PRIMARY KEY,
    last_fetch REAL NOT NULL
);
"""


class CorpusStore:
    """Thread-safe persistent store shared by all pipeline stages."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "objects").mkdir(exist_ok=True)
        (self.root / "texts").mkdir(exist_ok=True)
        (self.root / "runs").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._db = sqlite3.connect(self.root / "meta.db", check_same_thread=False)
        self._db.executescript(_SCHEMA)
        self._db.commit()

    # -- audit -------------------------------------------------------------

    def _audit(self, entity: str, old, new):
        event = {"ts": time.time(), "entity": entity, "old": old, "new": new}
        with open(self.root / "audit.log", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def audit_events(self) -> list[dict]:
        path = self.root / "audit.log"
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    # -- sources -----------------------------------------------------------

    @property
    def _sources_path(self) -> Path:
        return self.root / "sources.jsonl"

    def list_sources(self) -> list[SourceSpec]:
        if not self._sources_path.exists():
            return []
        specs = []
        with open(self._sources_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    specs.append(SourceSpec(**json.loads(line)))
        return specs

    def get_source(self, source_id: str) -> SourceSpec:
        for spec in self.list_sources():
            if spec.source_id == source_id:
                return spec
        raise NotFoundError(f"unknown source {source_id!r}")

    def add_source(self, spec: SourceSpec) -> str:
        spec.validate()
        with self._lock:
            if any(s.source_id == spec.source_id for s in self.list_sources()):
                raise ConflictError(f"source {spec.source_id!r} already registered")
            with open(self._sources_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(spec), ensure_ascii=False) + "\n")
            self._audit(f"source:{spec.source_id}", None, "registered")
        return spec.source_id

    # -- fetch bookkeeping -------------------------------------------------

    def seen_digests(self, source_id: str, locator: str) -> set[str]:
        rows = self._db.execute(
            "SELECT digest FROM fetch_state WHERE source_id=? AND locator=?",
            (source_id, locator),
        ).fetchall()
        return {r[0] for r in rows}

    def record_seen_digest(self, source_id: str, locator: str, digest: str):
        with self._lock:
            self._db.execute(
                "INSERT OR IGNORE INTO fetch_state (source_id, locator, digest) VALUES (?,?,?)",
                (source_id, locator, digest),
            )
            self._db.commit()

    def last_fetch(self, source_id: str) -> float | None:
        row = self._db.execute(
            "SELECT last_fetch FROM fetch_clock WHERE source_id=?", (source_id,)
        ).fetchone()
        return row[0] if row else None

    def set_last_fetch(self, source_id: str, when: float):
        with self._lock:
            self._db.execute(
                "INSERT INTO fetch_clock (source_id, last_fetch) VALUES (?,?) "
                "ON CONFLICT(source_id) DO UPDATE SET last_fetch=excluded.last_fetch",
                (source_id, when),
            )
            self._db.commit()

    # -- documents ---------------------------------------------------------

    def put_document(self, record: DocumentRecord, raw_bytes: bytes) -> str:
        digest = content_id(raw_bytes)
        if record.content_digest != digest:
            raise IntegrityError(
                f"declared digest {record.content_digest[:12]} does not match content {digest[:12]}"
            )
        if record.doc_id != digest:
            raise IntegrityError("doc_id must equal the content digest")
        with self._lock:
            existing = self._db.execute(
                "SELECT 1 FROM documents WHERE doc_id=?", (record.doc_id,)
            ).fetchone()
            if existing:
                return record.doc_id
            obj = self.root / "objects" / record.doc_id
            obj.write_bytes(raw_bytes)
            self._db.execute(
                "INSERT INTO documents (doc_id, status, record) VALUES (?,?,?)",
                (record.doc_id, record.status, json.dumps(asdict(record), ensure_ascii=False)),
            )
            self._db.commit()
            self._audit(f"doc:{record.doc_id}", None, record.status)
        return record.doc_id

    def get_document(self, doc_id: str) -> DocumentRecord:
        row = self._db.execute(
            "SELECT record FROM documents WHERE doc_id=?", (doc_id,)
        ).fetchone()
        if row is None:
            raise NotFoundError(f"unknown document {doc_id!r}")
        return DocumentRecord(**json.loads(row[0]))

    def get_object(self, doc_id: str) -> bytes:
        path = self.root / "objects" / doc_id
        if not path.exists():
            raise NotFoundError(f"no object for {doc_id!r}")
        return path.read_bytes()

    def list_documents(self, status: str | None = None, source_id: str | None = None) -> list[DocumentRecord]:
        rows = self._db.execute("SELECT record FROM documents ORDER BY doc_id").fetchall()
        docs = [DocumentRecord(**json.loads(r[0])) for r in rows]
        if status is not None:
            docs = [d for d in docs if d.status == status]
        if source_id is not None:
            docs = [d for d in docs if d.source_id == source_id]
        return docs

    def document_count(self) -> int:
        return self._db.execute("SELECT COUNT(*) FROM documents").fetchone()[0]

    def advance_status(self, doc_id: str, new_status: str) -> DocumentRecord:
        with self._lock:
            record = self.get_document(doc_id)
            allowed = STATUS_TRANSITIONS.get(record.status, set())
            if new_status not in allowed:
                raise StateError(
                    f"illegal transition {record.status} -> {new_status} for {doc_id[:12]}"
                )
            old = record.status
            record.status = new_status
            self._update_document(record)
            self._audit(f"doc:{doc_id}", old, new_status)
        return record

    def reset_for_refilter(self, doc_id: str) -> DocumentRecord:
        """Maintenance operation for keyword-list edits: put a filtered
        document back to ``converted`` so the filter can re-run. This is the
        only sanctioned move against the forward-only lifecycle and is
        audited like any other transition."""
        with self._lock:
            record = self.get_document(doc_id)
            if record.status not in ("filtered_out", "filtered_in"):
                raise StateError(f"cannot refilter a document at status {record.status!r}")
            old = record.status
            record.status = "converted"
            record.filter_report = None
            self._update_document(record)
            self._audit(f"doc:{doc_id}", old, "converted")
        return record

    def update_filter_report(self, doc_id: str, report: dict) -> DocumentRecord:
        with self._lock:
            record = self.get_document(doc_id)
            record.filter_report = report
            self._update_document(record)
        return record

    def _update_document(self, record: DocumentRecord):
        self._db.execute(
            "UPDATE documents SET status=?, record=? WHERE doc_id=?",
            (record.status, json.dumps(asdict(record), ensure_ascii=False), record.doc_id),
        )
        self._db.commit()

    # -- normalized text ---------------------------------------------------

    def put_text(self, doc_id: str, display_text: str, analysis_text: str):
        payload = {"display": display_text, "analysis": analysis_text}
        path = self.root / "texts" / f"{doc_id}.json"
        with self._lock:
            path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    def get_text(self, doc_id: str) -> tuple[str, str]:
        path = self.root / "texts" / f"{doc_id}.json"
        if not path.exists():
            raise NotFoundError(f"no converted text for {doc_id!r}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        return payload["display"], payload["analysis"]

    # -- sentences ---------------------------------------------------------

    def add_sentences(self, doc_id: str, records: list[SentenceRecord]):
        for pos, rec in enumerate(records):
            if rec.index != pos:
                raise IntegrityError("sentence indices must be contiguous from 0")
        with self._lock:
            for rec in records:
                payload = asdict(rec)
                payload["span"] = list(rec.span)
                self._db.execute(
                    "INSERT OR REPLACE INTO sentences (doc_id, idx, record) VALUES (?,?,?)",
                    (doc_id, rec.index, json.dumps(payload, ensure_ascii=False)),
                )
            self._db.commit()

    def get_sentences(self, doc_id: str) -> list[SentenceRecord]:
        rows = self._db.execute(
            "SELECT record FROM sentences WHERE doc_id=? ORDER BY idx", (doc_id,)
        ).fetchall()
        out = []
        for (raw,) in rows:
            payload = json.loads(raw)
            payload["span"] = tuple(payload["span"])
            payload["section_path"] = tuple(payload["section_path"])
            out.append(SentenceRecord(**payload))
        return out

    def iter_sentences(self, doc_ids: list[str] | None = None):
        if doc_ids is None:
            doc_ids = [d.doc_id for d in self.list_documents()]
        for doc_id in doc_ids:
            yield from self.get_sentences(doc_id)

    def get_sentence(self, doc_id: str, index: int) -> SentenceRecord:
        rows = self.get_sentences(doc_id)
        if not 0 <= index < len(rows):
            raise NotFoundError(f"no sentence {index} in {doc_id[:12]}")
        return rows[index]

    # -- labels ------------------------------------------------------------

    def add_pre_label(self, doc_id: str, index: int, kind: str, value: str,
                      score: float, rater_id: str = "system") -> LabelRecord:
        _validate_label(kind, value)
        with self._lock:
            self._db.execute(
                "INSERT OR IGNORE INTO labels "
                "(doc_id, idx, kind, value, provenance, rater_id, score, created_at) "
                "VALUES (?,?,?,?,?,?,?,?)",
                (doc_id, index, kind, value, "pre_labeled", rater_id, score, time.time()),
            )
            self._db.commit()
        return self.get_label(doc_id, index, kind, value)

    def add_gold_label(self, doc_id: str, index: int, kind: str, value: str,
                       rater_id: str) -> LabelRecord:
        _validate_label(kind, value)
        with self._lock:
            self._db.execute(
                "INSERT OR IGNORE INTO labels "
                "(doc_id, idx, kind, value, provenance, rater_id, score, created_at) "
                "VALUES (?,?,?,?,?,?,?,?)",
                (doc_id, index, kind, value, "gold", rater_id, None, time.time()),
            )
            self._db.commit()
        return self.get_label(doc_id, index, kind, value)

    def get_label(self, doc_id: str, index: int, kind: str, value: str) -> LabelRecord:
        row = self._db.execute(
            "SELECT doc_id, idx, kind, value, provenance, rater_id, score, created_at, "
            "decided_at, decided_by FROM labels WHERE doc_id=? AND idx=? AND kind=? AND value=?",
            (doc_id, index, kind, value),
        ).fetchone()
        if row is None:
            raise NotFoundError(f"no label ({doc_id[:12]}, {index}, {kind}, {value})")
        return self._label_from_row(row)

    @staticmethod
    def _label_from_row(row) -> LabelRecord:
        return LabelRecord(
            doc_id=row[0], index=row[1], kind=row[2], value=row[3], provenance=row[4],
            rater_id=row[5], score=row[6], created_at=row[7], decided_at=row[8],
            decided_by=row[9],
        )

    def record_decision(self, doc_id: str, index: int, kind: str, value: str,
                        decision: str, rater_id: str) -> LabelRecord:
        """Confirm or reject a pre-label; atomic compare-and-set on provenance."""
        if decision not in ("confirm", "reject"):
            raise InputError(f"decision must be confirm or reject, got {decision!r}")
        new_prov = "confirmed" if decision == "confirm" else "rejected"
        with self._lock:
            current = self.get_label(doc_id, index, kind, value)  # not-found propagates
            cur = self._db.execute(
                "UPDATE labels SET provenance=?, decided_at=?, decided_by=? "
                "WHERE doc_id=? AND idx=? AND kind=? AND value=? AND provenance='pre_labeled'",
                (new_prov, time.time(), rater_id, doc_id, index, kind, value),
            )
            self._db.commit()
            if cur.rowcount == 0:
                raise ConflictError(
                    f"label already decided: provenance={current.provenance}"
                )
            self._audit(f"label:{doc_id}:{index}:{kind}:{value}", "pre_labeled", new_prov)
        return self.get_label(doc_id, index, kind, value)

    def list_labels(self, kind: str | None = None, provenance: str | None = None,
                    value: str | None = None) -> list[LabelRecord]:
        query = ("SELECT doc_id, idx, kind, value, provenance, rater_id, score, created_at, "
                 "decided_at, decided_by FROM labels")
        clauses, params = [], []
        if kind is not None:
            clauses.append("kind=?")
            params.append(kind)
        if provenance is not None:
            clauses.append("provenance=?")
            params.append(provenance)
        if value is not None:
            clauses.append("value=?")
            params.append(value)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY doc_id, idx, kind, value"
        rows = self._db.execute(query, params).fetchall()
        return [self._label_from_row(r) for r in rows]

    def label_counts(self, kind: str) -> dict[str, dict[str, int]]:
        """Per-class counts keyed by value then provenance."""
        rows = self._db.execute(
            "SELECT value, provenance, COUNT(*) FROM labels WHERE kind=? "
            "GROUP BY value, provenance", (kind,)
        ).fetchall()
        out: dict[str, dict[str, int]] = {}
        for value, prov, n in rows:
            out.setdefault(value, {})[prov] = n
        return out

    # -- predictions -------------------------------------------------------

    def put_prediction(self, doc_id: str, index: int, kind: str, value: str, score: float):
        with self._lock:
            self._db.execute(
                "INSERT OR REPLACE INTO predictions (doc_id, idx, kind, value, score) "
                "VALUES (?,?,?,?,?)",
                (doc_id, index, kind, value, score),
            )
            self._db.commit()

    def get_predictions(self, doc_id: str, kind: str | None = None) -> list[tuple[int, str, str, float]]:
        query = "SELECT idx, kind, value, score FROM predictions WHERE doc_id=?"
        params: list = [doc_id]
        if kind is not None:
            query += " AND kind=?"
            params.append(kind)
        query += " ORDER BY idx, kind, value"
        return self._db.execute(query, params).fetchall()

    # -- run reports -------------------------------------------------------

    def save_run(self, report: dict):
        path = self.root / "runs" / f"{report['run_id']}.json"
        path.write_text(json.dumps(report, ensure_ascii=False, indent=2), encoding="utf-8")

    def get_run(self, run_id: str) -> dict:
        path = self.root / "runs" / f"{run_id}.json"
        if not path.exists():
            raise NotFoundError(f"unknown run {run_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    # -- integrity ---------------------------------------------------------

    def state_digest(self) -> str:
        """Digest of all durable pipeline state (excludes run reports).

        Used to verify that re-running completed stages changes nothing.
        """
        h = hashlib.sha256()
        for obj in sorted((self.root / "objects").iterdir()):
            h.update(obj.name.encode())
            h.update(obj.read_bytes())
        for txt in sorted((self.root / "texts").iterdir()):
            h.update(txt.name.encode())
            h.update(txt.read_bytes())
        for table in ("documents", "sentences", "labels", "predictions", "fetch_state"):
            for row in self._db.execute(f"SELECT * FROM {table} ORDER BY 1, 2"):
                h.update(repr(row).encode())
        audit = self.root / "audit.log"
        if audit.exists():
            h.update(audit.read_bytes())
        kg = self.root / "kg.triples"
        if kg.exists():
            h.update(kg.read_bytes())
        return h.hexdigest()
