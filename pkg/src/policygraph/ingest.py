"""Source registry, fetch adapters, change detection, and the scheduler.

Change detection is digest-based: a locator's payload is stored only when
its content digest has not been seen before for that locator, which makes
re-crawls idempotent. The filesystem adapter doubles as the test fixture
adapter; a generic HTTP adapter covers remote sources.
"""

from __future__ import annotations

import json
import time
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

from .errors import FetchError, StateError
from .store import CorpusStore, DocumentRecord, SourceSpec, content_id

_FORMAT_BY_SUFFIX = {
    ".html": "html", ".htm": "html",
    ".txt": "txt",
    ".pdf": "pdf_text",
}


@dataclass
class FetchResult:
    source_id: str
    locator: str
    raw_bytes: bytes
    detected_format: str
    fetched_at: float
    changed: bool
    doc_id: str | None = None
    metadata: dict | None = None


def _detect_format(name: str, hint: str) -> str:
    return _FORMAT_BY_SUFFIX.get(Path(name).suffix.lower(), hint)


def _fs_payloads(spec: SourceSpec):
    """Filesystem/fixture adapter: a directory of documents or one file.

    A sidecar ``<name>.meta.json`` next to a document supplies title,
    language, issuing body, and publication date.
    """
    base = spec.base_locator
    if base.startswith("file://"):
        base = base[len("file://"):]
    root = Path(base)
    if not root.exists():
        raise FetchError(f"source path {root} does not exist", spec.source_id)
    paths = sorted(p for p in root.iterdir() if p.is_file()) if root.is_dir() else [root]
    for path in paths:
        if path.name.endswith(".meta.json"):
            continue
        meta_path = path.with_name(path.name + ".meta.json")
        metadata = {}
        if meta_path.exists():
            metadata = json.loads(meta_path.read_text(encoding="utf-8"))
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise FetchError(f"cannot read {path}: {exc}", spec.source_id)
        yield str(path), raw, _detect_format(path.name, spec.format_hint), metadata


def _http_payloads(spec: SourceSpec):
    try:
        with urllib.request.urlopen(spec.base_locator, timeout=30) as response:
            raw = response.read()
    except OSError as exc:
        raise FetchError(f"fetch failed for {spec.base_locator}: {exc}", spec.source_id)
    yield spec.base_locator, raw, _detect_format(spec.base_locator, spec.format_hint), {}


def _payloads(spec: SourceSpec):
    scheme = urlparse(spec.base_locator).scheme
    if scheme in ("http", "https"):
        return _http_payloads(spec)
    return _fs_payloads(spec)


def register_source(store: CorpusStore, spec: SourceSpec) -> str:
    return store.add_source(spec)


def fetch_once(store: CorpusStore, source_id: str, now: float | None = None) -> list[FetchResult]:
    """Fetch every payload of a source; store only changed content."""
    spec = store.get_source(source_id)
    if not spec.enabled:
        raise StateError(f"source {source_id!r} is disabled")
    now = now if now is not None else time.time()
    results = []
    for locator, raw, fmt, metadata in _payloads(spec):
        digest = content_id(raw)
        changed = digest not in store.seen_digests(source_id, locator)
        result = FetchResult(
            source_id=source_id, locator=locator, raw_bytes=raw,
            detected_format=fmt, fetched_at=now, changed=changed, metadata=metadata,
        )
        if changed:
            record = DocumentRecord(
                doc_id=digest,
                source_id=source_id,
                title=metadata.get("title", Path(locator).stem),
                content_digest=digest,
                raw_format=fmt,
                issuing_body=metadata.get("issuing_body", ""),
                publication_date=metadata.get("publication_date"),
                language=metadata.get("language", "en"),
                fetched_at=now,
                status="fetched",
            )
            result.doc_id = store.put_document(record, raw)
            store.record_seen_digest(source_id, locator, digest)
        else:
            result.doc_id = digest
        results.append(result)
    return results


@dataclass
class TickOutcome:
    source_id: str
    fetched: int = 0
    error: str | None = None


def schedule_tick(store: CorpusStore, now: float | None = None) -> list[TickOutcome]:
    """Fetch exactly the enabled sources whose interval has elapsed.

    Per-source failures are isolated and reported in the outcome list.
    """
    now = now if now is not None else time.time()
    outcomes = []
    for spec in store.list_sources():
        if not spec.enabled:
            continue
        last = store.last_fetch(spec.source_id)
        if last is not None and last + spec.fetch_interval > now:
            continue
        outcome = TickOutcome(source_id=spec.source_id)
        try:
            results = fetch_once(store, spec.source_id, now=now)
            outcome.fetched = sum(1 for r in results if r.changed)
        except Exception as exc:
            outcome.error = str(exc)
        store.set_last_fetch(spec.source_id, now)
        outcomes.append(outcome)
    return outcomes
