"""Assisted labeling: query sets, similarity ranking, dedup, review queue,
training-set export, and inter-rater agreement.

Sentences are ranked by their best cosine similarity against expert-written
query sentences for a class; survivors above the pre-label threshold become
``pre_labeled`` records that an analyst confirms or rejects. Negative
examples come from explicit rejections only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from .embedding import EmbeddingVector, cosine
from .errors import ConfigError, ExportError, InputError, LeaseError, NotFoundError, UndefinedMetricError
from .store import CorpusStore, INSTRUMENT_CLASSES, SentenceRecord

NEAR_DUP_THRESHOLD = 0.98
DEFAULT_THETA_PRE = 0.35


@dataclass
class Query:
    query_id: str
    text: str
    origin: str = ""


@dataclass
class QuerySet:
    class_name: str
    language: str
    queries: list[Query]

    def validate(self):
        if not self.queries:
            raise ConfigError(f"query set for {self.class_name!r} is empty")
        for q in self.queries:
            if not q.text.strip():
                raise ConfigError(f"empty query text in {self.class_name!r}")


def parse_query_file(path: str | Path) -> list[QuerySet]:
    """Parse query set blocks: header line ``class language``, then one
    query per line with an optional origin note after a tab. Blocks are
    separated by blank lines."""
    blocks: list[QuerySet] = []
    current: QuerySet | None = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.rstrip()
        if not line.strip():
            current = None
            continue
        if line.startswith("#"):
            continue
        if current is None:
            parts = line.split()
            if len(parts) != 2:
                raise InputError(f"query block header must be 'class language': {line!r}")
            current = QuerySet(class_name=parts[0], language=parts[1], queries=[])
            blocks.append(current)
            continue
        text, _, origin = line.partition("\t")
        qid = f"{current.class_name}-{current.language}-{len(current.queries)}"
        current.queries.append(Query(query_id=qid, text=text.strip(), origin=origin.strip()))
    for block in blocks:
        block.validate()
    return blocks


@dataclass
class RankedCandidate:
    doc_id: str
    index: int
    class_name: str
    score: float
    best_query_id: str
    analysis_text: str
    rank: int = 0
    suppressed: list[tuple[str, int]] = field(default_factory=list)

    @property
    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.index)


def score_sentences(sentences: list[SentenceRecord], embeddings: list[EmbeddingVector],
                    query_set: QuerySet, query_embeddings: list[EmbeddingVector]) -> list[RankedCandidate]:
    """Max-cosine score of each sentence against the class's queries."""
    out = []
    for sent, vec in zip(sentences, embeddings):
        best_score, best_qid = 0.0, query_set.queries[0].query_id
        first = True
        for query, qvec in zip(query_set.queries, query_embeddings):
            s = cosine(vec, qvec)
            if first or s > best_score:
                best_score, best_qid = s, query.query_id
                first = False
        out.append(RankedCandidate(
            doc_id=sent.doc_id, index=sent.index, class_name=query_set.class_name,
            score=best_score, best_query_id=best_qid, analysis_text=sent.analysis_text,
        ))
    return out


def dedup(candidates: list[RankedCandidate],
          embeddings: dict[tuple[str, int], EmbeddingVector] | None = None,
          near_threshold: float = NEAR_DUP_THRESHOLD) -> list[RankedCandidate]:
    """Collapse exact duplicates (earliest in doc order survives) and group
    near-duplicates by cosine, keeping the highest-scored representative."""
    by_text: dict[str, RankedCandidate] = {}
    order = sorted(candidates, key=lambda c: c.ref)
    for cand in order:
        existing = by_text.get(cand.analysis_text)
        if existing is None:
            by_text[cand.analysis_text] = cand
        else:
            existing.suppressed.append(cand.ref)
    survivors = [c for c in candidates if by_text.get(c.analysis_text) is c]

    if embeddings is None:
        return survivors
    kept: list[RankedCandidate] = []
    for cand in sorted(survivors, key=lambda c: (-c.score, c.ref)):
        merged = False
        for rep in kept:
            if cosine(embeddings[cand.ref], embeddings[rep.ref]) >= near_threshold:
                rep.suppressed.append(cand.ref)
                rep.suppressed.extend(cand.suppressed)
                merged = True
                break
        if not merged:
            kept.append(cand)
    kept_set = {c.ref for c in kept}
    return [c for c in survivors if c.ref in kept_set]


def rank_candidates(sentences: list[SentenceRecord], embedder, query_set: QuerySet,
                    *, top_k: int, theta_pre: float = DEFAULT_THETA_PRE,
                    normalizer=None, store: CorpusStore | None = None) -> list[RankedCandidate]:
    """Rank corpus sentences against a class's queries.

    Candidates scoring at least ``theta_pre`` are deduplicated, sorted by
    score (ties by (doc_id, index) ascending), truncated to ``top_k``, and,
    when a store is given, written as pre-labeled records.
    """
    query_set.validate()
    normalizer = normalizer or (lambda t: t)
    query_texts = [normalizer(q.text) for q in query_set.queries]
    query_vecs = embedder.embed_batch(query_texts)
    sent_vecs = embedder.embed_batch([s.analysis_text for s in sentences])

    scored = score_sentences(sentences, sent_vecs, query_set, query_vecs)
    candidates = [c for c in scored if c.score >= theta_pre]
    vec_by_ref = {(s.doc_id, s.index): v for s, v in zip(sentences, sent_vecs)}
    candidates = dedup(candidates, vec_by_ref)
    candidates.sort(key=lambda c: (-c.score, c.ref))
    candidates = candidates[:top_k]
    for rank, cand in enumerate(candidates, 1):
        cand.rank = rank

    if store is not None:
        kind, value = _label_for_class(query_set.class_name)
        for cand in candidates:
            store.add_pre_label(cand.doc_id, cand.index, kind, value, cand.score)
    return candidates


def _label_for_class(class_name: str) -> tuple[str, str]:
    if class_name == "incentive_presence":
        return "incentive_presence", "true"
    if class_name in INSTRUMENT_CLASSES:
        return "instrument", class_name
    return "topic", class_name


# -- training-set export ---------------------------------------------------

def export_training_set(store: CorpusStore, kind: str) -> list[tuple[str, str, str, int, str]]:
    """Rows of (class, polarity, doc_id, index, text), deterministic order.

    Positives are confirmed labels, negatives explicit rejections. For the
    instrument kind every class must have at least one confirmed example.
    """
    labels = [l for l in store.list_labels(kind=kind)
              if l.provenance in ("confirmed", "rejected")]
    if kind == "instrument":
        confirmed_classes = {l.value for l in labels if l.provenance == "confirmed"}
        for cls in INSTRUMENT_CLASSES:
            if cls not in confirmed_classes:
                raise ExportError(f"no confirmed labels for class {cls!r}")
    elif not any(l.provenance == "confirmed" for l in labels):
        raise ExportError(f"no confirmed labels for kind {kind!r}")
    rows = []
    for label in sorted(labels, key=lambda l: (l.doc_id, l.index, l.value)):
        sent = store.get_sentence(label.doc_id, label.index)
        polarity = "pos" if label.provenance == "confirmed" else "neg"
        rows.append((label.value, polarity, label.doc_id, label.index, sent.display_text))
    return rows


def format_training_set(rows) -> str:
    return "".join(
        f"{cls}\t{pol}\t{doc}\t{idx}\t{text}\n" for cls, pol, doc, idx, text in rows
    )


# -- inter-rater reliability ----------------------------------------------

def kappa(rater_a: dict, rater_b: dict) -> float:
    """Cohen's kappa for two raters' binary decisions over the same items."""
    if set(rater_a) != set(rater_b):
        raise InputError("raters must have decided the same item set")
    if not rater_a:
        raise InputError("no decisions to compare")
    n = len(rater_a)
    agree = sum(1 for k in rater_a if bool(rater_a[k]) == bool(rater_b[k]))
    p_o = agree / n
    a_yes = sum(1 for v in rater_a.values() if v) / n
    b_yes = sum(1 for v in rater_b.values() if v) / n
    p_e = a_yes * b_yes + (1 - a_yes) * (1 - b_yes)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise UndefinedMetricError("kappa undefined: chance agreement is 1 with disagreements")
    return (p_o - p_e) / (1 - p_e)


def decisions_by_rater(store: CorpusStore, kind: str | None = None) -> dict[str, dict[str, bool]]:
    """Map rater_id -> {item_id: decision} from decided labels."""
    out: dict[str, dict[str, bool]] = {}
    for label in store.list_labels(kind=kind):
        if label.provenance not in ("confirmed", "rejected") or not label.decided_by:
            continue
        item_id = f"{label.doc_id}:{label.index}:{label.kind}:{label.value}"
        out.setdefault(label.decided_by, {})[item_id] = label.provenance == "confirmed"
    return out


def pairwise_kappa(store: CorpusStore, kind: str | None = None) -> list[dict]:
    """Kappa for every rater pair over their common item set."""
    by_rater = decisions_by_rater(store, kind)
    raters = sorted(by_rater)
    out = []
    for i, a in enumerate(raters):
        for b in raters[i + 1:]:
            common = set(by_rater[a]) & set(by_rater[b])
            if not common:
                continue
            da = {k: by_rater[a][k] for k in common}
            db = {k: by_rater[b][k] for k in common}
            try:
                value = kappa(da, db)
            except UndefinedMetricError:
                continue
            out.append({"rater_a": a, "rater_b": b, "items": len(common), "kappa": value})
    return out


# -- review queue ----------------------------------------------------------

class ReviewQueue:
    """Priority queue over undecided pre-labels with per-item leases.

    Priority is similarity score descending; an item is leased to one
    reviewer at a time and re-queued when the lease expires.
    """

    def __init__(self, store: CorpusStore, lease_seconds: float = 300.0, clock=time.time):
        self.store = store
        self.lease_seconds = lease_seconds
        self.clock = clock
        self._leases: dict[str, tuple[str, float]] = {}
        import threading
        self._lock = threading.Lock()

    @staticmethod
    def item_id(label) -> str:
        return f"{label.doc_id}:{label.index}:{label.kind}:{label.value}"

    @staticmethod
    def parse_item_id(item_id: str) -> tuple[str, int, str, str]:
        doc_id, index, kind, value = item_id.split(":", 3)
        return doc_id, int(index), kind, value

    def next(self, rater_id: str) -> dict | None:
        with self._lock:
            now = self.clock()
            self._leases = {k: v for k, v in self._leases.items() if v[1] > now}
            pending = self.store.list_labels(provenance="pre_labeled")
            pending.sort(key=lambda l: (-(l.score or 0.0), l.doc_id, l.index))
            for label in pending:
                iid = self.item_id(label)
                if iid in self._leases:
                    continue
                expiry = now + self.lease_seconds
                self._leases[iid] = (rater_id, expiry)
                return self._item_payload(label, expiry)
            return None

    def _item_payload(self, label, expiry: float) -> dict:
        sentences = self.store.get_sentences(label.doc_id)
        sent = sentences[label.index]
        lo = max(0, label.index - 2)
        hi = min(len(sentences), label.index + 3)
        context = [s.display_text for s in sentences[lo:hi]]
        doc = self.store.get_document(label.doc_id)
        return {
            "item_id": self.item_id(label),
            "sentence": sent.display_text,
            "context": context,
            "context_offset": label.index - lo,
            "kind": label.kind,
            "proposed_class": label.value,
            "score": label.score,
            "doc_title": doc.title,
            "language": doc.language,
            "lease_expiry": expiry,
        }

    def decide(self, item_id: str, decision: str, rater_id: str):
        with self._lock:
            now = self.clock()
            lease = self._leases.get(item_id)
            if lease is None or lease[1] <= now:
                self._leases.pop(item_id, None)
                raise LeaseError(f"no valid lease for {item_id}; item re-queued")
            holder, _ = lease
            if holder != rater_id:
                raise LeaseError(f"item {item_id} leased to another reviewer")
            doc_id, index, kind, value = self.parse_item_id(item_id)
            record = self.store.record_decision(doc_id, index, kind, value, decision, rater_id)
            del self._leases[item_id]
            return record

    def progress(self) -> dict:
        """Per-(kind, class) confirmed/rejected/pending counts."""
        out: dict[str, dict[str, int]] = {}
        for kind in ("incentive_presence", "instrument", "topic"):
            for value, counts in self.store.label_counts(kind).items():
                key = f"{kind}:{value}"
                out[key] = {
                    "confirmed": counts.get("confirmed", 0),
                    "rejected": counts.get("rejected", 0),
                    "pending": counts.get("pre_labeled", 0),
                    "gold": counts.get("gold", 0),
                }
        return out
