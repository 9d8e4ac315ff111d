"""Incentive-topic linking, rule-based extraction, and triple assembly.

Linking follows minimum sentence-index distance: an incentive sentence is
linked to the nearest topic-tagged sentence, ties preferring the preceding
sentence. Distance is the index difference, so adjacent sentences are at
distance 1, and an incentive sentence that carries a topic tag itself links
to its own topics at distance 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .preprocess import NormalizationConfig, OutlineNode, fold_accents
from .store import DocumentRecord, SentenceRecord

ENTITY_CLASSES = (
    "government_agency", "program", "target_group", "location", "person", "organization",
)


@dataclass
class IncentiveTopicLink:
    incentive_index: int
    topic_index: int | None
    topics: tuple[str, ...]
    distance: int | None
    tie_flag: bool = False
    conflict_flag: bool = False
    needs_review: bool = False


def link_incentives(incentive_indices: list[int],
                    topic_assignments: dict[int, set[str]]) -> list[IncentiveTopicLink]:
    """Link each incentive sentence to its closest topic sentence.

    Equal-distance ties resolve to the preceding sentence, then smaller
    index, with the tie flag set; a chosen sentence carrying several topics
    attaches all of them with the conflict flag set. Documents without any
    topic sentence emit unlinked entries marked for review.
    """
    topic_sentences = sorted(i for i, t in topic_assignments.items() if t)
    links = []
    for i in sorted(incentive_indices):
        if not topic_sentences:
            links.append(IncentiveTopicLink(
                incentive_index=i, topic_index=None, topics=(),
                distance=None, needs_review=True,
            ))
            continue
        best = min(topic_sentences, key=lambda j: (abs(i - j), j >= i, j))
        dist = abs(i - best)
        tie = sum(1 for j in topic_sentences if abs(i - j) == dist) > 1
        topics = tuple(sorted(topic_assignments[best]))
        links.append(IncentiveTopicLink(
            incentive_index=i, topic_index=best, topics=topics, distance=dist,
            tie_flag=tie, conflict_flag=len(topics) > 1,
        ))
    return links


# -- definition extraction -------------------------------------------------

@dataclass
class Definition:
    term: str
    definition: str
    doc_id: str
    index: int


_EN_DEF_RE = re.compile(
    r"[\"“'‘]([^\"“”'‘’]+)[\"”'’]\s+"
    r"(?:shall mean|means)\s+(.+)", re.IGNORECASE)
_ES_DEF_RE = re.compile(
    r"se entiende(?:r[aá])? por\s+(.+?)\s+"
    r"(?:la|el|los|las|lo|un|una|aquel|aquella|toda|todo)\b\s*(.+)", re.IGNORECASE)


def extract_definitions(sentences: list[SentenceRecord], outline: OutlineNode | None,
                        language: str = "en") -> list[Definition]:
    """Rule-based term definitions; searched in the first outline section
    when an outline exists, otherwise the whole document."""
    scope = sentences
    if outline is not None and outline.children:
        lo, hi = outline.children[0].sentence_range
        scope = sentences[lo:hi]
    pattern = _ES_DEF_RE if language.startswith("es") else _EN_DEF_RE
    out = []
    for sent in scope:
        match = pattern.search(sent.display_text)
        if match:
            term = match.group(1).strip().strip(".,;")
            tail = match.group(2).strip().rstrip(".")
            if term:
                out.append(Definition(term=term, definition=tail,
                                      doc_id=sent.doc_id, index=sent.index))
    return out


# -- entity extraction -----------------------------------------------------

@dataclass
class ExtractedEntity:
    surface: str
    entity_class: str
    doc_id: str
    index: int
    span: tuple[int, int]
    method: str  # rule | gazetteer | provider
    canonical: str = ""


@dataclass
class Gazetteer:
    # class -> canonical -> aliases (folded lowercase)
    entries: dict[str, dict[str, list[str]]] = field(default_factory=dict)

    def add(self, entity_class: str, canonical: str, aliases: list[str] | None = None):
        if entity_class not in ENTITY_CLASSES:
            raise InputError(f"unknown entity class {entity_class!r}")
        folded = [fold_accents(a.lower()) for a in (aliases or [])]
        canon_folded = fold_accents(canonical.lower())
        if canon_folded not in folded:
            folded.append(canon_folded)
        self.entries.setdefault(entity_class, {})[canonical] = folded

    def alias_index(self) -> list[tuple[str, str, str]]:
        """(folded alias, class, canonical), longest aliases first."""
        out = []
        for cls, by_canon in self.entries.items():
            for canonical, aliases in by_canon.items():
                for alias in aliases:
                    out.append((alias, cls, canonical))
        out.sort(key=lambda t: (-len(t[0]), t[0]))
        return out


def parse_gazetteer(path: str | Path) -> Gazetteer:
    """Tab-separated gazetteer: class <tab> canonical <tab> comma-separated aliases."""
    gaz = Gazetteer()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise InputError(f"gazetteer line {lineno}: need class<TAB>canonical")
        cls, canonical = parts[0].strip(), parts[1].strip()
        aliases = [a.strip() for a in parts[2].split(",")] if len(parts) > 2 else []
        gaz.add(cls, canonical, [a for a in aliases if a])
    return gaz


_ACRONYM_PROGRAM_RE = re.compile(r"\(([A-Z]{2,8})\)")
_CAP_SEQ_RE = re.compile(r"\b(?:[A-ZÁÉÍÓÚÑÜ][\wáéíóúñü]+\s+){1,5}[A-ZÁÉÍÓÚÑÜ][\wáéíóúñü]+\b")


def _gazetteer_matches(sent: SentenceRecord, gazetteer: Gazetteer) -> list[ExtractedEntity]:
    folded = fold_accents(sent.display_text.lower())
    taken: list[tuple[int, int]] = []
    out = []
    for alias, cls, canonical in gazetteer.alias_index():
        for match in re.finditer(r"(?<!\w)" + re.escape(alias) + r"(?!\w)", folded):
            span = (match.start(), match.end())
            if any(span[0] < e and s < span[1] for s, e in taken):
                continue  # longest match wins inside one method
            taken.append(span)
            out.append(ExtractedEntity(
                surface=sent.display_text[span[0]:span[1]],
                entity_class=cls, doc_id=sent.doc_id, index=sent.index,
                span=span, method="gazetteer", canonical=canonical,
            ))
    out.sort(key=lambda e: e.span)
    return out


def _rule_matches(sent: SentenceRecord) -> list[ExtractedEntity]:
    text = sent.display_text
    taken: list[tuple[int, int]] = []
    out = []

    # parenthesized acronym whose letters match the initials of the
    # preceding words -> program entity, e.g. "stewardship incentive
    # program (SIP)"
    tokens = [(m.start(), m.end(), m.group(0)) for m in re.finditer(r"[\wáéíóúñü]+", text)]
    for match in _ACRONYM_PROGRAM_RE.finditer(text):
        acro = match.group(1)
        preceding = [t for t in tokens if t[1] <= match.start()]
        k = len(acro)
        if len(preceding) < k:
            continue
        head = preceding[-k:]
        initials = "".join(w[2][0] for w in head).lower()
        if initials != acro.lower():
            continue
        span = (head[0][0], match.end())
        taken.append(span)
        out.append(ExtractedEntity(
            surface=text[span[0]:span[1]], entity_class="program",
            doc_id=sent.doc_id, index=sent.index, span=span, method="rule",
        ))

    # capitalized multi-word sequences -> organization candidates
    for match in _CAP_SEQ_RE.finditer(text):
        if match.start() == 0:
            continue  # skip sentence-initial capitalization
        span = (match.start(), match.end())
        if any(span[0] < e and s < span[1] for s, e in taken):
            continue
        taken.append(span)
        out.append(ExtractedEntity(
            surface=match.group(0), entity_class="organization",
            doc_id=sent.doc_id, index=sent.index, span=span, method="rule",
        ))
    out.sort(key=lambda e: e.span)
    return out


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def extract_entities(sentences: list[SentenceRecord], gazetteer: Gazetteer,
                     provider=None) -> tuple[list[ExtractedEntity], list[str]]:
    """Gazetteer (longest match) + capitalization/acronym rules, with
    optional provider results taking precedence on span overlap.

    Returns (entities, warnings); a provider failure degrades to the
    built-in output with a warning.
    """
    warnings: list[str] = []
    provider_entities: dict[int, list[ExtractedEntity]] = {}
    if provider is not None:
        try:
            for ent in provider(sentences):
                provider_entities.setdefault(ent.index, []).append(ent)
        except Exception as exc:
            warnings.append(f"NER provider failed, using rule+gazetteer only: {exc}")
            provider_entities = {}

    out: list[ExtractedEntity] = []
    for sent in sentences:
        from_provider = provider_entities.get(sent.index, [])
        gaz = _gazetteer_matches(sent, gazetteer)
        rules = _rule_matches(sent)
        merged = list(from_provider)
        for ent in gaz:
            if not any(_overlaps(ent.span, p.span) for p in merged):
                merged.append(ent)
        for ent in rules:
            if not any(_overlaps(ent.span, p.span) for p in merged):
                merged.append(ent)
        merged.sort(key=lambda e: e.span)
        out.extend(merged)
    return out, warnings


# -- triple assembly -------------------------------------------------------

@dataclass
class TripleDraft:
    subject: str
    subject_class: str
    predicate: str
    obj: str
    object_class: str | None  # None for literals
    provenance: list[tuple[str, int]]
    confidence: float = 1.0


_ENTITY_TO_RANGE = {
    "government_agency": "GovernmentAgency",
    "organization": "GovernmentAgency",
    "program": "PolicyInstrument",
    "target_group": "TargetGroup",
    "location": "Location",
}


def make_triples(doc: DocumentRecord, *,
                 links: list[IncentiveTopicLink],
                 entities: list[ExtractedEntity],
                 definitions: list[Definition],
                 doc_topics: set[str],
                 topic_provenance: dict[str, list[int]] | None = None,
                 instrument_predictions: dict[int, tuple[str, float]] | None = None,
                 jurisdiction_level: str | None = None,
                 objectives: list[str] = ()) -> list[TripleDraft]:
    """Assemble ontology-typed triples from whatever evidence exists.

    Partial evidence yields fewer triples; every triple carries
    sentence-level provenance (metadata-derived triples reference
    sentence 0 when the document has sentences).
    """
    policy = doc.title or doc.doc_id
    triples: list[TripleDraft] = []
    meta_prov = [(doc.doc_id, 0)]
    instrument_predictions = instrument_predictions or {}
    topic_provenance = topic_provenance or {}

    if doc.issuing_body:
        triples.append(TripleDraft(policy, "Policy", "issued_by", doc.issuing_body,
                                   "GovernmentAgency", meta_prov))
    if jurisdiction_level:
        triples.append(TripleDraft(policy, "Policy", "has_scope", jurisdiction_level,
                                   None, meta_prov))
    for objective in objectives:
        triples.append(TripleDraft(policy, "Policy", "has_objective", objective,
                                   None, meta_prov))
    for topic in sorted(doc_topics):
        prov = [(doc.doc_id, i) for i in topic_provenance.get(topic, [0])]
        triples.append(TripleDraft(policy, "Policy", "has_topic", topic, None, prov))

    programs_by_sentence: dict[int, list[ExtractedEntity]] = {}
    targets_by_sentence: dict[int, list[ExtractedEntity]] = {}
    locations: list[ExtractedEntity] = []
    agencies: list[ExtractedEntity] = []
    for ent in entities:
        if ent.entity_class == "program":
            programs_by_sentence.setdefault(ent.index, []).append(ent)
        elif ent.entity_class == "target_group":
            targets_by_sentence.setdefault(ent.index, []).append(ent)
        elif ent.entity_class == "location":
            locations.append(ent)
        elif ent.entity_class == "government_agency":
            agencies.append(ent)

    for ent in agencies:
        triples.append(TripleDraft(policy, "Policy", "issued_by",
                                   ent.canonical or ent.surface, "GovernmentAgency",
                                   [(doc.doc_id, ent.index)]))
    for ent in locations:
        triples.append(TripleDraft(policy, "Policy", "applies_in",
                                   ent.canonical or ent.surface, "Location",
                                   [(doc.doc_id, ent.index)]))

    # instrument instances: the program entity in the incentive sentence when
    # present, otherwise a synthesized per-sentence instance
    for idx, (cls, score) in sorted(instrument_predictions.items()):
        programs = programs_by_sentence.get(idx, [])
        if programs:
            instrument_id = programs[0].canonical or programs[0].surface
        else:
            instrument_id = f"{policy}#instrument-{idx}"
        prov = [(doc.doc_id, idx)]
        confidence = min(1.0, max(0.01, score))
        triples.append(TripleDraft(policy, "Policy", "has_instrument", instrument_id,
                                   "PolicyInstrument", prov, confidence))
        triples.append(TripleDraft(instrument_id, "PolicyInstrument", "instrument_type",
                                   cls, None, prov, confidence))
        for target in targets_by_sentence.get(idx, []):
            triples.append(TripleDraft(instrument_id, "PolicyInstrument", "targets",
                                       target.canonical or target.surface, "TargetGroup",
                                       [(doc.doc_id, target.index)]))

    # program/target pairs outside predicted incentive sentences still carry
    # a targets relation (recall-first: surfaced for review rather than dropped)
    for idx, programs in sorted(programs_by_sentence.items()):
        if idx in instrument_predictions:
            continue
        for target in targets_by_sentence.get(idx, []):
            instrument_id = programs[0].canonical or programs[0].surface
            triples.append(TripleDraft(instrument_id, "PolicyInstrument", "targets",
                                       target.canonical or target.surface, "TargetGroup",
                                       [(doc.doc_id, target.index)]))
    return triples
