"""End-to-end orchestration: configuration, the engine, and pipeline runs.

The engine owns the store, keyword lists, query sets, gazetteer, knowledge
graph, and review queue, and exposes the operations the service and CLI
surface. A pipeline run executes the stages in order, advancing document
status; re-running completed stages is a no-op.

Without confirmed labels the classifier heads run in bootstrap mode: the
expert query sentences themselves act as class positives, and incentive
presence scores by max similarity over all instrument queries.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from . import classify, ingest, keywords, labeling, linking, summarize
from .embedding import HashedTfidfEmbedder, cosine
from .errors import BusyError, InputError, NotFoundError, PlanError
from .kg import KnowledgeGraph, load_graph, save_graph
from .keywords import KeywordLists, fine_filter, gross_filter, parse_keyword_file
from .labeling import QuerySet, ReviewQueue, parse_query_file, rank_candidates
from .linking import Gazetteer, parse_gazetteer
from .preprocess import (analysis_form, convert_to_text, extract_outline, load_langpack,
                         normalize, section_paths, split_sentences)
from .store import (CorpusStore, INSTRUMENT_CLASSES, STATUS_ORDER, SentenceRecord)

STAGES = ["fetch", "convert", "filter", "sentence", "classify", "link"]

# status a document must have reached before a stage can consume it
_STAGE_INPUT = {
    "convert": "fetched",
    "filter": "converted",
    "sentence": "filtered_in",
    "classify": "sentenced",
    "link": "classified",
}

_TERMINAL = {"filtered_out", "linked"}


@dataclass
class EngineConfig:
    store_path: Path
    keyword_files: list[Path] = field(default_factory=list)
    query_file: Path | None = None
    gazetteer_file: Path | None = None
    langpacks_dir: Path | None = None
    theta_pre: float = labeling.DEFAULT_THETA_PRE
    theta_presence: float = 0.35
    theta_topic: float = 0.30
    beta: float = 2.0
    dim: int = 4096
    top_k: int = 50
    summary_words: int = 60
    lease_seconds: float = 300.0
    auth_token: str | None = None


class Engine:
    def __init__(self, config: EngineConfig):
        self.config = config
        self.store = CorpusStore(config.store_path)
        self.review_queue = ReviewQueue(self.store, lease_seconds=config.lease_seconds)
        self._run_lock = threading.Lock()
        self._kg: KnowledgeGraph | None = None

        self.keyword_lists: list[KeywordLists] = [
            parse_keyword_file(p) for p in config.keyword_files
        ]
        self.query_sets: list[QuerySet] = (
            parse_query_file(config.query_file) if config.query_file else []
        )
        self.gazetteer: Gazetteer = (
            parse_gazetteer(config.gazetteer_file) if config.gazetteer_file else Gazetteer()
        )

    # -- shared resources --------------------------------------------------

    @property
    def kg_path(self) -> Path:
        return self.store.root / "kg.triples"

    @property
    def kg(self) -> KnowledgeGraph:
        if self._kg is None:
            self._kg = load_graph(self.kg_path)
        return self._kg

    def langpack(self, language: str):
        return load_langpack(language, self.config.langpacks_dir)

    def keyword_lists_for(self, language: str) -> KeywordLists | None:
        name = language.split("-")[0].lower()
        for lists in self.keyword_lists:
            if lists.language.split("-")[0].lower() == name:
                return lists
        return self.keyword_lists[0] if self.keyword_lists else None

    def _corpus_doc_ids(self) -> list[str]:
        """Documents whose sentences define the embedding corpus."""
        keep = {"sentenced", "classified", "linked"}
        return [d.doc_id for d in self.store.list_documents() if d.status in keep]

    def corpus_embedder(self) -> HashedTfidfEmbedder:
        embedder = HashedTfidfEmbedder(dim=self.config.dim)
        texts = [s.analysis_text for s in self.store.iter_sentences(self._corpus_doc_ids())]
        embedder.fit(texts)
        return embedder

    def instrument_query_sets(self) -> list[QuerySet]:
        return [q for q in self.query_sets if q.class_name in INSTRUMENT_CLASSES]

    def topic_query_sets(self) -> list[QuerySet]:
        reserved = set(INSTRUMENT_CLASSES) | {"incentive_presence"}
        return [q for q in self.query_sets if q.class_name not in reserved]

    def _normalized_queries(self, query_sets: list[QuerySet]) -> list[tuple[str, str]]:
        out = []
        for qs in query_sets:
            config = self.langpack(qs.language)
            for q in qs.queries:
                out.append((qs.class_name, analysis_form(q.text, config)))
        return out

    # -- pipeline ----------------------------------------------------------

    def run_pipeline(self, scope: str = "all", stages: list[str] | None = None) -> dict:
        requested = list(stages) if stages else list(STAGES)
        for stage in requested:
            if stage not in STAGES:
                raise InputError(f"unknown stage {stage!r}")
        requested = [s for s in STAGES if s in requested]

        if not self._run_lock.acquire(blocking=False):
            raise BusyError("a pipeline run is already in progress")
        try:
            self._check_plan(scope, requested)
            report = {
                "run_id": uuid.uuid4().hex[:12],
                "scope": scope,
                "stages": [],
                "errors": [],
            }
            for stage in requested:
                started = time.monotonic()
                counts = getattr(self, f"_stage_{stage}")(scope, report["errors"])
                report["stages"].append({
                    "stage": stage,
                    "counts": counts,
                    "duration_s": round(time.monotonic() - started, 6),
                })
            self.store.save_run(report)
            return report
        finally:
            self._run_lock.release()

    def _scope_docs(self, scope: str, status: str | None = None):
        if scope == "all":
            docs = self.store.list_documents(status=status)
        elif scope.startswith("source:"):
            docs = self.store.list_documents(status=status, source_id=scope[7:])
        elif scope.startswith("doc:"):
            docs = [d for d in self.store.list_documents(status=status)
                    if d.doc_id == scope[4:]]
        else:
            raise InputError(f"bad scope {scope!r}; use all, source:<id>, or doc:<id>")
        return docs

    def _check_plan(self, scope: str, requested: list[str]):
        """Fail before any work if a stage's input cannot exist."""
        rank = {s: i for i, s in enumerate(STATUS_ORDER)}
        selected = set(requested)
        for stage in requested:
            needed = _STAGE_INPUT.get(stage)
            if needed is None:
                continue
            producer = STAGES[STAGES.index(stage) - 1]
            if producer in selected:
                continue
            for doc in self._scope_docs(scope):
                if doc.status in _TERMINAL:
                    continue
                if rank[doc.status] < rank[needed]:
                    raise PlanError(
                        f"stage {stage!r} needs documents at status {needed!r}, "
                        f"but {doc.doc_id[:12]} is {doc.status!r}")

    # -- stages ------------------------------------------------------------

    def _stage_fetch(self, scope: str, errors: list) -> dict:
        fetched = 0
        sources = self.store.list_sources()
        if scope.startswith("source:"):
            sources = [s for s in sources if s.source_id == scope[7:]]
        for spec in sources:
            if not spec.enabled:
                continue
            try:
                results = ingest.fetch_once(self.store, spec.source_id)
                fetched += sum(1 for r in results if r.changed)
            except Exception as exc:
                errors.append({"stage": "fetch", "source": spec.source_id, "error": str(exc)})
        return {"fetched": fetched}

    def _stage_convert(self, scope: str, errors: list) -> dict:
        converted = 0
        for doc in self._scope_docs(scope, status="fetched"):
            try:
                raw = self.store.get_object(doc.doc_id)
                text = convert_to_text(raw, doc.raw_format)
                config = self.langpack(doc.language)
                display, analysis = normalize(text, config)
                self.store.put_text(doc.doc_id, display, analysis)
                self.store.advance_status(doc.doc_id, "converted")
                converted += 1
            except Exception as exc:
                errors.append({"stage": "convert", "doc": doc.doc_id, "error": str(exc)})
        return {"converted": converted}

    def _stage_filter(self, scope: str, errors: list) -> dict:
        kept = dropped = 0
        for doc in self._scope_docs(scope, status="converted"):
            lists = self.keyword_lists_for(doc.language)
            if lists is None:
                errors.append({"stage": "filter", "doc": doc.doc_id,
                               "error": "no keyword lists configured"})
                continue
            _, analysis = self.store.get_text(doc.doc_id)
            report = gross_filter(analysis + "\n" + doc.title.lower(), lists)
            self.store.update_filter_report(doc.doc_id, report.to_dict())
            if report.keep:
                self.store.advance_status(doc.doc_id, "filtered_in")
                kept += 1
            else:
                self.store.advance_status(doc.doc_id, "filtered_out")
                dropped += 1
        return {"kept": kept, "dropped": dropped}

    def _stage_sentence(self, scope: str, errors: list) -> dict:
        total = 0
        for doc in self._scope_docs(scope, status="filtered_in"):
            config = self.langpack(doc.language)
            display, _ = self.store.get_text(doc.doc_id)
            fragments = split_sentences(display, config)
            outline = extract_outline(display, config)
            paths = section_paths(outline, len(fragments))
            records = [
                SentenceRecord(
                    doc_id=doc.doc_id, index=i,
                    display_text=frag.text,
                    analysis_text=analysis_form(frag.text, config),
                    span=frag.span, section_path=paths[i],
                )
                for i, frag in enumerate(fragments)
            ]
            self.store.add_sentences(doc.doc_id, records)
            self.store.advance_status(doc.doc_id, "sentenced")
            total += len(records)
        return {"sentences": total}

    def _stage_classify(self, scope: str, errors: list) -> dict:
        docs = self._scope_docs(scope, status="sentenced")
        if not docs:
            return {"pre_labels": 0, "predictions": 0}
        embedder = self.corpus_embedder()
        sentences = [s for d in docs for s in self.store.get_sentences(d.doc_id)]

        pre_labels = 0
        for qs in self.query_sets:
            config = self.langpack(qs.language)
            candidates = rank_candidates(
                sentences, embedder, qs,
                top_k=self.config.top_k, theta_pre=self.config.theta_pre,
                normalizer=lambda t, c=config: analysis_form(t, c),
                store=self.store,
            )
            pre_labels += len(candidates)

        instrument_examples = self._normalized_queries(self.instrument_query_sets())
        topic_examples = self._normalized_queries(self.topic_query_sets())
        instrument_model = (
            classify.train("instrument_bootstrap", instrument_examples, embedder,
                           theta=self.config.theta_presence)
            if instrument_examples else None
        )
        topic_model = (
            classify.train("topic_bootstrap", topic_examples, embedder,
                           theta=self.config.theta_topic)
            if topic_examples else None
        )
        presence_queries = [
            embedder.embed(text) for _, text in instrument_examples
        ]

        predictions = 0
        for sent in sentences:
            vec = embedder.embed(sent.analysis_text)
            present, score = classify.predict_presence(
                vec, query_vectors=presence_queries, theta=self.config.theta_presence)
            if present:
                self.store.put_prediction(sent.doc_id, sent.index,
                                          "incentive_presence", "true", score)
                predictions += 1
                if instrument_model is not None:
                    pred = instrument_model.predict(vec)
                    self.store.put_prediction(sent.doc_id, sent.index,
                                              "instrument", pred.value, pred.score)
                    predictions += 1
            if topic_model is not None:
                for topic, tscore in topic_model.predict_multilabel(vec):
                    self.store.put_prediction(sent.doc_id, sent.index, "topic", topic, tscore)
                    predictions += 1
        for doc in docs:
            self.store.advance_status(doc.doc_id, "classified")
        return {"pre_labels": pre_labels, "predictions": predictions}

    def _stage_link(self, scope: str, errors: list) -> dict:
        docs = self._scope_docs(scope, status="classified")
        n_links = n_triples = 0
        for doc in docs:
            sentences = self.store.get_sentences(doc.doc_id)
            config = self.langpack(doc.language)
            display, _ = self.store.get_text(doc.doc_id)
            outline = extract_outline(display, config)

            presence = {idx for idx, _, value, _ in
                        self.store.get_predictions(doc.doc_id, "incentive_presence")}
            instrument_preds = {
                idx: (value, score) for idx, _, value, score in
                self.store.get_predictions(doc.doc_id, "instrument")
            }
            sentence_topics: dict[int, set[str]] = {}
            topic_prov: dict[str, list[int]] = {}
            for idx, _, topic, _ in self.store.get_predictions(doc.doc_id, "topic"):
                sentence_topics.setdefault(idx, set()).add(topic)
                topic_prov.setdefault(topic, []).append(idx)

            links = linking.link_incentives(sorted(presence), sentence_topics)
            n_links += len(links)
            definitions = linking.extract_definitions(sentences, outline, doc.language)
            entities, warn = linking.extract_entities(sentences, self.gazetteer)
            for w in warn:
                errors.append({"stage": "link", "doc": doc.doc_id, "error": w})
            doc_topics, _ = fine_filter(sentence_topics)

            level = None
            try:
                level = self.store.get_source(doc.source_id).level
            except NotFoundError:
                pass
            objectives = (doc.filter_report or {}).get("matched_in", [])

            drafts = linking.make_triples(
                doc, links=links, entities=entities, definitions=definitions,
                doc_topics=doc_topics, topic_provenance=topic_prov,
                instrument_predictions=instrument_preds,
                jurisdiction_level=level, objectives=objectives,
            )
            for draft in drafts:
                self.kg.register_entity(draft.subject, draft.subject_class)
                if draft.object_class is not None:
                    self.kg.register_entity(draft.obj, draft.object_class)
                self.kg.assert_triple(draft.subject, draft.predicate, draft.obj,
                                      draft.provenance, draft.confidence)
            n_triples += len(drafts)
            self.store.advance_status(doc.doc_id, "linked")
        if docs:
            save_graph(self.kg, self.kg_path)
        return {"links": n_links, "triples": n_triples}

    # -- search and summaries ----------------------------------------------

    def search(self, query: str, top_k: int = 10) -> list[dict]:
        if not query.strip():
            raise InputError("empty query")
        if top_k <= 0:
            return []
        embedder = self.corpus_embedder()
        config = self.langpack("en")
        qvec = embedder.embed(analysis_form(query, config))
        scored = []
        for sent in self.store.iter_sentences(self._corpus_doc_ids()):
            score = cosine(embedder.embed(sent.analysis_text), qvec)
            scored.append((score, sent))
        scored.sort(key=lambda t: (-t[0], t[1].doc_id, t[1].index))
        out = []
        for score, sent in scored[:top_k]:
            doc = self.store.get_document(sent.doc_id)
            out.append({
                "doc_id": sent.doc_id,
                "index": sent.index,
                "score": score,
                "text": sent.display_text,
                "section_path": list(sent.section_path),
                "doc_title": doc.title,
                "language": doc.language,
            })
        return out

    def summarize_document(self, doc_id: str, max_words: int | None = None) -> dict:
        doc = self.store.get_document(doc_id)
        sentences = self.store.get_sentences(doc_id)
        if not sentences:
            raise InputError(f"document {doc_id[:12]} has no sentences")
        config = self.langpack(doc.language)
        display, _ = self.store.get_text(doc_id)
        outline = extract_outline(display, config)
        ranges = [leaf.sentence_range for leaf in outline.leaves()]
        result = summarize.summarize_with_outline(
            [s.display_text for s in sentences], ranges,
            max_words or self.config.summary_words,
            stopwords=config.stopwords, doc_id=doc_id,
        )
        return {
            "doc_id": doc_id,
            "method": result.method,
            "word_budget": result.word_budget,
            "sentences": [
                {"index": i, "text": sentences[i].display_text} for i in result.selected
            ],
        }
