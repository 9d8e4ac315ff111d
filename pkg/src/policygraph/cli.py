"""Batch CLI mirroring the service endpoints for headless use."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import classify as classify_mod
from . import ingest as ingest_mod
from .errors import PolicyGraphError
from .labeling import export_training_set, format_training_set, pairwise_kappa
from .pipeline import Engine, EngineConfig, STAGES
from .store import SourceSpec


class _Group(click.Group):
    """Click group that renders engine errors as clean one-line failures."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PolicyGraphError as exc:
            raise click.ClickException(f"{exc.code}: {exc}")


def _engine(ctx) -> Engine:
    if ctx.obj.get("engine") is None:
        params = ctx.obj["params"]
        config = EngineConfig(
            store_path=Path(params["store"]),
            keyword_files=[Path(p) for p in params["keywords"]],
            query_file=Path(params["queries"]) if params["queries"] else None,
            gazetteer_file=Path(params["gazetteer"]) if params["gazetteer"] else None,
            theta_pre=params["theta_pre"],
            theta_presence=params["theta_presence"],
            theta_topic=params["theta_topic"],
            beta=params["beta"],
            auth_token=params["token"],
        )
        ctx.obj["engine"] = Engine(config)
    return ctx.obj["engine"]


def _emit(payload):
    click.echo(json.dumps(payload, ensure_ascii=False, indent=2, default=str))


@click.group(cls=_Group)
@click.option("--store", envvar="POLICYGRAPH_STORE", default="./pg-store",
              show_default=True, help="Store directory.")
@click.option("--keywords", multiple=True, envvar="POLICYGRAPH_KEYWORDS",
              help="Keyword list file (repeatable, one per language).")
@click.option("--queries", default=None, envvar="POLICYGRAPH_QUERIES",
              help="Query set file.")
@click.option("--gazetteer", default=None, envvar="POLICYGRAPH_GAZETTEER")
@click.option("--theta-pre", default=0.35, show_default=True)
@click.option("--theta-presence", default=0.35, show_default=True)
@click.option("--theta-topic", default=0.30, show_default=True)
@click.option("--beta", default=2.0, show_default=True)
@click.option("--token", default=None, envvar="POLICYGRAPH_TOKEN")
@click.pass_context
def main(ctx, **params):
    """Policy-document mining engine."""
    ctx.obj = {"engine": None, "params": params}


# -- ingest ---------------------------------------------------------------

@main.group()
def ingest():
    """Source registration and fetching."""


@ingest.command("register")
@click.option("--source-id", required=True)
@click.option("--locator", required=True)
@click.option("--country", default="US")
@click.option("--level", default="federal",
              type=click.Choice(["federal", "state", "municipal"]))
@click.option("--region", default="")
@click.option("--interval", default=86400.0, help="Fetch interval in seconds.")
@click.option("--format-hint", default="txt",
              type=click.Choice(["html", "pdf_text", "pdf_scan", "txt"]))
@click.option("--keyword-list", default="")
@click.pass_context
def ingest_register(ctx, source_id, locator, country, level, region, interval,
                    format_hint, keyword_list):
    engine = _engine(ctx)
    spec = SourceSpec(source_id=source_id, country=country, level=level,
                      region=region, base_locator=locator, fetch_interval=interval,
                      format_hint=format_hint, keyword_list_ref=keyword_list)
    _emit({"source_id": ingest_mod.register_source(engine.store, spec)})


@ingest.command("run")
@click.option("--source", "source_id", required=True)
@click.pass_context
def ingest_run(ctx, source_id):
    engine = _engine(ctx)
    results = ingest_mod.fetch_once(engine.store, source_id)
    _emit([{"locator": r.locator, "changed": r.changed, "doc_id": r.doc_id}
           for r in results])


@ingest.command("tick")
@click.pass_context
def ingest_tick(ctx):
    engine = _engine(ctx)
    outcomes = ingest_mod.schedule_tick(engine.store)
    _emit([{"source_id": o.source_id, "fetched": o.fetched, "error": o.error}
           for o in outcomes])


# -- preprocess / filter --------------------------------------------------

@main.group()
def preprocess():
    """Conversion, normalization, and sentence splitting."""


@preprocess.command("run")
@click.option("--doc", "doc_id", required=True)
@click.pass_context
def preprocess_run(ctx, doc_id):
    engine = _engine(ctx)
    _emit(engine.run_pipeline(scope=f"doc:{doc_id}", stages=["convert"]))


@preprocess.command("all")
@click.pass_context
def preprocess_all(ctx):
    engine = _engine(ctx)
    _emit(engine.run_pipeline(stages=["convert"]))


@main.group("filter")
def filter_group():
    """In/out-keyword filtering."""


@filter_group.command("run")
@click.pass_context
def filter_run(ctx):
    engine = _engine(ctx)
    _emit(engine.run_pipeline(stages=["filter"]))


@filter_group.command("rerun")
@click.pass_context
def filter_rerun(ctx):
    """Re-apply filters to already-filtered documents (after list edits)."""
    engine = _engine(ctx)
    reset = 0
    for doc in engine.store.list_documents():
        if doc.status in ("filtered_in", "filtered_out"):
            engine.store.reset_for_refilter(doc.doc_id)
            reset += 1
    report = engine.run_pipeline(stages=["filter"])
    _emit({"reset": reset, "report": report})


# -- pipeline / search ----------------------------------------------------

@main.group()
def pipeline():
    """End-to-end runs."""


@pipeline.command("run")
@click.option("--scope", default="all", show_default=True)
@click.option("--stages", default=None,
              help=f"Comma-separated subset of {','.join(STAGES)}.")
@click.pass_context
def pipeline_run(ctx, scope, stages):
    engine = _engine(ctx)
    stage_list = stages.split(",") if stages else None
    _emit(engine.run_pipeline(scope=scope, stages=stage_list))


@main.command()
@click.argument("query")
@click.option("--top-k", default=10, show_default=True)
@click.pass_context
def search(ctx, query, top_k):
    engine = _engine(ctx)
    _emit(engine.search(query, top_k))


# -- classify -------------------------------------------------------------

@main.group()
def classify():
    """Model training, prediction, and evaluation."""


@classify.command("train")
@click.option("--kind", required=True,
              type=click.Choice(["incentive_presence", "instrument", "topic"]))
@click.option("--out", "out_path", required=True)
@click.option("--theta", default=0.35, show_default=True)
@click.pass_context
def classify_train(ctx, kind, out_path, theta):
    """Train a centroid model from confirmed/rejected labels in the store."""
    engine = _engine(ctx)
    rows = export_training_set(engine.store, kind)
    embedder = engine.corpus_embedder()
    positives = []
    for cls, polarity, doc_id, index, _text in rows:
        if polarity == "pos":
            sent = engine.store.get_sentence(doc_id, index)
            positives.append((cls, sent.analysis_text))
    model = classify_mod.train(kind, positives, embedder, theta=theta)
    classify_mod.save_model(model, out_path)
    _emit({"kind": kind, "classes": model.classes, "epoch": model.epoch_id,
           "path": out_path})


@classify.command("predict")
@click.option("--model", "model_path", required=True)
@click.option("--doc", "doc_id", required=True)
@click.pass_context
def classify_predict(ctx, model_path, doc_id):
    engine = _engine(ctx)
    model = classify_mod.load_model(model_path)
    embedder = engine.corpus_embedder()
    model.check_epoch(embedder)
    out = []
    for sent in engine.store.get_sentences(doc_id):
        pred = model.predict(embedder.embed(sent.analysis_text))
        out.append({"index": sent.index, "class": pred.value,
                    "score": pred.score, "margin": pred.margin, "tie": pred.tie})
    _emit(out)


@classify.command("eval")
@click.option("--pairs", "pairs_path", required=True,
              help="TSV of item, predicted class, gold class.")
@click.option("--beta", default=2.0, show_default=True)
def classify_eval(pairs_path, beta):
    predictions, gold = {}, {}
    for line in Path(pairs_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        item, pred, g = line.split("\t")
        predictions[item], gold[item] = pred, g
    report = classify_mod.evaluate(predictions, gold, beta=beta)
    _emit({
        "beta": report.beta,
        "per_class": {cls: vars(m) for cls, m in report.per_class.items()},
        "macro_f1": report.macro_f1,
        "macro_f_beta": report.macro_f_beta,
        "micro_recall": report.micro_recall,
    })


@classify.command("export-training-set")
@click.option("--kind", required=True)
@click.pass_context
def classify_export(ctx, kind):
    engine = _engine(ctx)
    sys.stdout.write(format_training_set(export_training_set(engine.store, kind)))


# -- review ---------------------------------------------------------------

@main.group()
def review():
    """Analyst review queue."""


@review.command("next")
@click.option("--rater", required=True)
@click.pass_context
def review_next(ctx, rater):
    engine = _engine(ctx)
    _emit(engine.review_queue.next(rater) or {"empty": True})


@review.command("decide")
@click.argument("item_id")
@click.option("--decision", required=True, type=click.Choice(["confirm", "reject"]))
@click.option("--rater", required=True)
@click.pass_context
def review_decide(ctx, item_id, decision, rater):
    """Record a decision directly; leases only apply to live service sessions."""
    from .labeling import ReviewQueue

    engine = _engine(ctx)
    doc_id, index, kind, value = ReviewQueue.parse_item_id(item_id)
    record = engine.store.record_decision(doc_id, index, kind, value, decision, rater)
    _emit({"item_id": item_id, "provenance": record.provenance})


@review.command("progress")
@click.pass_context
def review_progress(ctx):
    engine = _engine(ctx)
    _emit({"classes": engine.review_queue.progress(),
           "kappa": pairwise_kappa(engine.store)})


# -- knowledge graph ------------------------------------------------------

@main.group()
def kg():
    """Knowledge-graph operations."""


@kg.command("assert")
@click.argument("subject")
@click.argument("predicate")
@click.argument("obj")
@click.option("--subject-class", required=True)
@click.option("--object-class", default=None)
@click.option("--confidence", default=1.0)
@click.pass_context
def kg_assert(ctx, subject, predicate, obj, subject_class, object_class, confidence):
    engine = _engine(ctx)
    engine.kg.register_entity(subject, subject_class)
    if object_class:
        engine.kg.register_entity(obj, object_class)
    triple = engine.kg.assert_triple(subject, predicate, obj, confidence=confidence)
    from .kg import save_graph
    save_graph(engine.kg, engine.kg_path)
    _emit({"subject": triple.subject, "predicate": triple.predicate,
           "object": triple.obj})


@kg.command("query")
@click.option("-s", default=None)
@click.option("-p", default=None)
@click.option("-o", default=None)
@click.pass_context
def kg_query(ctx, s, p, o):
    engine = _engine(ctx)
    _emit([{"subject": t.subject, "predicate": t.predicate, "object": t.obj,
            "provenance": t.provenance, "confidence": t.confidence}
           for t in engine.kg.query(subject=s, predicate=p, obj=o)])


@kg.command("neighborhood")
@click.argument("entity")
@click.option("--depth", default=1, show_default=True)
@click.pass_context
def kg_neighborhood(ctx, entity, depth):
    engine = _engine(ctx)
    result = engine.kg.neighborhood(entity, depth)
    _emit({"nodes": result["nodes"],
           "edges": [{"subject": t.subject, "predicate": t.predicate,
                      "object": t.obj} for t in result["edges"]]})


@kg.command("export")
@click.pass_context
def kg_export(ctx):
    engine = _engine(ctx)
    sys.stdout.write(engine.kg.export_text())


@kg.command("import")
@click.argument("path")
@click.pass_context
def kg_import(ctx, path):
    from .kg import KnowledgeGraph, save_graph
    engine = _engine(ctx)
    graph = KnowledgeGraph.import_text(Path(path).read_text(encoding="utf-8"))
    save_graph(graph, engine.kg_path)
    engine._kg = graph
    _emit({"entities": len(graph.entities()), "triples": len(graph.query())})


# -- summaries / service --------------------------------------------------

@main.group()
def summarize():
    """Extractive summaries."""


@summarize.command("run")
@click.option("--doc", "doc_id", required=True)
@click.option("--words", default=None, type=int)
@click.pass_context
def summarize_run(ctx, doc_id, words):
    engine = _engine(ctx)
    _emit(engine.summarize_document(doc_id, words))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    engine = _engine(ctx)
    uvicorn.run(create_app(engine), host=host, port=port)


if __name__ == "__main__":
    main()
