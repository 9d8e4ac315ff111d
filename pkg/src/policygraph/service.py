"""HTTP service exposing the pipeline, review queue, search, and graph.

All responses are JSON with stable field names; errors carry the machine
readable ``code`` of the underlying engine exception. The review console
and the CLI both consume only these endpoints.
"""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import (BusyError, ConflictError, InputError, LeaseError, NotFoundError,
                     PlanError, PolicyGraphError, StateError)
from .ingest import register_source
from .labeling import pairwise_kappa
from .pipeline import Engine
from .store import SourceSpec

_STATUS_BY_CODE = {
    "not_found": 404,
    "conflict": 409,
    "busy": 409,
    "lease": 409,
    "state": 409,
    "input": 400,
    "plan": 400,
    "config": 400,
    "ontology": 400,
    "import": 400,
    "integrity": 400,
    "unsupported_format": 400,
}


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="policygraph")

    @app.exception_handler(PolicyGraphError)
    async def _engine_error(request: Request, exc: PolicyGraphError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(status_code=status,
                            content={"error": str(exc), "code": exc.code})

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        token = engine.config.auth_token
        if token and request.headers.get("x-auth-token") != token:
            return JSONResponse(status_code=401,
                                content={"error": "missing or bad token", "code": "auth"})
        return await call_next(request)

    @app.get("/documents")
    def list_documents(status: str | None = None, source_id: str | None = None):
        docs = engine.store.list_documents(status=status, source_id=source_id)
        return {"documents": [asdict(d) for d in docs]}

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        doc = engine.store.get_document(doc_id)
        payload = asdict(doc)
        payload["sentence_count"] = len(engine.store.get_sentences(doc_id))
        return payload

    @app.post("/sources")
    def post_source(spec: dict):
        source_id = register_source(engine.store, SourceSpec(**spec))
        return {"source_id": source_id}

    @app.post("/pipeline/run")
    def pipeline_run(body: dict | None = None):
        body = body or {}
        return engine.run_pipeline(scope=body.get("scope", "all"),
                                   stages=body.get("stages"))

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return engine.store.get_run(run_id)

    @app.get("/search")
    def search(q: str = "", top_k: int = 10):
        return {"results": engine.search(q, top_k)}

    @app.get("/review/next")
    def review_next(rater_id: str):
        item = engine.review_queue.next(rater_id)
        if item is None:
            return {"empty": True, "item": None}
        return {"empty": False, "item": item}

    @app.post("/review/{item_id}/decision")
    def review_decide(item_id: str, body: dict):
        record = engine.review_queue.decide(
            item_id, body["decision"], body["rater_id"])
        return {"item_id": item_id, "provenance": record.provenance}

    @app.get("/review/progress")
    def review_progress():
        return {
            "classes": engine.review_queue.progress(),
            "kappa": pairwise_kappa(engine.store),
        }

    @app.get("/kg/query")
    def kg_query(s: str | None = None, p: str | None = None, o: str | None = None):
        triples = engine.kg.query(subject=s, predicate=p, obj=o)
        return {"triples": [_triple_payload(t) for t in triples]}

    @app.get("/kg/neighborhood")
    def kg_neighborhood(entity: str, depth: int = 1):
        result = engine.kg.neighborhood(entity, depth)
        return {"nodes": result["nodes"],
                "edges": [_triple_payload(t) for t in result["edges"]]}

    @app.get("/summaries/{doc_id}")
    def get_summary(doc_id: str, words: int | None = None):
        return engine.summarize_document(doc_id, words)

    return app


def _triple_payload(triple) -> dict:
    return {
        "subject": triple.subject,
        "predicate": triple.predicate,
        "object": triple.obj,
        "provenance": [{"doc_id": d, "index": i} for d, i in triple.provenance],
        "confidence": triple.confidence,
    }
