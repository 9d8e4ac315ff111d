import pytest
from hypothesis import given, settings, strategies as st

from policygraph.errors import ConflictError, IntegrityError, InputError, NotFoundError, StateError
from policygraph.store import (CorpusStore, DocumentRecord, LabelRecord, SentenceRecord,
                               SourceSpec, STATUS_TRANSITIONS, content_id)


def make_doc(raw: bytes, **kw) -> DocumentRecord:
    digest = content_id(raw)
    defaults = dict(doc_id=digest, source_id="s1", title="Doc",
                    content_digest=digest, status="fetched")
    defaults.update(kw)
    return DocumentRecord(**defaults)


def test_put_document_is_content_addressed(store):
    raw = b"hello policy world"
    doc_id = store.put_document(make_doc(raw), raw)
    assert doc_id == content_id(raw)
    assert store.get_object(doc_id) == raw
    # identical content: no-op, still one document
    store.put_document(make_doc(raw), raw)
    assert store.document_count() == 1


def test_put_document_rejects_digest_mismatch(store):
    raw = b"abc"
    rec = make_doc(raw)
    rec.content_digest = "0" * 64
    with pytest.raises(IntegrityError):
        store.put_document(rec, raw)
    rec = make_doc(raw)
    rec.doc_id = "0" * 64
    with pytest.raises(IntegrityError):
        store.put_document(rec, raw)


def test_get_document_not_found(store):
    with pytest.raises(NotFoundError):
        store.get_document("missing")


def test_status_lifecycle_happy_path(store):
    raw = b"doc"
    doc_id = store.put_document(make_doc(raw), raw)
    for status in ("converted", "filtered_in", "sentenced", "classified", "linked"):
        store.advance_status(doc_id, status)
    assert store.get_document(doc_id).status == "linked"
    # terminal: nothing further
    with pytest.raises(StateError):
        store.advance_status(doc_id, "classified")


def test_filtered_out_is_terminal(store):
    raw = b"doc2"
    doc_id = store.put_document(make_doc(raw), raw)
    store.advance_status(doc_id, "converted")
    store.advance_status(doc_id, "filtered_out")
    with pytest.raises(StateError):
        store.advance_status(doc_id, "filtered_in")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(sorted(STATUS_TRANSITIONS)), min_size=1, max_size=8))
def test_transitions_property(tmp_path_factory, moves):
    """Any sequence of advance_status calls either follows the transition
    graph or raises; the stored status always stays reachable."""
    store = CorpusStore(tmp_path_factory.mktemp("prop"))
    raw = b"property-doc"
    doc_id = store.put_document(make_doc(raw), raw)
    status = "fetched"
    for target in moves:
        if target in STATUS_TRANSITIONS[status]:
            store.advance_status(doc_id, target)
            status = target
        else:
            with pytest.raises(StateError):
                store.advance_status(doc_id, target)
        assert store.get_document(doc_id).status == status


def test_audit_log_is_append_only(store):
    raw = b"audited"
    doc_id = store.put_document(make_doc(raw), raw)
    before = store.audit_events()
    store.advance_status(doc_id, "converted")
    after = store.audit_events()
    assert after[:len(before)] == before
    assert after[-1]["old"] == "fetched" and after[-1]["new"] == "converted"


def test_reset_for_refilter(store):
    raw = b"refilter-me"
    doc_id = store.put_document(make_doc(raw), raw)
    store.advance_status(doc_id, "converted")
    store.advance_status(doc_id, "filtered_out")
    store.reset_for_refilter(doc_id)
    assert store.get_document(doc_id).status == "converted"
    store.advance_status(doc_id, "filtered_in")
    store.reset_for_refilter(doc_id)  # both filtered_* states may reset
    store.advance_status(doc_id, "filtered_in")
    store.advance_status(doc_id, "sentenced")
    with pytest.raises(StateError):
        store.reset_for_refilter(doc_id)  # past the filter: no reset


def test_sources_registry(store):
    spec = SourceSpec(source_id="a", country="MX", level="federal", region="",
                      base_locator="/tmp/x", fetch_interval=60)
    store.add_source(spec)
    with pytest.raises(ConflictError):
        store.add_source(spec)
    assert store.get_source("a").country == "MX"
    with pytest.raises(NotFoundError):
        store.get_source("b")


def test_source_validation():
    with pytest.raises(InputError):
        SourceSpec(source_id="", country="MX", level="federal", region="",
                   base_locator="x", fetch_interval=60).validate()
    with pytest.raises(InputError):
        SourceSpec(source_id="a", country="MX", level="galactic", region="",
                   base_locator="x", fetch_interval=60).validate()
    with pytest.raises(InputError):
        SourceSpec(source_id="a", country="MX", level="federal", region="",
                   base_locator="x", fetch_interval=0).validate()


def _seed_sentences(store, doc_id, texts):
    store.add_sentences(doc_id, [
        SentenceRecord(doc_id=doc_id, index=i, display_text=t,
                       analysis_text=t.lower(), span=(0, len(t)))
        for i, t in enumerate(texts)
    ])


def test_sentences_round_trip(store):
    raw = b"with-sentences"
    doc_id = store.put_document(make_doc(raw), raw)
    _seed_sentences(store, doc_id, ["One.", "Two."])
    got = store.get_sentences(doc_id)
    assert [s.display_text for s in got] == ["One.", "Two."]
    assert got[0].span == (0, 4)
    with pytest.raises(IntegrityError):
        store.add_sentences(doc_id, [
            SentenceRecord(doc_id=doc_id, index=5, display_text="x",
                           analysis_text="x", span=(0, 1))
        ])
    with pytest.raises(NotFoundError):
        store.get_sentence(doc_id, 9)


def test_label_decision_is_single_shot(store):
    raw = b"labels"
    doc_id = store.put_document(make_doc(raw), raw)
    _seed_sentences(store, doc_id, ["An incentive sentence."])
    store.add_pre_label(doc_id, 0, "instrument", "fines", 0.9)
    rec = store.record_decision(doc_id, 0, "instrument", "fines", "confirm", "alice")
    assert rec.provenance == "confirmed" and rec.decided_by == "alice"
    with pytest.raises(ConflictError):
        store.record_decision(doc_id, 0, "instrument", "fines", "reject", "bob")
    with pytest.raises(NotFoundError):
        store.record_decision(doc_id, 0, "instrument", "loans", "confirm", "bob")
    with pytest.raises(InputError):
        store.record_decision(doc_id, 0, "instrument", "fines", "maybe", "bob")


def test_label_validation(store):
    with pytest.raises(InputError):
        store.add_pre_label("d", 0, "instrument", "bribes", 0.5)
    with pytest.raises(InputError):
        store.add_pre_label("d", 0, "mystery", "x", 0.5)
    with pytest.raises(InputError):
        store.add_pre_label("d", 0, "incentive_presence", "maybe", 0.5)


def test_pre_label_idempotent(store):
    store.add_pre_label("d", 0, "topic", "forest", 0.8)
    first = store.get_label("d", 0, "topic", "forest")
    store.add_pre_label("d", 0, "topic", "forest", 0.2)
    again = store.get_label("d", 0, "topic", "forest")
    assert again.score == first.score == 0.8


def test_label_counts_and_listing(store):
    store.add_pre_label("d", 0, "topic", "forest", 0.9)
    store.add_pre_label("d", 1, "topic", "forest", 0.8)
    store.add_gold_label("d", 2, "topic", "water", "expert")
    counts = store.label_counts("topic")
    assert counts["forest"]["pre_labeled"] == 2
    assert counts["water"]["gold"] == 1
    assert len(store.list_labels(kind="topic", provenance="pre_labeled")) == 2


def test_predictions_round_trip(store):
    store.put_prediction("d", 0, "topic", "forest", 0.7)
    store.put_prediction("d", 0, "topic", "forest", 0.9)  # replace
    assert store.get_predictions("d") == [(0, "topic", "forest", 0.9)]
    assert store.get_predictions("d", "instrument") == []


def test_run_reports(store):
    store.save_run({"run_id": "abc", "stages": []})
    assert store.get_run("abc")["stages"] == []
    with pytest.raises(NotFoundError):
        store.get_run("nope")


def test_state_digest_tracks_changes(store):
    d0 = store.state_digest()
    raw = b"digest-me"
    store.put_document(make_doc(raw), raw)
    d1 = store.state_digest()
    assert d0 != d1
    assert store.state_digest() == d1  # read-only ops do not change it
