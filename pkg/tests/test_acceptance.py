"""Acceptance suite: one test per release criterion, each at its stated
tolerance, with an independent oracle wherever the criterion calls for one.
Each test prints a single PASS line naming the criterion."""

import math
import random
import time

import pytest

from conftest import build_engine
from policygraph.classify import evaluate, f_beta, train
from policygraph.embedding import HashedTfidfEmbedder, cosine
from policygraph.errors import OntologyError
from policygraph.keywords import KeywordLists, gross_filter
from policygraph.kg import ENTITY_CLASSES, KnowledgeGraph, PREDICATES, is_literal_kind
from policygraph.labeling import Query, QuerySet, kappa, rank_candidates
from policygraph.linking import link_incentives
from policygraph.store import INSTRUMENT_CLASSES, SentenceRecord
from policygraph.summarize import rouge_n, sumbasic


def _sent(i, text, doc_id="accept"):
    return SentenceRecord(doc_id=doc_id, index=i, display_text=text,
                          analysis_text=text.lower(), span=(0, len(text)))


# -- criterion 1: assisted-labeling oracle equivalence ----------------------

_FILLER_WORDS = ("committee", "annual", "report", "schedule", "budget", "meeting",
                 "procedure", "registry", "notice", "archive", "quorum", "minutes",
                 "session", "roster", "agenda", "bylaw")

_PARAPHRASES = [
    "direct payments are awarded to landowners who restore forest",
    "landowners receive direct payments for forest restoration work",
    "the program awards payments directly to forest landowners",
    "forest restoration earns landowners a direct payment",
    "payments go directly to those restoring forest land",
    "a direct payment rewards each landowner restoring forest",
    "restoring forest land qualifies landowners for direct payments",
    "the agency awards direct payments for restored forest land",
    "forest landowners are paid directly for restoration",
    "direct payment awards support landowners restoring forests",
]


def test_assisted_labeling_oracle_equivalence():
    rng = random.Random(42)
    sentences = []
    for i in range(200):
        if i < 10:
            text = _PARAPHRASES[i]
        else:
            text = " ".join(rng.choice(_FILLER_WORDS) for _ in range(rng.randint(4, 12)))
        sentences.append(_sent(i, text))
    embedder = HashedTfidfEmbedder(dim=4096)
    embedder.fit([s.analysis_text for s in sentences])
    qs = QuerySet(class_name="direct_payments", language="en", queries=[
        Query("q0", "awards direct payments to landowners for forest restoration"),
        Query("q1", "pays landowners directly to restore forests"),
    ])

    started = time.monotonic()
    got = rank_candidates(sentences, embedder, qs, top_k=20, theta_pre=0.35)
    elapsed = time.monotonic() - started

    # independent brute-force scorer with the same tie rule
    qvecs = [embedder.embed(q.text.lower()) for q in qs.queries]
    scored = []
    for s in sentences:
        v = embedder.embed(s.analysis_text)
        score = max(cosine(v, qv) for qv in qvecs)
        if score >= 0.35:
            scored.append((score, s.doc_id, s.index))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    expected = scored[:20]

    assert len(got) == len(expected)
    for cand, (score, doc_id, index) in zip(got, expected):
        assert (cand.doc_id, cand.index) == (doc_id, index)
        assert math.isclose(cand.score, score, abs_tol=1e-9)
    planted = sum(1 for c in got if c.index < 10)
    assert planted == 10  # all planted paraphrases surface
    assert elapsed < 5.0
    print("PASS acceptance: assisted-labeling ranking matches brute-force oracle "
          f"(top 20 identical, scores to 1e-9, {elapsed:.2f}s)")


# -- criterion 2: min-distance linking --------------------------------------

def test_min_distance_linking_oracle():
    rng = random.Random(1234)
    ties_checked = 0
    for _ in range(1000):
        n = rng.randint(1, 50)
        incentives = sorted(rng.sample(range(n), rng.randint(0, n)))
        topic_idx = set(rng.sample(range(n), rng.randint(0, n)))
        assignments = {j: {"t"} for j in topic_idx}
        links = link_incentives(incentives, assignments)
        assert [l.incentive_index for l in links] == incentives
        for link in links:
            i = link.incentive_index
            if not topic_idx:
                assert link.needs_review and link.topic_index is None
                continue
            best_dist = min(abs(i - j) for j in topic_idx)
            at_best = sorted(j for j in topic_idx if abs(i - j) == best_dist)
            # preceding sentence wins ties; otherwise the unique nearest
            expected = at_best[0] if at_best[0] < i else at_best[-1] if len(at_best) == 1 else at_best[0]
            assert link.distance == best_dist
            assert link.topic_index == expected
            if len(at_best) > 1:
                ties_checked += 1
                assert link.tie_flag
                assert link.topic_index < i  # preceding rule, 100% of ties
    assert ties_checked > 0
    print("PASS acceptance: min-distance linking matches brute-force oracle on "
          f"1000 random documents ({ties_checked} tie cases, all preceding)")


# -- criterion 3: metrics ---------------------------------------------------

def test_metric_fixtures():
    report = evaluate({1: "a", 2: "a", 3: "b", 4: "b"},
                      {1: "a", 2: "b", 3: "b", 4: "a"}, beta=2.0)
    assert report.per_class["a"].precision == 0.5
    assert report.per_class["a"].recall == 0.5
    assert report.per_class["a"].f1 == 0.5

    assert math.isclose(f_beta(0.5, 1.0, 2.0), 0.8333, abs_tol=1e-4)

    a, b = {}, {}
    for i in range(4):
        a[f"y{i}"], b[f"y{i}"] = True, True
    for i in range(4):
        a[f"n{i}"], b[f"n{i}"] = False, False
    a["d1"], b["d1"] = True, False
    a["d2"], b["d2"] = False, True
    assert math.isclose(kappa(a, b), 0.6, abs_tol=1e-9)
    print("PASS acceptance: metric fixtures (F1=0.5, F2=0.8333, kappa=0.6) reproduced")


# -- criterion 4: six-class instrument sanity -------------------------------

_TRAIN = {
    "tax_benefits": "grants tax deductions to those who conserve or rehabilitate forest",
    "direct_payments": "awards direct payments to small landowners who manage forests",
    "fines": "punishes those who start forest fires with monetary fines",
    "loans": "promotes reforestation by making loans to cover planting costs",
    "supplies": "provides tools supplies and plants and establishes nurseries",
    "technical_assistance": "gives farmers access to training centers for agroforestry",
}

_HELD_OUT = [
    "tax deductions reward those conserving forest land",
    "small landowners get direct payments for managing forests",
    "monetary fines punish whoever starts forest fires",
    "planting costs are covered by reforestation loans",
    "nurseries distribute tools plants and other supplies",
    "training centers teach farmers agroforestry techniques",
]


def test_six_class_instrument_sanity():
    embedder = HashedTfidfEmbedder(dim=4096)
    embedder.fit(list(_TRAIN.values()) + _HELD_OUT)
    model = train("instrument", list(_TRAIN.items()), embedder, theta=0.3)
    assert sorted(model.classes) == sorted(INSTRUMENT_CLASSES)

    for cls, text in _TRAIN.items():
        assert model.predict(embedder.embed(text)).value == cls  # accuracy 1.0

    agree = 0
    for text in _HELD_OUT:
        vec = embedder.embed(text)
        oracle = min((-cosine(vec, cen), cls) for cls, cen in model.centroids.items())[1]
        if model.predict(vec).value == oracle:
            agree += 1
    assert agree == len(_HELD_OUT)
    print("PASS acceptance: six-class nearest-centroid sanity (train accuracy 1.0, "
          "held-out argmax agreement 100%)")


# -- criterion 5: KG round trip, validation, Wisconsin fixture --------------

def _random_valid_graph(rng):
    kg = KnowledgeGraph()
    ids = {}
    for cls in ENTITY_CLASSES:
        ids[cls] = [f"{cls}-{i}" for i in range(rng.randint(1, 3))]
        for eid in ids[cls]:
            kg.register_entity(eid, cls)
    for _ in range(rng.randint(0, 20)):
        pred, (domain, range_) = rng.choice(list(PREDICATES.items()))
        obj = (f"lit-{rng.randint(0, 9)}" if is_literal_kind(range_)
               else rng.choice(ids[range_]))
        prov = [(f"doc{rng.randint(0, 2)}", rng.randint(0, 5))
                for _ in range(rng.randint(0, 2))]
        kg.assert_triple(rng.choice(ids[domain]), pred, obj, prov,
                         round(rng.uniform(0.05, 1.0), 4))
    return kg


def test_kg_round_trip_validation_and_wisconsin(ran_engine):
    rng = random.Random(99)
    for _ in range(100):
        kg = _random_valid_graph(rng)
        text = kg.export_text()
        assert KnowledgeGraph.import_text(text).export_text() == text

    violations = 0
    probe = _random_valid_graph(rng)
    by_class = {}
    for eid, cls in probe.entities().items():
        by_class.setdefault(cls, []).append(eid)
    for _ in range(100):
        pred, (domain, range_) = rng.choice(list(PREDICATES.items()))
        wrong = rng.choice([c for c in ENTITY_CLASSES if c != domain])
        obj = "lit" if is_literal_kind(range_) else rng.choice(by_class[range_])
        with pytest.raises(OntologyError):
            probe.assert_triple(rng.choice(by_class[wrong]), pred, obj)
        violations += 1
    assert violations == 100

    hits = ran_engine.kg.query(subject="Stewardship Incentive Program (SIP)",
                               predicate="targets",
                               obj="private forest land-owners")
    assert len(hits) == 1 and hits[0].provenance
    print("PASS acceptance: KG round trip (100 graphs byte-identical), 100/100 "
          "violations rejected, Wisconsin targets triple present")


# -- criterion 6: filter recall property ------------------------------------

def test_filter_recall_and_monotonicity():
    rng = random.Random(7)
    in_pool = ["forest", "restoration", "reforestation", "ecosystem", "landowners"]
    out_pool = ["telecommunications", "spectrum", "aviation"]
    filler = ["committee", "annual", "budget", "notice", "registry"]

    lists = KeywordLists(list_id="acc", in_keywords=tuple(in_pool),
                         out_keywords=tuple(out_pool))
    docs = []
    for _ in range(30):
        words = [rng.choice(in_pool)] + [rng.choice(filler) for _ in range(rng.randint(3, 15))]
        rng.shuffle(words)
        docs.append(" ".join(words))
    kept = sum(1 for d in docs if gross_filter(d, lists).keep)
    assert kept == 30  # recall = 1.0: in-keywords present, no out-keywords

    checked = 0
    for _ in range(1000):
        doc = " ".join(rng.choice(in_pool + out_pool + filler)
                       for _ in range(rng.randint(1, 20)))
        base_in = set(rng.sample(in_pool, rng.randint(1, len(in_pool))))
        base_out = set(rng.sample(out_pool, rng.randint(0, len(out_pool))))
        base = KeywordLists(list_id="m", in_keywords=tuple(sorted(base_in)),
                            out_keywords=tuple(sorted(base_out)))
        verdict = gross_filter(doc, base).keep
        if rng.random() < 0.5:
            # mutation: add an in-keyword -> keep decisions never flip to drop
            extra = rng.choice([w for w in in_pool + filler if w not in base_in])
            mutated = KeywordLists(list_id="m",
                                   in_keywords=tuple(sorted(base_in | {extra})),
                                   out_keywords=tuple(sorted(base_out)))
            if verdict:
                assert gross_filter(doc, mutated).keep
        else:
            # mutation: add an out-keyword -> drop decisions never flip to keep
            extra = rng.choice([w for w in out_pool + filler if w not in base_out])
            mutated = KeywordLists(list_id="m",
                                   in_keywords=tuple(sorted(base_in)),
                                   out_keywords=tuple(sorted(base_out | {extra})))
            if not verdict:
                assert not gross_filter(doc, mutated).keep
        checked += 1
    assert checked == 1000
    print("PASS acceptance: filter recall 30/30 and monotone over 1000 mutations")


# -- criterion 7: SumBasic and ROUGE ----------------------------------------

def test_sumbasic_and_rouge():
    five = [
        "forest restoration restores forest cover",
        "payments reward forest landowners",
        "fines punish illegal logging",
        "forest payments support landowners",
        "the committee meets annually",
    ]
    # hand trace (see test_summarize for the step-by-step derivation)
    assert sumbasic(five, max_words=9).selected == [0, 1, 4]

    assert math.isclose(rouge_n("the cat sat", ["the cat slept"], 1), 2 / 3, abs_tol=1e-9)

    rng = random.Random(5)
    vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    for _ in range(100):
        text = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 30)))
        assert math.isclose(rouge_n(text, [text], 1), 1.0, abs_tol=1e-12)
    print("PASS acceptance: SumBasic fixture trace and ROUGE identities reproduced")


# -- criterion 8: end-to-end ------------------------------------------------

def test_end_to_end_pipeline(tmp_path):
    engine = build_engine(tmp_path)

    started = time.monotonic()
    engine.run_pipeline()
    first_elapsed = time.monotonic() - started

    docs = engine.store.list_documents()
    assert len(docs) == 3
    assert all(d.status in ("linked", "filtered_out") for d in docs)
    formats = {d.raw_format for d in docs}
    assert "html" in formats and "txt" in formats
    assert any(d.language == "es" for d in docs)

    triples = engine.kg.query()
    assert triples
    resolvable = 0
    for t in triples:
        for doc_id, idx in t.provenance:
            engine.store.get_sentence(doc_id, idx)
            resolvable += 1
    assert resolvable >= 1

    digest = engine.store.state_digest()
    started = time.monotonic()
    engine.run_pipeline()
    second_elapsed = time.monotonic() - started
    assert engine.store.state_digest() == digest  # idempotent: no byte changed
    assert first_elapsed + second_elapsed < 60.0
    print("PASS acceptance: end-to-end fixture run "
          f"({first_elapsed:.2f}s + repeat {second_elapsed:.2f}s, idempotent, "
          f"{len(triples)} triples with resolvable provenance)")
