"""Extractive summarization (SumBasic) and ROUGE evaluation.

SumBasic is the deterministic builtin method; an abstractive provider can
be plugged in through the same texts-in/text-out hook as the embedding
provider but is never required. Long documents are chunked by outline
section, summarized per section, and the concatenation re-summarized.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import tokenize
from .errors import InputError


@dataclass
class SummaryResult:
    doc_id: str
    selected: list[int]  # sentence indices, document order
    word_budget: int
    method: str = "sumbasic"


def _content_words(text: str, stopwords: frozenset) -> list[str]:
    return [t for t in tokenize(text.lower()) if t not in stopwords]


def sumbasic(sentences: list[str], max_words: int,
             stopwords: frozenset = frozenset(), doc_id: str = "") -> SummaryResult:
    """SumBasic selection loop.

    Word probabilities over content words score each sentence by mean
    probability; each round picks the best-scoring sentence containing the
    current highest-probability word, then squares the probabilities of
    the selected sentence's words. Ties go to the earliest sentence.
    """
    if not sentences:
        raise InputError("cannot summarize an empty document")
    if max_words < 1:
        raise InputError("max_words must be >= 1")

    sent_words = [_content_words(s, stopwords) for s in sentences]
    counts: dict[str, int] = {}
    total = 0
    for words in sent_words:
        for w in words:
            counts[w] = counts.get(w, 0) + 1
            total += 1
    if total == 0:
        # no content words at all: fall back to document order
        prob: dict[str, float] = {}
    else:
        prob = {w: c / total for w, c in counts.items()}

    selected: list[int] = []
    remaining = set(range(len(sentences)))
    words_used = 0
    while remaining and words_used < max_words:
        if prob:
            # highest-probability word among words still present in candidates
            candidate_words = {w for i in remaining for w in sent_words[i]}
            if candidate_words:
                best_word = max(sorted(candidate_words), key=lambda w: prob[w])
                pool = [i for i in sorted(remaining) if best_word in sent_words[i]]
            else:
                pool = sorted(remaining)
        else:
            pool = sorted(remaining)

        def score(i: int) -> float:
            if not sent_words[i]:
                return 0.0
            return sum(prob.get(w, 0.0) for w in sent_words[i]) / len(sent_words[i])

        best = max(pool, key=lambda i: (score(i), -i))
        selected.append(best)
        remaining.discard(best)
        words_used += len(tokenize(sentences[best]))
        for w in set(sent_words[best]):
            if w in prob:
                prob[w] = prob[w] ** 2

    selected.sort()
    return SummaryResult(doc_id=doc_id, selected=selected, word_budget=max_words)


def summarize_with_outline(sentences: list[str], section_ranges: list[tuple[int, int]],
                           max_words: int, stopwords: frozenset = frozenset(),
                           doc_id: str = "") -> SummaryResult:
    """Chunked summarization for long documents: per-section SumBasic, then
    a second pass over the concatenated per-section picks."""
    if len(section_ranges) <= 1:
        return sumbasic(sentences, max_words, stopwords, doc_id)
    first_pass: list[int] = []
    per_section = max(1, max_words // len(section_ranges))
    for lo, hi in section_ranges:
        chunk = sentences[lo:hi]
        if not chunk:
            continue
        result = sumbasic(chunk, per_section, stopwords)
        first_pass.extend(lo + i for i in result.selected)
    first_pass.sort()
    second = sumbasic([sentences[i] for i in first_pass], max_words, stopwords)
    return SummaryResult(doc_id=doc_id, selected=[first_pass[i] for i in second.selected],
                         word_budget=max_words)


# -- ROUGE -----------------------------------------------------------------

def _ngrams(tokens: list[str], n: int) -> dict[tuple, int]:
    out: dict[tuple, int] = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        out[g] = out.get(g, 0) + 1
    return out


def rouge_n(candidate: str, references: list[str], n: int) -> float:
    """Recall: clipped n-gram overlap over total reference n-grams, best
    reference wins. Tokenization is whitespace over lowercased text."""
    if n < 1:
        raise InputError("n must be >= 1")
    references = [r for r in references if r.strip()]
    if not references:
        raise InputError("at least one non-empty reference required")
    if not candidate.strip():
        return 0.0
    cand_grams = _ngrams(candidate.lower().split(), n)
    best = 0.0
    for ref in references:
        ref_grams = _ngrams(ref.lower().split(), n)
        total = sum(ref_grams.values())
        if total == 0:
            continue
        overlap = sum(min(c, ref_grams.get(g, 0)) for g, c in cand_grams.items())
        best = max(best, overlap / total)
    return best


def _lcs_length(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, 1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> dict[str, float]:
    """LCS-based recall, precision, and harmonic-mean F over tokens."""
    cand = candidate.lower().split()
    ref = reference.lower().split()
    if not cand or not ref:
        raise InputError("rouge_l requires non-empty candidate and reference")
    lcs = _lcs_length(cand, ref)
    recall = lcs / len(ref)
    precision = lcs / len(cand)
    f = 0.0 if recall + precision == 0 else 2 * precision * recall / (precision + recall)
    return {"recall": recall, "precision": precision, "f": f}
