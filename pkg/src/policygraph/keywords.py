"""Two-step topic filtering: gross in/out-keyword filter and fine topic filter.

The gross filter scores a document as
``|distinct in-keywords matched| - w * |distinct out-keywords matched|``
and keeps it when the score reaches the threshold. Defaults (w=1, tau=1)
are recall-first: out-keywords can only veto as many hits as in-keywords
provide, and any unopposed in-keyword keeps the document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .preprocess import fold_accents


@dataclass
class KeywordLists:
    list_id: str
    language: str = "en"
    in_keywords: tuple[str, ...] = ()
    out_keywords: tuple[str, ...] = ()
    out_weight: float = 1.0
    keep_threshold: float = 1.0

    def __post_init__(self):
        if not self.in_keywords:
            raise InputError("in_keywords must be non-empty")
        if self.out_weight < 0:
            raise InputError("out_weight must be nonnegative")
        # phrases are stored accent-folded lowercase
        self.in_keywords = tuple(fold_accents(k.lower()).strip() for k in self.in_keywords)
        self.out_keywords = tuple(fold_accents(k.lower()).strip() for k in self.out_keywords)


@dataclass
class FilterReport:
    keep: bool
    score: float
    matched_in: tuple[str, ...]
    matched_out: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "keep": self.keep,
            "score": self.score,
            "matched_in": list(self.matched_in),
            "matched_out": list(self.matched_out),
        }


def _phrase_matches(phrase: str, text: str) -> bool:
    # whole-word/phrase match, text is already accent-folded lowercase
    pattern = r"(?<!\w)" + re.escape(phrase) + r"(?!\w)"
    return re.search(pattern, text) is not None


def gross_filter(analysis_text: str, lists: KeywordLists) -> FilterReport:
    """Crawl-time keep/drop decision with a full audit report."""
    text = fold_accents(analysis_text.lower())
    matched_in = tuple(sorted(k for k in set(lists.in_keywords) if _phrase_matches(k, text)))
    matched_out = tuple(sorted(k for k in set(lists.out_keywords) if _phrase_matches(k, text)))
    score = len(matched_in) - lists.out_weight * len(matched_out)
    return FilterReport(
        keep=score >= lists.keep_threshold,
        score=score,
        matched_in=matched_in,
        matched_out=matched_out,
    )


def fine_filter(sentence_topics: dict[int, set[str]]) -> tuple[set[str], bool]:
    """Document topic set = union of sentence topic sets.

    Returns (topics, untopical) where untopical flags an empty union.
    """
    topics: set[str] = set()
    for assigned in sentence_topics.values():
        topics |= set(assigned)
    return topics, not topics


def parse_keyword_file(path: str | Path) -> KeywordLists:
    """Parse the keyword list file format.

    Header line: ``list_id language out_weight keep_threshold`` followed by
    ``IN:`` and ``OUT:`` sections, one phrase per line. ``#`` starts a comment.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = None
    section = None
    in_kw: list[str] = []
    out_kw: list[str] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 4:
                raise InputError(f"line {lineno}: header must be 'list_id language w tau'")
            header = (parts[0], parts[1], float(parts[2]), float(parts[3]))
            continue
        if line == "IN:":
            section = in_kw
            continue
        if line == "OUT:":
            section = out_kw
            continue
        if section is None:
            raise InputError(f"line {lineno}: phrase outside IN:/OUT: section")
        section.append(line)
    if header is None:
        raise InputError("empty keyword list file")
    return KeywordLists(
        list_id=header[0],
        language=header[1],
        out_weight=header[2],
        keep_threshold=header[3],
        in_keywords=tuple(in_kw),
        out_keywords=tuple(out_kw),
    )


def write_keyword_file(path: str | Path, lists: KeywordLists):
    lines = [f"{lists.list_id} {lists.language} {lists.out_weight} {lists.keep_threshold}", "IN:"]
    lines.extend(lists.in_keywords)
    lines.append("OUT:")
    lines.extend(lists.out_keywords)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
