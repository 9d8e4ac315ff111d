"""Format conversion, text normalization, sentence splitting, and outlines.

All operations here are pure functions of (input, config), so they can run
in parallel across documents. Text exists in two layers: ``display_text``
keeps the original accents and line structure for traceability and span
bookkeeping; ``analysis_text`` is the lowercased (and, per language,
accent-folded) form that every matcher and embedder consumes.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path

from .errors import InputError, UnsupportedFormatError


@dataclass
class NormalizationConfig:
    language: str = "en"
    fold_accents: bool = False
    protected_abbreviations: tuple[str, ...] = ()
    acronym_policy: str = "strip_periods"  # keep | strip_periods
    stopwords: frozenset = field(default_factory=frozenset)

    @classmethod
    def from_dict(cls, payload: dict) -> "NormalizationConfig":
        return cls(
            language=payload["language"],
            fold_accents=bool(payload.get("fold_accents", False)),
            protected_abbreviations=tuple(payload.get("protected_abbreviations", ())),
            acronym_policy=payload.get("acronym_policy", "strip_periods"),
            stopwords=frozenset(payload.get("stopwords", ())),
        )


def load_langpack(language: str, packs_dir: str | Path | None = None) -> NormalizationConfig:
    """Load a language pack; unknown languages fall back to the English pack."""
    name = language.split("-")[0].lower()
    if packs_dir is not None:
        path = Path(packs_dir) / f"{name}.json"
        if path.exists():
            return NormalizationConfig.from_dict(json.loads(path.read_text(encoding="utf-8")))
    pkg = resources.files("policygraph.langpacks")
    candidate = pkg / f"{name}.json"
    if not candidate.is_file():
        candidate = pkg / "en.json"
    return NormalizationConfig.from_dict(json.loads(candidate.read_text(encoding="utf-8")))


# -- format conversion -----------------------------------------------------

_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6",
    "tr", "table", "section", "article", "header", "footer", "title", "blockquote",
}


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip_depth:
            self._skip_depth -= 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if not self._skip_depth:
            self.parts.append(data)


def convert_to_text(raw_bytes: bytes, fmt: str, *, ocr_provider=None,
                    pdf_adapter=None) -> str:
    """Convert raw document bytes to plain text with accents preserved."""
    if fmt == "txt":
        return raw_bytes.decode("utf-8", errors="replace")
    if fmt == "html":
        extractor = _TextExtractor()
        extractor.feed(raw_bytes.decode("utf-8", errors="replace"))
        return "".join(extractor.parts)
    if fmt == "pdf_text":
        if pdf_adapter is None:
            raise UnsupportedFormatError(
                "pdf_text requires an embedded-text extraction adapter "
                "(configure pdf_adapter)"
            )
        return pdf_adapter(raw_bytes)
    if fmt == "pdf_scan":
        if ocr_provider is None:
            raise UnsupportedFormatError(
                "pdf_scan requires an external OCR provider (configure ocr_provider)"
            )
        return ocr_provider(raw_bytes)
    raise InputError(f"unknown document format {fmt!r}")


# -- normalization ---------------------------------------------------------

def fold_accents(text: str) -> str:
    """Length-preserving accent fold: each char maps to its base char."""
    out = []
    for ch in text:
        decomposed = unicodedata.normalize("NFD", ch)
        base = "".join(c for c in decomposed if not unicodedata.combining(c))
        out.append(base if len(base) == 1 else ch)
    return "".join(out)


_ACRONYM_RE = re.compile(r"\b(?:[a-zA-Z]\.){2,}")


def normalize(text: str, config: NormalizationConfig) -> tuple[str, str]:
    """Return (display_text, analysis_text).

    display: NFC-normalized, horizontal whitespace collapsed, blank lines
    dropped, line breaks kept at paragraph/heading boundaries.
    analysis: display lowercased, accents folded per config, acronym
    periods stripped per policy.
    """
    text = unicodedata.normalize("NFC", text)
    lines = []
    for line in text.split("\n"):
        collapsed = " ".join(line.split())
        if collapsed:
            lines.append(collapsed)
    display = "\n".join(lines)

    analysis = display.lower()
    if config.fold_accents:
        analysis = fold_accents(analysis)
    if config.acronym_policy == "strip_periods":
        analysis = _ACRONYM_RE.sub(lambda m: m.group(0).replace(".", ""), analysis)
    return display, analysis


def analysis_form(text: str, config: NormalizationConfig) -> str:
    """Analysis-layer form of an already-normalized display string."""
    return normalize(text, config)[1]


# -- sentence splitting ----------------------------------------------------

_UPPER_OR_DIGIT = re.compile(r"[0-9A-ZÁÉÍÓÚÑÜÀÈÌÒÙÂÊÎÔÛÄËÏÖÜ¿¡]")
_BOUNDARY_RE = re.compile(r"[.?!]+(?=\s)")
_INITIAL_RE = re.compile(r"^[A-Za-z]\.$")


@dataclass
class SentenceFragment:
    text: str
    span: tuple[int, int]


def split_sentences(display_text: str, config: NormalizationConfig) -> list[SentenceFragment]:
    """Split normalized display text into sentence fragments with spans.

    Boundaries: sentence-final punctuation followed by whitespace and an
    uppercase letter or digit, unless the preceding token is a protected
    abbreviation or a single-letter initial. Line breaks are always hard
    boundaries (headings form their own fragments).
    """
    protected = {a.lower() for a in config.protected_abbreviations}
    fragments: list[SentenceFragment] = []

    line_start = 0
    for line in display_text.split("\n"):
        line_end = line_start + len(line)
        fragments.extend(_split_line(display_text, line_start, line_end, protected))
        line_start = line_end + 1
    return fragments


def _split_line(text: str, start: int, end: int, protected: set) -> list[SentenceFragment]:
    line = text[start:end]
    if not line.strip():
        return []
    cut_points = []
    for match in _BOUNDARY_RE.finditer(line):
        punct_end = match.end()
        # next non-space char must be uppercase or a digit
        rest = line[punct_end:]
        stripped = rest.lstrip()
        if not stripped or not _UPPER_OR_DIGIT.match(stripped[0]):
            continue
        token = line[:punct_end].split()[-1]
        if token.lower() in protected or _INITIAL_RE.match(token):
            continue
        cut_points.append(punct_end)

    fragments = []
    prev = 0
    for cut in cut_points + [len(line)]:
        chunk = line[prev:cut]
        lead = len(chunk) - len(chunk.lstrip())
        trail = len(chunk) - len(chunk.rstrip())
        if chunk.strip():
            s = start + prev + lead
            e = start + cut - trail
            fragments.append(SentenceFragment(text=text[s:e], span=(s, e)))
        prev = cut
    return fragments


# -- outline extraction ----------------------------------------------------

@dataclass
class OutlineNode:
    heading: str
    numbering: str
    depth: int
    children: list["OutlineNode"] = field(default_factory=list)
    sentence_range: tuple[int, int] = (0, 0)

    def leaves(self) -> list["OutlineNode"]:
        if not self.children:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out


_HEADING_PATTERNS = [
    re.compile(r"^(NR \d+\.\d+)\b"),
    re.compile(r"^(Art[íi]culo \d+)\b"),
    re.compile(r"^(Article \d+)\b"),
    re.compile(r"^(Section \d+)\b"),
    re.compile(r"^(TITLE\b[^.]*)"),
    re.compile(r"^(CAP[ÍI]TULO\b[^.]*)"),
    re.compile(r"^([IVXLCDM]+)[.)]\s"),
]


def _heading_numbering(line: str) -> str | None:
    for pattern in _HEADING_PATTERNS:
        match = pattern.match(line)
        if match:
            return match.group(1).strip()
    # short all-caps line (must contain a letter)
    if 2 <= len(line) <= 60 and line == line.upper() and any(c.isalpha() for c in line):
        return line
    return None


def extract_outline(display_text: str, config: NormalizationConfig) -> OutlineNode:
    """Heuristic outline: heading lines become depth-1 nodes under a root.

    Every sentence belongs to exactly one leaf; documents without detected
    headings yield a single root covering all sentences.
    """
    fragments = split_sentences(display_text, config)
    n = len(fragments)
    root = OutlineNode(heading="", numbering="", depth=0, sentence_range=(0, n))
    if n == 0:
        return root

    headings: list[tuple[int, str, str]] = []  # (char offset, heading line, numbering)
    offset = 0
    for line in display_text.split("\n"):
        numbering = _heading_numbering(line)
        if numbering is not None:
            headings.append((offset, line, numbering))
        offset += len(line) + 1
    if not headings:
        return root

    # Assign each sentence to the last heading starting at or before its span.
    boundaries = [h[0] for h in headings]
    first_idx = n
    for i, frag in enumerate(fragments):
        if frag.span[0] >= boundaries[0]:
            first_idx = i
            break
    if first_idx > 0:
        root.children.append(
            OutlineNode(heading="", numbering="", depth=1, sentence_range=(0, first_idx))
        )

    starts = []
    for char_offset, _, _ in headings:
        idx = n
        for i, frag in enumerate(fragments):
            if frag.span[0] >= char_offset:
                idx = i
                break
        starts.append(idx)
    starts.append(n)
    for k, (char_offset, line, numbering) in enumerate(headings):
        node = OutlineNode(
            heading=line,
            numbering=numbering,
            depth=1,
            sentence_range=(starts[k], starts[k + 1]),
        )
        root.children.append(node)
    return root


def section_paths(outline: OutlineNode, sentence_count: int) -> list[tuple[str, ...]]:
    """Per-sentence section path derived from the outline leaves."""
    paths: list[tuple[str, ...]] = [() for _ in range(sentence_count)]
    for leaf in outline.leaves():
        if leaf is outline:
            continue
        lo, hi = leaf.sentence_range
        for i in range(lo, min(hi, sentence_count)):
            if leaf.heading:
                paths[i] = (leaf.heading,)
    return paths
