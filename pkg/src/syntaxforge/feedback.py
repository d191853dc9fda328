"""Canonical structured syntax feedback: data model, parser, validator.

The canonical serialized form lists the seven fixed category headers in order,
each followed by one finding per line::

    Misspelled Words:
    - "beleive" -> "believe": spelling
    Conjunctions and Linking Phrases:
    None
    ...

The parser is tolerant of the formatting drift hosted models produce (case,
numbering, markdown emphasis, "->" vs the arrow), but the category set is
closed: a general grammar-errors header is rejected by design.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable


class SyntaxCategory(Enum):
    """The seven feedback categories; the set is closed."""

    MISSPELLED_WORDS = "Misspelled Words"
    CONJUNCTIONS_AND_LINKING_PHRASES = "Conjunctions and Linking Phrases"
    MODIFIERS = "Modifiers"
    PREPOSITIONS = "Prepositions"
    MODAL_VERBS = "Modal Verbs"
    PUNCTUATION = "Punctuation"
    ARTICLES = "Articles"


CATEGORY_ORDER: tuple[SyntaxCategory, ...] = tuple(SyntaxCategory)

# Explanations carrying this tag mark a correction as advisory, exempting it
# from the correction-must-differ rule.
ADVISORY_TAG = "[advisory]"


class FeedbackParseError(Exception):
    """Raw text contains no recognizable category header."""


@dataclass(frozen=True)
class FeedbackItem:
    category: SyntaxCategory
    original: str
    correction: str
    explanation: str


@dataclass
class FeedbackDocument:
    """Parsed feedback: ordered items plus the raw source and parse warnings."""

    items: list[FeedbackItem]
    source_text: str = ""
    parse_warnings: list[str] = field(default_factory=list)

    def grouped(self) -> dict[SyntaxCategory, list[FeedbackItem]]:
        """Items per category; all seven categories always present."""
        groups: dict[SyntaxCategory, list[FeedbackItem]] = {c: [] for c in CATEGORY_ORDER}
        for item in self.items:
            groups[item.category].append(item)
        return groups


class ValidationFlag(Enum):
    QUOTE_NOT_FOUND = "quote_not_found"
    CORRECTION_IDENTICAL = "correction_identical"
    EMPTY_FIELD = "empty_field"


@dataclass(frozen=True)
class ValidationReport:
    valid_items: int
    flagged: list[tuple[int, ValidationFlag]]


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _normalize_header(line: str) -> str:
    """Strip numbering, markdown emphasis, and trailing colons; lowercase."""
    line = line.strip()
    line = re.sub(r"^#{1,6}\s*", "", line)
    line = re.sub(r"^\d+\s*[.)]\s*", "", line)
    line = line.strip("*_ \t")
    line = line.rstrip(":").strip("*_ \t")
    line = line.replace("&", "and")
    return _normalize_ws(line).lower()


_HEADER_LOOKUP = {category.value.lower(): category for category in CATEGORY_ORDER}

# Recognized and deliberately refused: the category set omits a catch-all
# grammar bucket because the seven categories already cover those errors.
_REJECTED_HEADERS = {"grammatical errors", "grammar errors", "grammar"}

_BULLET_PREFIX_RE = re.compile(r"^\s*(?:[-*•]|\d+\s*[.)])\s*")
_QUOTED_BULLET_RE = re.compile(
    r'^"(?P<original>.*?)"\s*(?:→|->)\s*"(?P<correction>.*?)"\s*:\s*(?P<explanation>.*)$'
)
_BARE_BULLET_RE = re.compile(
    r"^(?P<original>.+?)\s*(?:→|->)\s*(?P<correction>.+?)\s*:\s*(?P<explanation>.*)$"
)
_NONE_RE = re.compile(r"^(?:none|no (?:issues|errors|findings)(?: found)?)\.?$", re.IGNORECASE)


def _match_header(line: str) -> SyntaxCategory | str | None:
    """A category, the string 'rejected', or None when the line is no header."""
    normalized = _normalize_header(line)
    if normalized in _HEADER_LOOKUP:
        return _HEADER_LOOKUP[normalized]
    if normalized in _REJECTED_HEADERS:
        return "rejected"
    return None


def _strip_quotes(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1]
    return text


def parse_feedback(raw: str) -> FeedbackDocument:
    """Parse model output into a FeedbackDocument.

    Unparseable lines become parse_warnings; the raw text is retained as
    source_text either way. Raises FeedbackParseError when not a single
    category header is recognizable.
    """
    items: list[FeedbackItem] = []
    warnings: list[str] = []
    current: SyntaxCategory | None = None
    in_rejected = False
    saw_header = False

    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        header = _match_header(line)
        if header == "rejected":
            warnings.append(f"line {lineno}: rejected header (not one of the seven categories): {line.strip()}")
            current, in_rejected = None, True
            continue
        if header is not None:
            current, in_rejected = header, False
            saw_header = True
            continue

        body = _BULLET_PREFIX_RE.sub("", line).strip()
        if current is None:
            where = "under rejected header" if in_rejected else "before any header"
            warnings.append(f"line {lineno} ({where}): {line.strip()}")
            continue
        if _NONE_RE.match(body):
            continue
        m = _QUOTED_BULLET_RE.match(body) or _BARE_BULLET_RE.match(body)
        if m is None:
            warnings.append(f"line {lineno}: cannot parse finding: {line.strip()}")
            continue
        items.append(
            FeedbackItem(
                category=current,
                original=_strip_quotes(m.group("original")),
                correction=_strip_quotes(m.group("correction")),
                explanation=m.group("explanation").strip(),
            )
        )

    if not saw_header:
        raise FeedbackParseError("no recognizable category headers in feedback text")
    return FeedbackDocument(items=items, source_text=raw, parse_warnings=warnings)


def serialize_feedback(doc: FeedbackDocument | Iterable[FeedbackItem]) -> str:
    """Render items in the canonical form: seven headers in order, findings or None."""
    items = doc.items if isinstance(doc, FeedbackDocument) else list(doc)
    groups: dict[SyntaxCategory, list[FeedbackItem]] = {c: [] for c in CATEGORY_ORDER}
    for item in items:
        groups[item.category].append(item)
    lines: list[str] = []
    for category in CATEGORY_ORDER:
        lines.append(f"{category.value}:")
        if not groups[category]:
            lines.append("None")
            continue
        for item in groups[category]:
            lines.append(f'- "{item.original}" -> "{item.correction}": {item.explanation}')
    return "\n".join(lines) + "\n"


def validate_feedback(essay, doc: FeedbackDocument) -> ValidationReport:
    """Check each item against the source essay text.

    Quote search is whitespace-normalized but case-sensitive (case errors are
    legitimate corrections); the identical-correction check additionally
    ignores case, and is skipped for advisory-tagged explanations.
    """
    text = essay.text if hasattr(essay, "text") else str(essay)
    normalized_essay = _normalize_ws(text)
    flagged: list[tuple[int, ValidationFlag]] = []
    for idx, item in enumerate(doc.items):
        if not item.original.strip() or not item.correction.strip():
            flagged.append((idx, ValidationFlag.EMPTY_FIELD))
            continue
        if _normalize_ws(item.original) not in normalized_essay:
            flagged.append((idx, ValidationFlag.QUOTE_NOT_FOUND))
            continue
        advisory = ADVISORY_TAG in item.explanation.lower()
        if not advisory and _normalize_ws(item.original).casefold() == _normalize_ws(item.correction).casefold():
            flagged.append((idx, ValidationFlag.CORRECTION_IDENTICAL))
    return ValidationReport(valid_items=len(doc.items) - len(flagged), flagged=flagged)


def category_histogram(docs: Iterable[FeedbackDocument]) -> dict[SyntaxCategory, int]:
    """Item counts per category over a corpus; all seven categories present."""
    counts: Counter = Counter()
    for doc in docs:
        for item in doc.items:
            counts[item.category] += 1
    return {category: counts.get(category, 0) for category in CATEGORY_ORDER}


def doc_to_json(doc: FeedbackDocument) -> dict:
    """JSON shape used inside JSONL records and the annotation API."""
    return {
        "items": [
            {
                "category": item.category.value,
                "original": item.original,
                "correction": item.correction,
                "explanation": item.explanation,
            }
            for item in doc.items
        ],
        "warnings": list(doc.parse_warnings),
    }


def doc_from_json(obj: dict) -> FeedbackDocument:
    items = [
        FeedbackItem(
            category=SyntaxCategory(entry["category"]),
            original=entry["original"],
            correction=entry["correction"],
            explanation=entry["explanation"],
        )
        for entry in obj.get("items", [])
    ]
    return FeedbackDocument(items=items, parse_warnings=list(obj.get("warnings", [])))
