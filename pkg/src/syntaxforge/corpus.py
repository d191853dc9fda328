"""Essay corpus ingestion, anonymization-placeholder detection, and length filtering.

Corpora arrive either as ASAP-style TSV (header row with essay_id, essay_set,
essay columns) or as JSONL with keys {"id", "essay_set", "text", "meta"}.
Essays carry placeholders such as ``@PERSON1`` inserted by the original
anonymization pass; this module only detects them, it never produces them.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

# Generic pattern: ASAP corpora contain kinds beyond the classic NER set
# (e.g. @CAPS, @NUM), so the letter run is open-ended.
PLACEHOLDER_RE = re.compile(r"@([A-Z]+)([0-9]*)")

# Entity kinds produced by the original NER-based anonymization.
KNOWN_KINDS = frozenset(
    {"PERSON", "ORGANIZATION", "LOCATION", "DATE", "TIME", "MONEY", "PERCENT"}
)

ESSAY_SET_RANGE = range(1, 9)

REQUIRED_TSV_COLUMNS = ("essay_id", "essay_set", "essay")


class CorpusError(Exception):
    """Base error for corpus loading problems."""


class SchemaError(CorpusError):
    """Input file does not match the expected schema."""


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs in text."""
    return len(text.split())


@dataclass(frozen=True)
class PlaceholderSpan:
    """One anonymization placeholder occurrence inside an essay.

    Offsets are codepoint indices into the essay's unicode text, so
    ``text[start:end] == raw`` always holds.
    """

    start: int
    end: int
    kind: str
    index: int | None
    raw: str


@dataclass
class Essay:
    """One student essay with derived word count and open metadata."""

    id: str
    essay_set: int
    text: str
    word_count: int = field(default=-1)
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.word_count < 0:
            self.word_count = word_count(self.text)


@dataclass(frozen=True)
class LengthFilterPolicy:
    """Inclusive word-count bounds for keeping an essay."""

    min_words: int = 100
    max_words: int = 700

    def __post_init__(self) -> None:
        if self.min_words <= 0 or self.max_words <= 0:
            raise ValueError("length bounds must be positive")
        if self.min_words > self.max_words:
            raise ValueError("min_words must not exceed max_words")


@dataclass(frozen=True)
class DroppedEssay:
    essay: Essay
    reason: str  # "too_short" | "too_long"


def detect_placeholders(text: str) -> list[PlaceholderSpan]:
    """Find every maximal placeholder match, sorted by start offset.

    The kind is the uppercase letter run and the index the optional digit
    suffix; both come straight from the match.
    """
    spans = []
    for m in PLACEHOLDER_RE.finditer(text):
        kind, digits = m.group(1), m.group(2)
        spans.append(
            PlaceholderSpan(
                start=m.start(),
                end=m.end(),
                kind=kind,
                index=int(digits) if digits else None,
                raw=m.group(0),
            )
        )
    return spans


def filter_by_length(
    essays: list[Essay], policy: LengthFilterPolicy = LengthFilterPolicy()
) -> tuple[list[Essay], list[DroppedEssay]]:
    """Partition essays into (kept, dropped-with-reason), preserving order."""
    kept: list[Essay] = []
    dropped: list[DroppedEssay] = []
    for essay in essays:
        if essay.word_count < policy.min_words:
            dropped.append(DroppedEssay(essay, "too_short"))
        elif essay.word_count > policy.max_words:
            dropped.append(DroppedEssay(essay, "too_long"))
        else:
            kept.append(essay)
    return kept, dropped


def _decode_lines(path: Path) -> list[str]:
    """Decode a file line by line: UTF-8 first, Latin-1 fallback with a warning."""
    raw = path.read_bytes()
    if raw.startswith(b"\xef\xbb\xbf"):
        raw = raw[3:]
    lines = []
    for lineno, chunk in enumerate(raw.split(b"\n"), start=1):
        chunk = chunk.rstrip(b"\r")
        try:
            lines.append(chunk.decode("utf-8"))
        except UnicodeDecodeError:
            logger.warning("%s line %d: not valid UTF-8, decoded as Latin-1", path, lineno)
            lines.append(chunk.decode("latin-1"))
    # Trailing newline produces one empty final element; drop it.
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _check_essay_set(essay_id: str, essay_set: int) -> None:
    if essay_set not in ESSAY_SET_RANGE:
        logger.warning(
            "essay %s: essay_set %d outside the expected 1..8 range", essay_id, essay_set
        )


def _load_tsv(path: Path) -> list[Essay]:
    lines = _decode_lines(path)
    if not lines:
        raise SchemaError(f"{path}: empty file, expected a header row")
    reader = csv.reader(lines, delimiter="\t")
    header = next(reader)
    columns = {name: i for i, name in enumerate(header)}
    for required in REQUIRED_TSV_COLUMNS:
        if required not in columns:
            raise SchemaError(f"{path}: missing required column '{required}'")
    extra_cols = [name for name in header if name not in REQUIRED_TSV_COLUMNS]

    essays: list[Essay] = []
    seen_ids: set[str] = set()
    for rowno, row in enumerate(reader, start=2):
        if not row or all(cell == "" for cell in row):
            continue
        if len(row) < len(header):
            raise SchemaError(f"{path} row {rowno}: expected {len(header)} columns, got {len(row)}")
        essay_id = row[columns["essay_id"]]
        try:
            essay_set = int(row[columns["essay_set"]])
        except ValueError:
            raise SchemaError(
                f"{path} row {rowno}: essay_set '{row[columns['essay_set']]}' is not an integer"
            ) from None
        if essay_id in seen_ids:
            raise CorpusError(f"{path} row {rowno}: duplicate essay id '{essay_id}'")
        seen_ids.add(essay_id)
        _check_essay_set(essay_id, essay_set)
        meta = {name: row[columns[name]] for name in extra_cols}
        essays.append(Essay(id=essay_id, essay_set=essay_set, text=row[columns["essay"]], meta=meta))
    return essays


def _load_jsonl(path: Path) -> list[Essay]:
    essays: list[Essay] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(_decode_lines(path), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path} line {lineno}: invalid JSON ({exc})") from None
        for key in ("id", "essay_set", "text"):
            if key not in obj:
                raise SchemaError(f"{path} line {lineno}: missing required key '{key}'")
        essay_id = str(obj["id"])
        if essay_id in seen_ids:
            raise CorpusError(f"{path} line {lineno}: duplicate essay id '{essay_id}'")
        seen_ids.add(essay_id)
        essay_set = int(obj["essay_set"])
        _check_essay_set(essay_id, essay_set)
        meta = {str(k): str(v) for k, v in (obj.get("meta") or {}).items()}
        essays.append(Essay(id=essay_id, essay_set=essay_set, text=str(obj["text"]), meta=meta))
    return essays


def load_corpus(path: str | Path, format: str = "tsv") -> list[Essay]:
    """Load a corpus file, one Essay per row/line, input order preserved."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    if format == "tsv":
        return _load_tsv(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise ValueError(f"unknown corpus format '{format}' (expected 'tsv' or 'jsonl')")


def essay_to_json(essay: Essay) -> dict:
    return {
        "id": essay.id,
        "essay_set": essay.essay_set,
        "text": essay.text,
        "word_count": essay.word_count,
        "meta": essay.meta,
    }


def save_corpus_jsonl(essays: list[Essay], path: str | Path) -> int:
    """Write essays as JSONL (UTF-8, LF endings, stable key order). Returns the count."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for essay in essays:
            fh.write(json.dumps(essay_to_json(essay), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
    return len(essays)
