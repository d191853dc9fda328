"""Tokenization, n-gram ROUGE, LCS-based ROUGE-L, and token-length statistics.

Scoring conventions (stated here so reported numbers are interpretable):
F-measure with beta=1, lowercasing via the default "word" scheme, no stemming,
no stopword removal, sentence-level LCS. Corpus aggregation is the arithmetic
mean of per-pair precision/recall/F1.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

# Maximal runs of letters/digits, else any single non-space character
# (punctuation, symbols, underscore) as its own token.
_WORD_RE = re.compile(r"[^\W_]+|\S", re.UNICODE)


def _word_tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


_SCHEMES: dict[str, Callable[[str], list[str]]] = {"word": _word_tokenize}


class SchemeError(ValueError):
    """Unknown or mismatched tokenizer scheme."""


def register_scheme(name: str, fn: Callable[[str], list[str]]) -> None:
    """Register a tokenizer under a scheme identifier."""
    _SCHEMES[name] = fn


def registered_schemes() -> list[str]:
    return sorted(_SCHEMES)


@dataclass(frozen=True)
class TokenSequence:
    """An ordered token list tagged with the scheme that produced it.

    Sequences from different schemes are never comparable.
    """

    tokens: tuple[str, ...]
    scheme: str


def tokenize(text: str, scheme: str = "word") -> TokenSequence:
    if scheme not in _SCHEMES:
        raise SchemeError(
            f"unknown tokenizer scheme '{scheme}'; registered: {', '.join(registered_schemes())}"
        )
    return TokenSequence(tokens=tuple(_SCHEMES[scheme](text)), scheme=scheme)


def register_bpe_scheme(name: str, merges_path: str | Path, vocab_path: str | Path | None = None) -> None:
    """Register a byte-pair-merging scheme from a merges file.

    The merges file holds one "left right" pair per line in priority order
    (lines starting with '#' are skipped). Words are whitespace-split, then
    adjacent symbol pairs are merged greedily by rank, starting from single
    characters. When a vocab file is given, only tokens it lists survive
    merging; others fall back to their unmerged pieces.
    """
    ranks: dict[tuple[str, str], int] = {}
    for line in Path(merges_path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        left, right = line.split()
        ranks[(left, right)] = len(ranks)
    vocab: set[str] | None = None
    if vocab_path is not None:
        vocab = {
            token.strip()
            for token in Path(vocab_path).read_text(encoding="utf-8").splitlines()
            if token.strip()
        }

    def _pair_rank(left: str, right: str) -> int | None:
        rank = ranks.get((left, right))
        if rank is None:
            return None
        if vocab is not None and (left + right) not in vocab:
            return None
        return rank

    def _merge_word(word: str) -> list[str]:
        pieces = list(word)
        while len(pieces) > 1:
            best_rank, best_idx = None, None
            for i in range(len(pieces) - 1):
                rank = _pair_rank(pieces[i], pieces[i + 1])
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_idx = rank, i
            if best_idx is None:
                break
            pieces[best_idx : best_idx + 2] = [pieces[best_idx] + pieces[best_idx + 1]]
        return pieces

    def _bpe_tokenize(text: str) -> list[str]:
        out: list[str] = []
        for word in text.split():
            out.extend(_merge_word(word))
        return out

    register_scheme(name, _bpe_tokenize)


@dataclass(frozen=True)
class RougeScore:
    """Precision/recall/F1 triple, each in [0, 1].

    Per-pair scores are built through from_precision_recall so f1 is the
    harmonic mean; corpus means reuse this container without that identity.
    """

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_precision_recall(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        return cls(precision=precision, recall=recall, f1=f1)


def _require_same_scheme(a: TokenSequence, b: TokenSequence) -> None:
    if a.scheme != b.scheme:
        raise SchemeError(f"scheme mismatch: '{a.scheme}' vs '{b.scheme}'")


def lcs_length(a: TokenSequence, b: TokenSequence) -> int:
    """Longest-common-subsequence length in O(|a|*|b|) time, O(min) space."""
    _require_same_scheme(a, b)
    x, y = a.tokens, b.tokens
    if len(y) > len(x):
        x, y = y, x
    if not y:
        return 0
    prev = [0] * (len(y) + 1)
    for xi in x:
        cur = [0] * (len(y) + 1)
        for j in range(1, len(y) + 1):
            if xi == y[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: TokenSequence, reference: TokenSequence, n: int) -> RougeScore:
    """Clipped n-gram overlap: precision over candidate n-grams, recall over reference."""
    _require_same_scheme(candidate, reference)
    if n < 1:
        raise ValueError("n must be >= 1")
    cand_counts = _ngram_counts(candidate.tokens, n)
    ref_counts = _ngram_counts(reference.tokens, n)
    overlap = sum((cand_counts & ref_counts).values())
    cand_total = sum(cand_counts.values())
    ref_total = sum(ref_counts.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return RougeScore.from_precision_recall(precision, recall)


def rouge_l(candidate: TokenSequence, reference: TokenSequence) -> RougeScore:
    """LCS-based score: precision = LCS/|candidate|, recall = LCS/|reference|."""
    _require_same_scheme(candidate, reference)
    if not candidate.tokens or not reference.tokens:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = lcs_length(candidate, reference)
    return RougeScore.from_precision_recall(
        lcs / len(candidate.tokens), lcs / len(reference.tokens)
    )


@dataclass(frozen=True)
class CorpusRouge:
    """Arithmetic means of per-pair scores over a pair list."""

    n_pairs: int
    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore


def corpus_rouge(pairs: Sequence[tuple[str, str]], scheme: str = "word") -> CorpusRouge:
    """Mean ROUGE-1/2/L over (candidate text, reference text) pairs."""
    if not pairs:
        raise ValueError("corpus_rouge requires at least one pair")
    per_metric: dict[str, list[RougeScore]] = {"rouge1": [], "rouge2": [], "rougeL": []}
    for cand_text, ref_text in pairs:
        cand = tokenize(cand_text, scheme)
        ref = tokenize(ref_text, scheme)
        per_metric["rouge1"].append(rouge_n(cand, ref, 1))
        per_metric["rouge2"].append(rouge_n(cand, ref, 2))
        per_metric["rougeL"].append(rouge_l(cand, ref))

    def mean_score(scores: list[RougeScore]) -> RougeScore:
        n = len(scores)
        return RougeScore(
            precision=sum(s.precision for s in scores) / n,
            recall=sum(s.recall for s in scores) / n,
            f1=sum(s.f1 for s in scores) / n,
        )

    return CorpusRouge(
        n_pairs=len(pairs),
        rouge1=mean_score(per_metric["rouge1"]),
        rouge2=mean_score(per_metric["rouge2"]),
        rougeL=mean_score(per_metric["rougeL"]),
    )


@dataclass(frozen=True)
class Histogram:
    """Token-length histogram with fixed-width buckets keyed by bucket start."""

    bucket_width: int
    counts: dict[int, int]
    total: int
    scheme: str = "word"


def token_length_histogram(
    texts: Iterable[str], scheme: str = "word", bucket_width: int = 50
) -> Histogram:
    """Bin each text's token count into buckets of bucket_width tokens."""
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    counts: Counter = Counter()
    total = 0
    for text in texts:
        length = len(tokenize(text, scheme).tokens)
        counts[(length // bucket_width) * bucket_width] += 1
        total += 1
    return Histogram(bucket_width=bucket_width, counts=dict(counts), total=total, scheme=scheme)


ROUGE_CSV_COLUMNS = [
    "model",
    "n_pairs",
    "rouge1_p",
    "rouge1_r",
    "rouge1_f1",
    "rouge2_p",
    "rouge2_r",
    "rouge2_f1",
    "rougeL_p",
    "rougeL_r",
    "rougeL_f1",
]


def write_rouge_csv(rows: list[tuple[str, CorpusRouge]], path: str | Path) -> None:
    """Emit one CSV row per (model, corpus scores) pair."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROUGE_CSV_COLUMNS)
        for model, scores in rows:
            writer.writerow(
                [
                    model,
                    scores.n_pairs,
                    f"{scores.rouge1.precision:.6f}",
                    f"{scores.rouge1.recall:.6f}",
                    f"{scores.rouge1.f1:.6f}",
                    f"{scores.rouge2.precision:.6f}",
                    f"{scores.rouge2.recall:.6f}",
                    f"{scores.rouge2.f1:.6f}",
                    f"{scores.rougeL.precision:.6f}",
                    f"{scores.rougeL.recall:.6f}",
                    f"{scores.rougeL.f1:.6f}",
                ]
            )


def write_histogram_csv(histogram: Histogram, path: str | Path) -> None:
    """Emit (bucket_start, count) rows sorted by bucket start."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bucket_start", "count"])
        for bucket_start in sorted(histogram.counts):
            writer.writerow([bucket_start, histogram.counts[bucket_start]])
