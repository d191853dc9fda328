from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from syntaxforge.metrics import (
    Histogram,
    SchemeError,
    TokenSequence,
    corpus_rouge,
    lcs_length,
    register_bpe_scheme,
    rouge_l,
    rouge_n,
    token_length_histogram,
    tokenize,
    write_histogram_csv,
    write_rouge_csv,
)

# ---------------------------------------------------------------------------
# Independent oracles. These deliberately avoid the implementation's Counter
# intersection and rolling-row DP: clipped counts come from list.count over
# explicitly enumerated n-grams, LCS from a full 2D table or subsequence
# enumeration.


def oracle_clipped_rouge_n(cand: list[str], ref: list[str], n: int) -> tuple[float, float, float]:
    cand_ngrams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    ref_ngrams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    overlap = sum(
        min(cand_ngrams.count(g), ref_ngrams.count(g)) for g in set(ref_ngrams)
    )
    p = overlap / len(cand_ngrams) if cand_ngrams else 0.0
    r = overlap / len(ref_ngrams) if ref_ngrams else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def oracle_lcs_table(a: list[str], b: list[str]) -> int:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def oracle_lcs_enumeration(a: list[str], b: list[str]) -> int:
    """Longest subsequence of a that is also a subsequence of b, by enumeration."""
    if len(a) > len(b):
        a, b = b, a

    def is_subsequence(sub: tuple[str, ...], seq: list[str]) -> bool:
        it = iter(seq)
        return all(any(tok == other for other in it) for tok in sub)

    best = 0
    for mask in range(1 << len(a)):
        sub = tuple(a[i] for i in range(len(a)) if mask >> i & 1)
        if len(sub) > best and is_subsequence(sub, b):
            best = len(sub)
    return best


def seq(tokens: list[str], scheme: str = "word") -> TokenSequence:
    return TokenSequence(tokens=tuple(tokens), scheme=scheme)


# ---------------------------------------------------------------------------
# Tokenizer


class TestTokenize:
    def test_empty(self):
        assert tokenize("").tokens == ()

    def test_punctuation_split(self):
        assert tokenize("Hello, world!").tokens == ("hello", ",", "world", "!")

    def test_contractions_and_hyphens(self):
        assert tokenize("It's 2-part").tokens == ("it", "'", "s", "2", "-", "part")

    def test_unknown_scheme_lists_registered(self):
        with pytest.raises(SchemeError, match="word"):
            tokenize("x", scheme="nope")

    def test_determinism(self):
        text = "Some, mixed: text! with 42 numbers?"
        assert tokenize(text) == tokenize(text)

    def test_bpe_scheme_merges(self, tmp_path):
        merges = tmp_path / "merges.txt"
        merges.write_text("a b\nab c\n", encoding="utf-8")
        register_bpe_scheme("test-bpe", merges)
        assert tokenize("abc abd", scheme="test-bpe").tokens == ("abc", "ab", "d")

    def test_bpe_scheme_vocab_limits_merges(self, tmp_path):
        merges = tmp_path / "merges.txt"
        merges.write_text("a b\nab c\n", encoding="utf-8")
        vocab = tmp_path / "vocab.txt"
        vocab.write_text("ab\n", encoding="utf-8")
        register_bpe_scheme("test-bpe-vocab", merges, vocab)
        assert tokenize("abc", scheme="test-bpe-vocab").tokens == ("ab", "c")


# ---------------------------------------------------------------------------
# LCS


class TestLcs:
    def test_empty_side(self):
        assert lcs_length(seq([]), seq(["a", "b"])) == 0

    def test_identity(self):
        s = seq(["x", "y", "z", "y"])
        assert lcs_length(s, s) == 4

    def test_classic_instance(self):
        a = seq(list("ABCBDAB"))
        b = seq(list("BDCABA"))
        assert lcs_length(a, b) == 4
        assert oracle_lcs_table(list("ABCBDAB"), list("BDCABA")) == 4

    def test_scheme_mismatch(self):
        with pytest.raises(SchemeError):
            lcs_length(seq(["a"]), seq(["a"], scheme="other"))

    @given(
        st.lists(st.sampled_from("xyz"), max_size=10),
        st.lists(st.sampled_from("xyz"), max_size=10),
    )
    def test_matches_both_oracles(self, a, b):
        got = lcs_length(seq(a), seq(b))
        assert got == oracle_lcs_table(a, b)
        assert got == oracle_lcs_enumeration(a, b)
        assert got == lcs_length(seq(b), seq(a))
        assert got <= min(len(a), len(b))


# ---------------------------------------------------------------------------
# ROUGE worked example: candidate "the cat on the mat" vs reference
# "the cat sat on the mat". Expected values recomputed by the oracles below
# before being frozen in the assertions.

CAND = "the cat on the mat"
REF = "the cat sat on the mat"


class TestRougeWorkedExample:
    def test_oracle_confirms_frozen_values(self):
        cand, ref = CAND.split(), REF.split()
        assert oracle_clipped_rouge_n(cand, ref, 1) == pytest.approx((1.0, 5 / 6, 10 / 11))
        assert oracle_clipped_rouge_n(cand, ref, 2) == pytest.approx((3 / 4, 3 / 5, 2 / 3))
        assert oracle_lcs_table(cand, ref) == 5

    def test_rouge1(self):
        score = rouge_n(tokenize(CAND), tokenize(REF), 1)
        assert score.precision == pytest.approx(1.0, abs=1e-12)
        assert score.recall == pytest.approx(5 / 6, abs=1e-12)
        assert score.f1 == pytest.approx(10 / 11, abs=1e-12)

    def test_rouge2(self):
        score = rouge_n(tokenize(CAND), tokenize(REF), 2)
        assert score.precision == pytest.approx(3 / 4, abs=1e-12)
        assert score.recall == pytest.approx(3 / 5, abs=1e-12)
        assert score.f1 == pytest.approx(2 / 3, abs=1e-12)

    def test_rouge_l(self):
        score = rouge_l(tokenize(CAND), tokenize(REF))
        assert score.precision == pytest.approx(1.0, abs=1e-12)
        assert score.recall == pytest.approx(5 / 6, abs=1e-12)
        assert score.f1 == pytest.approx(10 / 11, abs=1e-12)


class TestRougeProperties:
    def test_identical_sequences_score_one(self):
        s = tokenize("a few plain words here")
        for n in (1, 2):
            score = rouge_n(s, s, n)
            assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)
        score = rouge_l(s, s)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_disjoint_vocabularies_score_zero(self):
        a, b = tokenize("alpha beta gamma"), tokenize("delta epsilon")
        assert rouge_n(a, b, 1) == rouge_n(a, b, 2) == rouge_l(a, b)
        assert rouge_l(a, b).f1 == 0.0

    def test_empty_side_yields_zeros(self):
        empty, full = tokenize(""), tokenize("a b")
        for score in (rouge_n(empty, full, 1), rouge_n(full, empty, 1), rouge_l(empty, full)):
            assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    @given(
        st.lists(st.sampled_from("abcde"), max_size=12),
        st.lists(st.sampled_from("abcde"), max_size=12),
        st.integers(min_value=1, max_value=2),
    )
    def test_swap_symmetry(self, a, b, n):
        fwd = rouge_n(seq(a), seq(b), n)
        rev = rouge_n(seq(b), seq(a), n)
        assert fwd.precision == pytest.approx(rev.recall, abs=1e-12)
        assert fwd.recall == pytest.approx(rev.precision, abs=1e-12)
        lf, lr = rouge_l(seq(a), seq(b)), rouge_l(seq(b), seq(a))
        assert lf.precision == pytest.approx(lr.recall, abs=1e-12)

    @given(
        st.lists(st.sampled_from("abcde"), min_size=1, max_size=12),
        st.lists(st.sampled_from("abcde"), min_size=1, max_size=12),
    )
    def test_scores_in_unit_interval_and_f1_harmonic(self, a, b):
        for score in (rouge_n(seq(a), seq(b), 1), rouge_n(seq(a), seq(b), 2), rouge_l(seq(a), seq(b))):
            for value in (score.precision, score.recall, score.f1):
                assert 0.0 <= value <= 1.0
            if score.precision + score.recall > 0:
                expected = 2 * score.precision * score.recall / (score.precision + score.recall)
                assert score.f1 == pytest.approx(expected, abs=1e-12)
                assert min(score.precision, score.recall) - 1e-12 <= score.f1
                assert score.f1 <= max(score.precision, score.recall) + 1e-12
            else:
                assert score.f1 == 0.0

    @given(
        st.lists(st.sampled_from("abc"), min_size=1, max_size=10),
        st.lists(st.sampled_from("abc"), min_size=1, max_size=10),
    )
    def test_rouge_l_perfect_iff_identical(self, a, b):
        score = rouge_l(seq(a), seq(b))
        assert (score.f1 == pytest.approx(1.0, abs=1e-12)) == (a == b)


class TestRandomizedOracleEquivalence:
    def test_thousand_random_pairs(self):
        rng = random.Random(1234)
        alphabet = "abcde"
        for _ in range(1000):
            a = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
            b = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
            for n in (1, 2):
                got = rouge_n(seq(a), seq(b), n)
                want = oracle_clipped_rouge_n(a, b, n)
                assert got.precision == pytest.approx(want[0], abs=1e-9)
                assert got.recall == pytest.approx(want[1], abs=1e-9)
                assert got.f1 == pytest.approx(want[2], abs=1e-9)
            lcs = oracle_lcs_table(a, b)
            got_l = rouge_l(seq(a), seq(b))
            if a and b:
                assert got_l.precision == pytest.approx(lcs / len(a), abs=1e-9)
                assert got_l.recall == pytest.approx(lcs / len(b), abs=1e-9)


class TestCorpusRouge:
    def test_single_identical_pair(self):
        report = corpus_rouge([("same words here", "same words here")])
        assert report.n_pairs == 1
        for score in (report.rouge1, report.rouge2, report.rougeL):
            assert score.f1 == pytest.approx(1.0)

    def test_mean_of_one_and_zero(self):
        report = corpus_rouge([("aa bb", "aa bb"), ("cc dd", "ee ff")])
        assert report.rouge1.f1 == pytest.approx(0.5)

    def test_mean_matches_per_pair_oracle(self):
        rng = random.Random(7)
        texts = [
            (
                " ".join(rng.choice("abcde") for _ in range(rng.randint(1, 10))),
                " ".join(rng.choice("abcde") for _ in range(rng.randint(1, 10))),
            )
            for _ in range(5)
        ]
        report = corpus_rouge(texts)
        per_pair = [oracle_clipped_rouge_n(c.split(), r.split(), 1) for c, r in texts]
        assert report.rouge1.f1 == pytest.approx(
            sum(p[2] for p in per_pair) / 5, abs=1e-12
        )
        assert report.rouge1.precision == pytest.approx(
            sum(p[0] for p in per_pair) / 5, abs=1e-12
        )

    def test_empty_pairs_error(self):
        with pytest.raises(ValueError):
            corpus_rouge([])


class TestHistogram:
    def test_empty(self):
        hist = token_length_histogram([])
        assert hist.counts == {}
        assert hist.total == 0

    def test_width_one(self):
        hist = token_length_histogram(["a b", "a b c"], bucket_width=1)
        assert hist.counts == {2: 1, 3: 1}
        assert hist.total == 2

    def test_hundred_synthetic_texts_match_hand_binning(self):
        rng = random.Random(99)
        lengths = [rng.randint(0, 400) for _ in range(100)]
        texts = [" ".join(["w"] * n) for n in lengths]
        hist = token_length_histogram(texts, bucket_width=50)
        expected: dict[int, int] = {}
        for n in lengths:
            bucket = (n // 50) * 50
            expected[bucket] = expected.get(bucket, 0) + 1
        assert hist.counts == expected
        assert hist.total == 100
        assert sum(hist.counts.values()) == hist.total

    def test_bad_width(self):
        with pytest.raises(ValueError):
            token_length_histogram(["a"], bucket_width=0)


class TestCsvWriters:
    def test_rouge_csv_shape(self, tmp_path):
        report = corpus_rouge([("a b", "a b")])
        path = tmp_path / "rouge.csv"
        write_rouge_csv([("m1", report)], path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("model,n_pairs,rouge1_p")
        assert lines[1].startswith("m1,1,1.000000")

    def test_histogram_csv_sorted(self, tmp_path):
        hist = Histogram(bucket_width=10, counts={20: 2, 0: 1}, total=3)
        path = tmp_path / "hist.csv"
        write_histogram_csv(hist, path)
        assert path.read_text(encoding="utf-8") == "bucket_start,count\n0,1\n20,2\n"
