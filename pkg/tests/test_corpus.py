import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossgram.corpus import (AlignedCorpus, EmptyVocabularyError, MonoCorpus,
                              Vocabulary, build_sampling_table, build_vocab,
                              discard_probability, encode_bitext,
                              encode_corpus, sample_negative, tokenize)


class TestTokenize:
    def test_lowercases_and_splits(self):
        assert tokenize("The cat sits") == ["the", "cat", "sits"]

    def test_empty_line(self):
        assert tokenize("") == []
        assert tokenize("   \t ") == []

    def test_whitespace_runs_without_lowercasing(self):
        assert tokenize("a  b", lowercase=False) == ["a", "b"]
        assert tokenize("A\tB", lowercase=False) == ["A", "B"]

    @given(st.lists(st.text(alphabet="abcXYZ", min_size=1), max_size=8))
    def test_roundtrip_token_count(self, tokens):
        assert tokenize(" ".join(tokens), lowercase=False) == tokens


class TestCorpora:
    def test_mono_from_lines_skips_empty(self):
        corpus = MonoCorpus("en", ["a b", "", "  ", "c"])
        assert list(corpus) == [["a", "b"], ["c"]]

    def test_mono_from_file_is_reiterable(self, tmp_path):
        p = tmp_path / "mono.txt"
        p.write_text("A b\nc d\n")
        corpus = MonoCorpus("en", p)
        assert list(corpus) == [["a", "b"], ["c", "d"]]
        assert list(corpus) == [["a", "b"], ["c", "d"]]

    def test_aligned_pairs_and_empty_skip_count(self):
        bt = AlignedCorpus("en", "fr", ["a b", "", "c", "d"],
                           ["x", "y", "", "w z"])
        pairs = list(bt.pairs())
        assert pairs == [(["a", "b"], ["x"]), (["d"], ["w", "z"])]
        assert bt.skipped_pairs == 2

    def test_aligned_stops_at_shorter_side(self):
        bt = AlignedCorpus("en", "fr", ["a", "b", "c"], ["x"])
        assert len(list(bt.pairs())) == 1

    def test_mono_views_share_language_tags(self):
        bt = AlignedCorpus("en", "fr", ["a"], ["x"])
        ve, vf = bt.mono_views()
        assert (ve.language, vf.language) == ("en", "fr")
        assert list(ve) == [["a"]]
        assert list(vf) == [["x"]]


class TestBuildVocab:
    def test_counts_and_ordering(self):
        vocab = build_vocab(MonoCorpus("en", ["a a b"]), min_count=1)
        assert vocab.size == 2
        assert vocab.index("a") == 0
        assert vocab.counts[vocab.index("a")] == 2
        assert vocab.counts[vocab.index("b")] == 1

    def test_min_count_threshold(self):
        vocab = build_vocab(MonoCorpus("en", ["a a b"]), min_count=2)
        assert vocab.size == 1 and "a" in vocab and "b" not in vocab

    def test_empty_vocabulary_error(self):
        with pytest.raises(EmptyVocabularyError):
            build_vocab(MonoCorpus("en", ["a b"]), min_count=5)

    def test_tie_break_is_lexicographic(self):
        vocab = build_vocab(MonoCorpus("en", ["zz aa zz aa mm"]), min_count=1)
        assert vocab.words == ["aa", "zz", "mm"]

    def test_total_tokens_counts_retained_occurrences(self):
        vocab = build_vocab(MonoCorpus("en", ["a a a b b c"]), min_count=2)
        assert vocab.total_tokens == 5

    def test_counts_match_brute_force_recount(self):
        rng = np.random.default_rng(0)
        lines = [" ".join(f"w{rng.integers(30)}" for _ in range(rng.integers(1, 12)))
                 for _ in range(1000)]
        vocab = build_vocab(MonoCorpus("en", lines), min_count=1)
        expected = Counter(tok for line in lines for tok in line.split())
        assert vocab.size == len(expected)
        for word, count in expected.items():
            assert vocab.counts[vocab.index(word)] == count

    def test_rebuild_is_deterministic(self):
        lines = ["b a", "a c c", "b b"]
        v1 = build_vocab(MonoCorpus("en", lines), min_count=1)
        v2 = build_vocab(MonoCorpus("en", lines), min_count=1)
        assert v1.words == v2.words
        assert np.array_equal(v1.counts, v2.counts)

    def test_multiple_corpora_merge(self):
        v = build_vocab([MonoCorpus("en", ["a b"]), MonoCorpus("en", ["a c"])],
                        min_count=1)
        assert v.counts[v.index("a")] == 2

    def test_mixed_language_corpora_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([MonoCorpus("en", ["a"]), MonoCorpus("fr", ["b"])])

    def test_encode_drops_oov(self):
        vocab = build_vocab(MonoCorpus("en", ["a a b b"]), min_count=2)
        assert vocab.encode(["a", "zzz", "b"]) == [vocab.index("a"), vocab.index("b")]

    def test_dump_format(self, tmp_path):
        vocab = build_vocab(MonoCorpus("en", ["a a b"]), min_count=1)
        out = tmp_path / "v.tsv"
        with open(out, "w") as fh:
            vocab.dump(fh)
        assert out.read_text() == "a\t2\nb\t1\n"

    @given(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=60))
    @settings(max_examples=50, deadline=None)
    def test_index_order_property(self, tokens):
        vocab = build_vocab(MonoCorpus("xx", [" ".join(tokens)]), min_count=1)
        counts = Counter(tokens)
        expected = sorted(counts, key=lambda w: (-counts[w], w))
        assert vocab.words == expected
        assert list(vocab.counts) == [counts[w] for w in expected]


class TestDiscardProbability:
    def test_boundary_and_clamp(self):
        assert discard_probability(1e-4, 1e-4) == 0.0
        assert discard_probability(5e-5, 1e-4) == 0.0

    def test_quarter(self):
        assert discard_probability(4e-4, 1e-4) == pytest.approx(0.5)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            discard_probability(0.0, 1e-4)
        with pytest.raises(ValueError):
            discard_probability(0.5, 0.0)

    @given(st.floats(1e-9, 1.0), st.floats(1e-9, 1.0))
    def test_always_a_probability(self, freq, t):
        assert 0.0 <= discard_probability(freq, t) < 1.0

    def test_vocab_discard_probs_in_range(self):
        lines = ["a a a a b b c"] * 10
        vocab = build_vocab(MonoCorpus("en", lines), min_count=1, subsample_t=0.05)
        assert np.all(vocab.discard_probs >= 0)
        assert np.all(vocab.discard_probs < 1)
        f_a = vocab.counts[vocab.index("a")] / vocab.total_tokens
        assert vocab.discard_probs[vocab.index("a")] == pytest.approx(
            1 - math.sqrt(0.05 / f_a), abs=1e-6)

    def test_zero_threshold_disables(self):
        vocab = build_vocab(MonoCorpus("en", ["a a a b"]), min_count=1,
                            subsample_t=0.0)
        assert np.all(vocab.discard_probs == 0)


class TestSamplingTable:
    def _vocab(self, counts: dict, **kw):
        lines = [" ".join([w] * c) for w, c in counts.items()]
        return build_vocab(MonoCorpus("en", lines), min_count=1, **kw)

    def test_symmetric_counts_split_evenly(self):
        vocab = self._vocab({"a": 10, "b": 10})
        freq = np.bincount(vocab.neg_table, minlength=2) / len(vocab.neg_table)
        assert freq == pytest.approx([0.5, 0.5], abs=1e-3)

    def test_power_law_weighting(self):
        vocab = self._vocab({"a": 4, "b": 1})
        p_a = 4 ** 0.75 / (4 ** 0.75 + 1)
        freq = np.bincount(vocab.neg_table, minlength=2) / len(vocab.neg_table)
        assert freq[vocab.index("a")] == pytest.approx(p_a, abs=1e-3)

    def test_alpha_zero_uniform(self):
        vocab = self._vocab({"a": 100, "b": 1, "c": 7}, alpha=0.0)
        freq = np.bincount(vocab.neg_table, minlength=3) / len(vocab.neg_table)
        assert freq == pytest.approx([1 / 3] * 3, abs=1e-3)

    def test_alpha_one_proportional(self):
        vocab = self._vocab({"a": 3, "b": 1}, alpha=1.0)
        freq = np.bincount(vocab.neg_table, minlength=2) / len(vocab.neg_table)
        assert freq[vocab.index("a")] == pytest.approx(0.75, abs=1e-3)

    def test_table_slot_shares_match_powered_counts_within_one_percent(self):
        rng = np.random.default_rng(4)
        counts = {f"w{i:02d}": int(c) for i, c in
                  enumerate(rng.integers(1, 500, size=40))}
        vocab = self._vocab(counts)
        powered = vocab.counts.astype(np.float64) ** 0.75
        expected = powered / powered.sum()
        freq = np.bincount(vocab.neg_table, minlength=vocab.size) / len(vocab.neg_table)
        assert np.abs(freq - expected).max() < 0.01

    def test_empirical_draws_within_one_percent(self):
        vocab = self._vocab({"a": 81, "b": 16, "c": 1})
        rng = np.random.default_rng(9)
        draws = vocab.neg_table[rng.integers(0, len(vocab.neg_table), size=10 ** 6)]
        freq = np.bincount(draws, minlength=3) / 10 ** 6
        powered = vocab.counts.astype(np.float64) ** 0.75
        assert np.abs(freq - powered / powered.sum()).max() < 0.01

    def test_explicit_table_size(self):
        vocab = build_sampling_table(self._vocab({"a": 2, "b": 1}),
                                     table_size=1234)
        assert len(vocab.neg_table) == 1234


class TestSampleNegative:
    def _vocab(self):
        return build_vocab(MonoCorpus("en", ["a a a a b b c"]), min_count=1)

    def test_never_returns_excluded(self):
        vocab = self._vocab()
        rng = np.random.default_rng(1)
        assert all(sample_negative(vocab, rng, exclude=0) != 0 for _ in range(500))

    def test_two_word_exclusion_forces_other(self):
        vocab = build_vocab(MonoCorpus("en", ["a a b"]), min_count=1)
        rng = np.random.default_rng(2)
        assert all(sample_negative(vocab, rng, exclude=vocab.index("a"))
                   == vocab.index("b") for _ in range(50))

    def test_single_word_exclusion_error(self):
        vocab = build_vocab(MonoCorpus("en", ["a a"]), min_count=1)
        with pytest.raises(ValueError):
            sample_negative(vocab, np.random.default_rng(0), exclude=0)

    def test_fixed_seed_reproducible(self):
        vocab = self._vocab()
        seq1 = [sample_negative(vocab, np.random.default_rng(7)) for _ in range(20)]
        seq2 = [sample_negative(vocab, np.random.default_rng(7)) for _ in range(20)]
        assert seq1 == seq2


class TestPackedEncoding:
    def _vocab(self, lines):
        return build_vocab(MonoCorpus("en", lines), min_count=1)

    def test_offsets_and_lookup(self):
        lines = ["a b c", "b b"]
        packed = encode_corpus(MonoCorpus("en", lines), self._vocab(lines))
        assert packed.n_sentences == 2
        assert packed.total_tokens == 5
        assert list(packed.offsets) == [0, 3, 5]
        v = self._vocab(lines)
        assert list(packed.sentence(1)) == [v.index("b"), v.index("b")]

    def test_fully_oov_sentences_dropped(self):
        vocab = self._vocab(["a a"])
        packed = encode_corpus(MonoCorpus("en", ["a a", "zz yy", "a"]), vocab)
        assert packed.n_sentences == 2
        assert packed.total_tokens == 3

    def test_truncation_at_max_len(self):
        lines = [" ".join(["a"] * 30)]
        packed = encode_corpus(MonoCorpus("en", lines), self._vocab(lines),
                               max_sentence_len=10)
        assert packed.total_tokens == 10
        assert packed.max_len == 10

    def test_bitext_drops_pairs_empty_after_filtering(self):
        va = self._vocab(["a b a b"])
        vb = build_vocab(MonoCorpus("fr", ["x y x y"]), min_count=1)
        bt = AlignedCorpus("en", "fr",
                           ["a b", "zz", "a", "b b"],
                           ["x", "y", "qq", "y x"])
        pe, pf, dropped = encode_bitext(bt, va, vb)
        assert dropped == 2
        assert pe.n_sentences == pf.n_sentences == 2
        assert pe.total_tokens == 4
        assert pf.total_tokens == 3
