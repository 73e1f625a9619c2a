"""Corpus ingestion, vocabularies, subsampling and negative-sampling tables.

Text inputs are line-oriented UTF-8, one sentence per line, tokens separated
by whitespace. Aligned bitext is two parallel files with line i of one side
translating line i of the other.
"""

from __future__ import annotations

import gzip
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

NEG_TABLE_MAX_SIZE = 10_000_000
NEG_TABLE_MIN_SIZE = 100_000


class EmptyVocabularyError(ValueError):
    """No token survived the min_count threshold."""


def tokenize(line: str, lowercase: bool = True) -> list[str]:
    """Split a line on runs of whitespace, optionally lowercasing first."""
    if lowercase:
        line = line.lower()
    return line.split()


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def _iter_lines(source) -> Iterator[str]:
    """Yield lines from a path or from any re-iterable of strings."""
    if isinstance(source, (str, Path)):
        with _open_text(source) as fh:
            for line in fh:
                yield line
    else:
        for line in source:
            yield line


class MonoCorpus:
    """A monolingual sentence stream.

    ``source`` is a file path (optionally .gz) or a re-iterable of lines,
    e.g. a list of strings. Empty lines are skipped; every yielded sentence
    is a nonempty token list.
    """

    def __init__(self, language: str, source, lowercase: bool = True):
        if not language:
            raise ValueError("language id must be nonempty")
        self.language = language
        self.source = source
        self.lowercase = lowercase

    def sentences(self) -> Iterator[list[str]]:
        for line in _iter_lines(self.source):
            tokens = tokenize(line, self.lowercase)
            if tokens:
                yield tokens

    def __iter__(self) -> Iterator[list[str]]:
        return self.sentences()


class AlignedCorpus:
    """A sentence-aligned bitext stream.

    Pairs where either side is empty are skipped; ``skipped_pairs`` holds the
    count after an iteration completes. If the two files disagree in length,
    iteration stops at the shorter side.
    """

    def __init__(self, lang_e: str, lang_f: str, source_e, source_f,
                 lowercase: bool = True):
        if lang_e == lang_f:
            raise ValueError("aligned corpus needs two distinct languages")
        self.lang_e = lang_e
        self.lang_f = lang_f
        self.source_e = source_e
        self.source_f = source_f
        self.lowercase = lowercase
        self.skipped_pairs = 0

    def pairs(self) -> Iterator[tuple[list[str], list[str]]]:
        self.skipped_pairs = 0
        for line_e, line_f in zip(_iter_lines(self.source_e),
                                  _iter_lines(self.source_f)):
            toks_e = tokenize(line_e, self.lowercase)
            toks_f = tokenize(line_f, self.lowercase)
            if not toks_e or not toks_f:
                self.skipped_pairs += 1
                continue
            yield toks_e, toks_f

    def __iter__(self):
        return self.pairs()

    def mono_views(self) -> tuple[MonoCorpus, MonoCorpus]:
        """Each side of the bitext as a monolingual corpus (for vocab counts)."""
        return (MonoCorpus(self.lang_e, self.source_e, self.lowercase),
                MonoCorpus(self.lang_f, self.source_f, self.lowercase))


@dataclass
class Vocabulary:
    """Per-language token inventory.

    Indices are dense 0..V-1, assigned in descending count order with
    lexicographic tie-break, so rebuilding from the same corpus is
    deterministic. ``discard_probs[i]`` is the probability that an occurrence
    of word i is dropped by frequent-word subsampling; ``neg_table`` is a
    precomputed index array realizing the count^alpha draw distribution.
    """

    language: str
    words: list[str]
    word_to_index: dict[str, int]
    counts: np.ndarray            # int64, per index
    total_tokens: int             # retained-token occurrences
    discard_probs: np.ndarray = field(default=None, repr=False)
    neg_table: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_index

    def index(self, word: str) -> int:
        return self.word_to_index[word]

    def encode(self, tokens: Sequence[str]) -> list[int]:
        """Map tokens to indices, silently dropping out-of-vocabulary ones."""
        w2i = self.word_to_index
        return [w2i[t] for t in tokens if t in w2i]

    def dump(self, fh) -> None:
        """Write ``word<TAB>count`` lines in descending count order."""
        for i, w in enumerate(self.words):
            fh.write(f"{w}\t{int(self.counts[i])}\n")


def discard_probability(freq: float, t: float) -> float:
    """Subsampling discard probability max(0, 1 - sqrt(t/freq)).

    ``freq`` is the word's fraction of total tokens, ``t`` the subsample
    threshold. Words at or below the threshold are never discarded.
    """
    if freq <= 0:
        raise ValueError(f"freq must be positive, got {freq}")
    if t <= 0:
        raise ValueError(f"subsample threshold must be positive, got {t}")
    return max(0.0, 1.0 - math.sqrt(t / freq))


def build_sampling_table(vocab: Vocabulary, alpha: float = 0.75,
                         table_size: int | None = None) -> Vocabulary:
    """Fill ``vocab.neg_table`` so index i occupies a share of slots
    proportional to count(i)^alpha.
    """
    if vocab.size == 0:
        raise EmptyVocabularyError("cannot build a sampling table on an empty vocabulary")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if table_size is None:
        table_size = min(NEG_TABLE_MAX_SIZE, max(NEG_TABLE_MIN_SIZE, 1000 * vocab.size))
    weights = np.power(vocab.counts.astype(np.float64), alpha)
    cum = np.cumsum(weights)
    cum /= cum[-1]
    # slot j holds the first index whose cumulative share exceeds j's midpoint
    positions = (np.arange(table_size, dtype=np.float64) + 0.5) / table_size
    table = np.searchsorted(cum, positions).astype(np.int32)
    vocab.neg_table = table
    return vocab


def build_vocab(corpora, min_count: int = 5, subsample_t: float = 1e-4,
                alpha: float = 0.75) -> Vocabulary:
    """Count tokens over one or more corpora of the same language and build
    the full Vocabulary (indices, subsampling probabilities, sampling table).

    ``subsample_t=0`` disables subsampling (all discard probabilities zero).
    Raises EmptyVocabularyError when nothing reaches ``min_count``.
    """
    if isinstance(corpora, MonoCorpus):
        corpora = [corpora]
    corpora = list(corpora)
    if not corpora:
        raise ValueError("need at least one corpus")
    language = corpora[0].language
    for c in corpora:
        if c.language != language:
            raise ValueError(
                f"all corpora must share one language, got {c.language!r} and {language!r}")

    raw = Counter()
    for corpus in corpora:
        for sentence in corpus.sentences():
            raw.update(sentence)

    kept = [(w, c) for w, c in raw.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no {language!r} token occurs at least {min_count} times")
    kept.sort(key=lambda wc: (-wc[1], wc[0]))

    words = [w for w, _ in kept]
    counts = np.array([c for _, c in kept], dtype=np.int64)
    total = int(counts.sum())
    vocab = Vocabulary(
        language=language,
        words=words,
        word_to_index={w: i for i, w in enumerate(words)},
        counts=counts,
        total_tokens=total,
    )

    if subsample_t > 0:
        freqs = counts / total
        vocab.discard_probs = np.array(
            [discard_probability(f, subsample_t) for f in freqs], dtype=np.float32)
    else:
        vocab.discard_probs = np.zeros(vocab.size, dtype=np.float32)

    return build_sampling_table(vocab, alpha)


def sample_negative(vocab: Vocabulary, rng: np.random.Generator,
                    exclude: int | None = None) -> int:
    """Draw one index from the negative-sampling distribution, never equal
    to ``exclude`` (rejection sampling).
    """
    table = vocab.neg_table
    if table is None:
        raise ValueError("vocabulary has no sampling table")
    if exclude is not None and vocab.size == 1:
        raise ValueError("cannot exclude the only word of a 1-word vocabulary")
    for _ in range(100):
        idx = int(table[rng.integers(len(table))])
        if idx != exclude:
            return idx
    # pathological table (exclude owns ~every slot): fall back to a uniform
    # draw over the other indices
    idx = int(rng.integers(vocab.size - 1))
    return idx if idx < exclude else idx + 1


@dataclass
class PackedSentences:
    """A corpus encoded as vocabulary indices, packed flat for the kernels.

    Sentence s spans ``tokens[offsets[s]:offsets[s+1]]``.
    """

    tokens: np.ndarray   # int32
    offsets: np.ndarray  # int64, length n_sentences + 1
    max_len: int

    @property
    def n_sentences(self) -> int:
        return len(self.offsets) - 1

    @property
    def total_tokens(self) -> int:
        return int(self.offsets[-1])

    def sentence(self, s: int) -> np.ndarray:
        return self.tokens[self.offsets[s]:self.offsets[s + 1]]


def _pack(encoded: Iterable[list[int]]) -> PackedSentences:
    offsets = [0]
    flat: list[int] = []
    max_len = 0
    for sent in encoded:
        flat.extend(sent)
        offsets.append(len(flat))
        max_len = max(max_len, len(sent))
    return PackedSentences(
        tokens=np.asarray(flat, dtype=np.int32),
        offsets=np.asarray(offsets, dtype=np.int64),
        max_len=max_len,
    )


def encode_corpus(corpus: MonoCorpus, vocab: Vocabulary,
                  max_sentence_len: int = 1000) -> PackedSentences:
    """Pack a monolingual corpus; OOV tokens are dropped and sentences that
    end up empty are omitted. Longer sentences are truncated at the cap.
    """

    def gen():
        for sentence in corpus.sentences():
            enc = vocab.encode(sentence)[:max_sentence_len]
            if enc:
                yield enc

    return _pack(gen())


def encode_bitext(corpus: AlignedCorpus, vocab_e: Vocabulary, vocab_f: Vocabulary,
                  max_sentence_len: int = 1000
                  ) -> tuple[PackedSentences, PackedSentences, int]:
    """Pack both sides of a bitext, keeping only pairs where both sides are
    nonempty after vocabulary filtering. Returns (side_e, side_f, n_dropped)
    where n_dropped counts pairs removed here or skipped as raw-empty.
    """
    enc_e: list[list[int]] = []
    enc_f: list[list[int]] = []
    dropped = 0
    for toks_e, toks_f in corpus.pairs():
        e = vocab_e.encode(toks_e)[:max_sentence_len]
        f = vocab_f.encode(toks_f)[:max_sentence_len]
        if e and f:
            enc_e.append(e)
            enc_f.append(f)
        else:
            dropped += 1
    dropped += corpus.skipped_pairs
    return _pack(enc_e), _pack(enc_f), dropped
