"""Embedding storage for all languages in one vector space, plus persistence.

Vectors are saved in the common text format: a ``<rows> <dim>`` header, then
one ``word v1 ... vD`` line per word with 6-decimal fixed notation. In
prefixed mode tokens are written as ``lang:word`` so a single file can hold
the whole multilingual space; otherwise one file per language is written.
Files ending in ``.gz`` are compressed transparently.
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Vocabulary


class EmbeddingFormatError(ValueError):
    """Raised for malformed headers, dimension mismatches or duplicate words."""


@dataclass
class EmbeddingSet:
    """Target and context matrices for one language (both V x D, float32)."""

    language: str
    target: np.ndarray
    context: np.ndarray

    @property
    def dim(self) -> int:
        return self.target.shape[1]

    @property
    def size(self) -> int:
        return self.target.shape[0]

    def check_finite(self) -> None:
        if not np.isfinite(self.target).all() or not np.isfinite(self.context).all():
            raise FloatingPointError(
                f"non-finite entries in {self.language!r} embeddings")


@dataclass
class MultilingualModel:
    """All per-language vocabularies and embeddings, sharing one dimension."""

    pivot: str
    vocabs: dict[str, Vocabulary]
    embeddings: dict[str, EmbeddingSet]
    config_snapshot: object = None

    @property
    def dim(self) -> int:
        return next(iter(self.embeddings.values())).dim

    @property
    def languages(self) -> list[str]:
        return list(self.embeddings.keys())

    def check_finite(self) -> None:
        for emb in self.embeddings.values():
            emb.check_finite()

    def word_space(self, which: str = "target") -> "WordSpace":
        """A read view over one matrix kind, as used by queries and evals."""
        langs = {}
        for lang, emb in self.embeddings.items():
            matrix = emb.target if which == "target" else emb.context
            langs[lang] = (self.vocabs[lang].words, matrix)
        return WordSpace(langs)


def init_model(vocabs: list[Vocabulary], dim: int, seed: int = 1,
               pivot: str | None = None) -> MultilingualModel:
    """Fresh model: target entries uniform in [-0.5/dim, +0.5/dim], context
    entries zero. Deterministic under a fixed seed.
    """
    if not vocabs:
        raise ValueError("need at least one vocabulary")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    seen = set()
    for v in vocabs:
        if v.language in seen:
            raise ValueError(f"duplicate language {v.language!r}")
        seen.add(v.language)
    if pivot is None:
        pivot = vocabs[0].language
    if pivot not in seen:
        raise ValueError(f"pivot language {pivot!r} has no vocabulary")

    master = np.random.SeedSequence(seed)
    embeddings = {}
    for v, child in zip(vocabs, master.spawn(len(vocabs))):
        rng = np.random.default_rng(child)
        target = (rng.random((v.size, dim), dtype=np.float32) - 0.5) / dim
        context = np.zeros((v.size, dim), dtype=np.float32)
        embeddings[v.language] = EmbeddingSet(v.language, target, context)
    return MultilingualModel(
        pivot=pivot,
        vocabs={v.language: v for v in vocabs},
        embeddings=embeddings,
    )


@dataclass
class WordSpace:
    """Loaded or live word vectors: language -> (word list, matrix).

    This is the query surface shared by a trained in-memory model and a
    vector file loaded from disk.
    """

    _langs: dict[str, tuple[list[str], np.ndarray]]
    _indices: dict[str, dict[str, int]] = field(default=None, repr=False)

    def __post_init__(self):
        if self._indices is None:
            self._indices = {
                lang: {w: i for i, w in enumerate(words)}
                for lang, (words, _) in self._langs.items()
            }

    @property
    def languages(self) -> list[str]:
        return list(self._langs.keys())

    def has_language(self, lang: str) -> bool:
        return lang in self._langs

    def words(self, lang: str) -> list[str]:
        self._check_lang(lang)
        return self._langs[lang][0]

    def matrix(self, lang: str) -> np.ndarray:
        self._check_lang(lang)
        return self._langs[lang][1]

    def has_word(self, lang: str, word: str) -> bool:
        return lang in self._indices and word in self._indices[lang]

    def vector(self, lang: str, word: str) -> np.ndarray:
        self._check_lang(lang)
        try:
            row = self._indices[lang][word]
        except KeyError:
            raise KeyError(f"unknown word {word!r} in language {lang!r}") from None
        return self._langs[lang][1][row]

    def _check_lang(self, lang: str) -> None:
        if lang not in self._langs:
            raise KeyError(f"unknown language {lang!r}")

    @classmethod
    def from_prefixed_file(cls, path) -> "WordSpace":
        """Load a prefixed (``lang:word``) vector file into per-language maps."""
        words, matrix = load_embeddings(path)
        by_lang: dict[str, tuple[list[str], list[int]]] = {}
        for row, token in enumerate(words):
            lang, sep, word = token.partition(":")
            if not sep or not lang or not word:
                raise EmbeddingFormatError(
                    f"{path}: token {token!r} is not in lang:word form")
            by_lang.setdefault(lang, ([], []))[0].append(word)
            by_lang[lang][1].append(row)
        return cls({
            lang: (ws, matrix[rows]) for lang, (ws, rows) in by_lang.items()
        })


def _open_write(path, compress_like=None):
    """Open for writing; gzip when the path (or the final destination the
    write is staged for) ends in .gz."""
    name = str(compress_like if compress_like is not None else path)
    if name.endswith(".gz"):
        return gzip.open(str(path), "wt", encoding="utf-8")
    return open(str(path), "w", encoding="utf-8")


def _open_read(path):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def _write_vectors(path, rows) -> None:
    """Write (token, vector) rows atomically: temp file then rename."""
    path = Path(path)
    rows = list(rows)
    dim = len(rows[0][1]) if rows else 0
    tmp = path.with_name(path.name + ".tmp")
    try:
        with _open_write(tmp, compress_like=path) as fh:
            fh.write(f"{len(rows)} {dim}\n")
            for token, vec in rows:
                coords = " ".join(f"{x:.6f}" for x in vec)
                fh.write(f"{token} {coords}\n")
        os.replace(tmp, path)
    except BaseException:
        if tmp.exists():
            tmp.unlink()
        raise


def write_word_vectors(path, words, matrix) -> Path:
    """Write one plain text vector file (header row, then one word per line).

    Atomic like every other writer here. Returns the path written.
    """
    matrix = np.asarray(matrix)
    if len(words) != matrix.shape[0]:
        raise ValueError(
            f"{len(words)} words but {matrix.shape[0]} vector rows")
    _write_vectors(path, zip(words, matrix))
    return Path(path)


def _derive_path(path, lang: str | None, which: str | None) -> Path:
    """Insert .lang / .target|.context before the file extension(s)."""
    path = Path(path)
    suffixes = "".join(path.suffixes[-2 if path.suffix == ".gz" else -1:]) \
        if path.suffix else ""
    stem = path.name[: len(path.name) - len(suffixes)] if suffixes else path.name
    parts = [stem]
    if lang is not None:
        parts.append(lang)
    if which is not None:
        parts.append(which)
    return path.with_name(".".join(parts) + suffixes)


def save_embeddings(model: MultilingualModel, path, which: str = "target",
                    prefixed: bool = True) -> list[Path]:
    """Export embeddings as text.

    which: "target", "context" or "both" (both writes one file per matrix,
    with .target/.context inserted before the extension).
    prefixed: single file with lang:word tokens when true, otherwise one
    file per language.

    Returns the list of written paths. Writing is atomic per file, so a
    failed export never leaves a partial file at the final path.
    """
    if which not in ("target", "context", "both"):
        raise ValueError(f"which must be target|context|both, got {which!r}")
    model.check_finite()
    kinds = ["target", "context"] if which == "both" else [which]
    written = []
    for kind in kinds:
        kind_tag = kind if which == "both" else None
        if prefixed:
            out = _derive_path(path, None, kind_tag)
            rows = []
            for lang, emb in model.embeddings.items():
                matrix = getattr(emb, kind)
                words = model.vocabs[lang].words
                rows.extend((f"{lang}:{w}", matrix[i]) for i, w in enumerate(words))
            _write_vectors(out, rows)
            written.append(out)
        else:
            for lang, emb in model.embeddings.items():
                out = _derive_path(path, lang, kind_tag)
                matrix = getattr(emb, kind)
                words = model.vocabs[lang].words
                _write_vectors(out, ((w, matrix[i]) for i, w in enumerate(words)))
                written.append(out)
    return written


def load_embeddings(path) -> tuple[list[str], np.ndarray]:
    """Read one vector file back as (words, float32 matrix).

    Raises EmbeddingFormatError for a malformed header, a row whose width
    disagrees with the header, duplicate words, or a row-count mismatch.
    """
    try:
        fh = _open_read(path)
    except OSError as e:
        raise OSError(f"cannot read embeddings from {path}: {e}") from e
    with fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}: malformed header {header!r}")
        try:
            n_rows, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}: malformed header {header!r}") from None
        if n_rows < 0 or dim < 1:
            raise EmbeddingFormatError(f"{path}: malformed header {header!r}")

        words: list[str] = []
        seen: set[str] = set()
        matrix = np.empty((n_rows, dim), dtype=np.float32)
        for i, line in enumerate(fh):
            if i >= n_rows:
                raise EmbeddingFormatError(f"{path}: more rows than the header declares")
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}: row {i} has {len(parts) - 1} coordinates, expected {dim}")
            word = parts[0]
            if word in seen:
                raise EmbeddingFormatError(f"{path}: duplicate word {word!r}")
            seen.add(word)
            words.append(word)
            try:
                matrix[i] = [float(x) for x in parts[1:]]
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}: row {i} has a non-numeric coordinate") from None
        if len(words) != n_rows:
            raise EmbeddingFormatError(
                f"{path}: header declares {n_rows} rows, found {len(words)}")
    return words, matrix
