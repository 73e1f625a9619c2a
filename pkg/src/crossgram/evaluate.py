"""Evaluation probes for a shared multilingual word space.

Everything here is read-only over the embeddings: cosine nearest neighbors,
additive vector arithmetic, word-translation precision at k, IDF-weighted
document vectors, and an averaged-perceptron classifier used for
cross-lingual document classification. All similarity queries run over
target vectors; context vectors only matter during training.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .model import MultilingualModel, WordSpace


class UnknownWordError(LookupError):
    pass


class UnknownLanguageError(LookupError):
    pass


def _as_space(model_or_space) -> WordSpace:
    if isinstance(model_or_space, WordSpace):
        return model_or_space
    return model_or_space.word_space("target")


def _lang_matrix(space: WordSpace, lang: str):
    if not space.has_language(lang):
        raise UnknownLanguageError(f"unknown language {lang!r}")
    return space.words(lang), space.matrix(lang)


def _lookup(space: WordSpace, lang: str, word: str) -> np.ndarray:
    if not space.has_language(lang):
        raise UnknownLanguageError(f"unknown language {lang!r}")
    if not space.has_word(lang, word):
        raise UnknownWordError(f"unknown word {lang!r}:{word!r}")
    return space.vector(lang, word)


def cosine(u, v) -> float:
    """u.v / (|u| |v|). Raises ValueError when either vector is zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    return float(np.dot(u, v) / (nu * nv))


def _ranked(words: np.ndarray, scores: np.ndarray, k: int, excluded: set):
    """Top k (word, score) by nonincreasing score, ties lexicographic."""
    order = np.lexsort((words, -scores))
    out = []
    for idx in order:
        word = str(words[idx])
        if word in excluded:
            continue
        if not np.isfinite(scores[idx]):
            continue
        out.append((word, float(scores[idx])))
        if len(out) == k:
            break
    return out


def _scores_against(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Cosine of the query against every row; zero rows score -inf."""
    qnorm = float(np.linalg.norm(query))
    if qnorm == 0.0:
        raise ValueError("cannot rank neighbors of a zero query vector")
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    scores = matrix @ query / qnorm
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(norms > 0, scores / norms, -np.inf)
    return scores


def nearest_neighbors(model_or_space, query, target_lang: str, k: int = 10,
                      exclude=()):
    """Top-k target-language words closest in cosine to the query.

    query is either (lang, word) / "lang:word" for a vocabulary word, or a
    raw vector. A word query in its own language never returns itself.
    Returns [(word, score), ...] sorted by nonincreasing score with
    lexicographic tie-break.
    """
    space = _as_space(model_or_space)
    excluded = set(exclude)
    if isinstance(query, str) and ":" in query:
        lang, _, word = query.partition(":")
        query = (lang, word)
    if isinstance(query, tuple):
        lang, word = query
        vec = _lookup(space, lang, word).astype(np.float64)
        if lang == target_lang:
            excluded.add(word)
    else:
        vec = np.asarray(query, dtype=np.float64)
    words, matrix = _lang_matrix(space, target_lang)
    if vec.shape != (matrix.shape[1],):
        raise ValueError(
            f"query has dimension {vec.shape}, space has {matrix.shape[1]}")
    return _ranked(words, _scores_against(matrix, vec), k, excluded)


def arithmetic_query(model_or_space, plus, minus, target_lang: str, k: int = 10):
    """Rank target-language words against sum(plus) - sum(minus).

    plus and minus are lists of (lang, word) or "lang:word". All input
    word strings are excluded from the results.
    """
    space = _as_space(model_or_space)
    query = None
    excluded = set()

    def parse(item):
        if isinstance(item, str):
            lang, _, word = item.partition(":")
            return lang, word
        return item

    for sign, items in ((1.0, plus), (-1.0, minus)):
        for item in items:
            lang, word = parse(item)
            vec = _lookup(space, lang, word).astype(np.float64)
            query = sign * vec if query is None else query + sign * vec
            excluded.add(word)
    if query is None:
        raise ValueError("arithmetic query needs at least one term")
    return nearest_neighbors(space, query, target_lang, k, exclude=excluded)


@dataclass
class TranslationTestSet:
    source_lang: str
    target_lang: str
    entries: list  # [(source word, set of acceptable target words), ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("translation test set has no entries")
        for word, acceptable in self.entries:
            if not acceptable:
                raise ValueError(f"no acceptable translations for {word!r}")


def load_translation_testset(path, source_lang: str, target_lang: str,
                             lowercase: bool = True) -> TranslationTestSet:
    """Read TSV `source<TAB>target` lines; repeated sources merge into one
    entry with several acceptable targets, in first-seen order."""
    order = []
    acceptable = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ValueError(
                    f"{path}:{lineno}: expected `source<TAB>target`, got {line!r}")
            src, tgt = (p.strip() for p in parts)
            if lowercase:
                src, tgt = src.lower(), tgt.lower()
            if src not in acceptable:
                acceptable[src] = set()
                order.append(src)
            acceptable[src].add(tgt)
    return TranslationTestSet(source_lang, target_lang,
                              [(w, acceptable[w]) for w in order])


@dataclass
class TranslationResult:
    k: int
    hits: int
    total: int
    oov: int

    @property
    def precision(self) -> float:
        return self.hits / self.total


def translation_precision(model_or_space, testset: TranslationTestSet,
                          k: int = 1) -> TranslationResult:
    """P@k over all entries: an entry scores when any acceptable target is
    in the top k neighbors of the source word. Out-of-vocabulary sources
    count as misses and are reported in the result's oov field.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    space = _as_space(model_or_space)
    _lang_matrix(space, testset.source_lang)
    _lang_matrix(space, testset.target_lang)
    hits = 0
    oov = 0
    for word, acceptable in testset.entries:
        if not space.has_word(testset.source_lang, word):
            oov += 1
            continue
        top = nearest_neighbors(space, (testset.source_lang, word),
                                testset.target_lang, k)
        if any(w in acceptable for w, _ in top):
            hits += 1
    return TranslationResult(k=k, hits=hits, total=len(testset.entries), oov=oov)


@dataclass
class LabeledDocument:
    label: str
    tokens: list
    language: str


def load_labeled_documents(path, language: str,
                           lowercase: bool = True) -> list:
    """Read TSV `label<TAB>space-separated tokens`, one document per line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            label, tab, text = line.partition("\t")
            if not tab or not label.strip():
                raise ValueError(
                    f"{path}:{lineno}: expected `label<TAB>tokens`, got {line!r}")
            tokens = text.lower().split() if lowercase else text.split()
            docs.append(LabeledDocument(label.strip(), tokens, language))
    if not docs:
        raise ValueError(f"{path}: no documents")
    return docs


def idf_weights(documents) -> dict:
    """ln(N / df) per word over the given documents, no smoothing."""
    documents = list(documents)
    if not documents:
        raise ValueError("idf needs at least one document")
    df = Counter()
    for doc in documents:
        df.update(set(doc.tokens))
    n = len(documents)
    return {word: math.log(n / count) for word, count in df.items()}


def document_vector(doc: LabeledDocument, model_or_space, idf: dict):
    """IDF-weighted sum of target vectors over the document's tokens.

    Repeated tokens contribute once per occurrence; tokens missing from the
    vocabulary or from idf contribute nothing. Returns (vector, used) where
    used counts contributing occurrences; used == 0 flags an all-unknown
    document (zero vector).
    """
    space = _as_space(model_or_space)
    words, matrix = _lang_matrix(space, doc.language)
    vec = np.zeros(matrix.shape[1], dtype=np.float64)
    used = 0
    for token in doc.tokens:
        weight = idf.get(token)
        if weight is None or not space.has_word(doc.language, token):
            continue
        vec += weight * space.vector(doc.language, token).astype(np.float64)
        used += 1
    return vec, used


@dataclass
class PerceptronModel:
    classes: list
    weights: np.ndarray          # (C, D)
    bias: np.ndarray             # (C,)
    averaged_weights: np.ndarray  # (C, D)
    averaged_bias: np.ndarray    # (C,)

    def scores(self, x) -> np.ndarray:
        return self.averaged_weights @ np.asarray(x, dtype=np.float64) + self.averaged_bias

    def predict(self, x):
        """Class with the highest averaged score; ties go to the first
        (lexicographically smallest) class."""
        return self.classes[int(np.argmax(self.scores(x)))]


def perceptron_train(train, epochs: int = 10, seed: int = 1) -> PerceptronModel:
    """Multiclass averaged perceptron on (vector, label) pairs.

    On a wrong prediction the true class gains the example and the predicted
    class loses it (bias moves by 1 alongside). The averaged weights are the
    mean of the weight state after every example, updates or not, across all
    epochs; examples are reshuffled each epoch under the seed.
    """
    train = list(train)
    if not train:
        raise ValueError("no training examples")
    classes = sorted({label for _, label in train})
    if len(classes) < 2:
        raise ValueError("need at least 2 classes to train a classifier")
    index = {c: i for i, c in enumerate(classes)}
    dim = len(train[0][0])
    xs = np.array([np.asarray(v, dtype=np.float64) for v, _ in train])
    ys = np.array([index[label] for _, label in train])

    w = np.zeros((len(classes), dim))
    b = np.zeros(len(classes))
    w_sum = np.zeros_like(w)
    b_sum = np.zeros_like(b)
    snapshots = 0
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        for i in rng.permutation(len(xs)):
            x, y = xs[i], ys[i]
            pred = int(np.argmax(w @ x + b))
            if pred != y:
                w[y] += x
                b[y] += 1.0
                w[pred] -= x
                b[pred] -= 1.0
            w_sum += w
            b_sum += b
            snapshots += 1
    if snapshots:
        avg_w, avg_b = w_sum / snapshots, b_sum / snapshots
    else:
        avg_w, avg_b = np.zeros_like(w), np.zeros_like(b)
    return PerceptronModel(classes, w, b, avg_w, avg_b)


@dataclass
class ClassificationResult:
    accuracy: float
    correct: int
    total: int
    skipped_train: int
    skipped_test: int

    @property
    def skipped(self) -> int:
        return self.skipped_train + self.skipped_test


def classify_crosslingual(model_or_space, train_docs, test_docs,
                          epochs: int = 10, seed: int = 1) -> ClassificationResult:
    """Train on documents in one language, test on another.

    Both sides are vectorized with their own language's target vectors.
    IDF comes from the training documents on the train side and from the
    test documents on the test side (the two vocabularies share no surface
    forms in general, so reusing train IDF would zero the test features).
    Documents that vectorize to zero are skipped; skipped test documents
    stay in the accuracy denominator as errors.
    """
    space = _as_space(model_or_space)
    train_docs = list(train_docs)
    test_docs = list(test_docs)
    if not train_docs or not test_docs:
        raise ValueError("need nonempty train and test document sets")

    train_idf = idf_weights(train_docs)
    examples = []
    skipped_train = 0
    for doc in train_docs:
        vec, used = document_vector(doc, space, train_idf)
        if used == 0:
            skipped_train += 1
            continue
        examples.append((vec, doc.label))
    if not examples:
        raise ValueError("every training document vectorized to zero")

    clf = perceptron_train(examples, epochs=epochs, seed=seed)

    test_idf = idf_weights(test_docs)
    correct = 0
    skipped_test = 0
    for doc in test_docs:
        vec, used = document_vector(doc, space, test_idf)
        if used == 0:
            skipped_test += 1
            continue
        if clf.predict(vec) == doc.label:
            correct += 1
    total = len(test_docs)
    return ClassificationResult(accuracy=correct / total, correct=correct,
                                total=total, skipped_train=skipped_train,
                                skipped_test=skipped_test)
