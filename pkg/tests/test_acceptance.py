"""Acceptance gate: every guarantee the package makes, exercised end to end
at its stated tolerance. Run with -s to see the measured values behind each
verdict.

The synthetic corpora deliberately disable frequent-word subsampling: at a
few hundred thousand tokens every word's frequency is far above the default
1e-4 threshold, so the default would discard most of the corpus and the runs
would measure noise instead of the trainer.
"""

import math
import time

import numpy as np
import pytest

import synthdata as sd
from crossgram import cli
from crossgram.corpus import AlignedCorpus, MonoCorpus, build_vocab
from crossgram.evaluate import (
    LabeledDocument,
    TranslationTestSet,
    arithmetic_query,
    classify_crosslingual,
    document_vector,
    idf_weights,
    load_translation_testset,
    nearest_neighbors,
    perceptron_train,
    translation_precision,
)
from crossgram.kernels import reference
from crossgram.model import WordSpace, init_model, load_embeddings, save_embeddings
from crossgram.trainer import TrainingConfig, pair_loss, pair_step, train

pytestmark = pytest.mark.acceptance


def render_lines(id_sentences, lang):
    return [" ".join(sent) for sent in sd.render(id_sentences, lang)]


def train_renamed_languages(ids, langs, pivot, cfg):
    """One underlying corpus rendered into several languages, aligned line by
    line with the pivot; every bitext side doubles as a monolingual corpus."""
    lines = {lang: render_lines(ids, lang) for lang in langs}
    vocabs = [build_vocab(MonoCorpus(lang, lines[lang]), min_count=cfg.min_count,
                          subsample_t=cfg.subsample_t, alpha=cfg.alpha)
              for lang in langs]
    model = init_model(vocabs, cfg.dim, seed=cfg.seed, pivot=pivot)
    monos = [MonoCorpus(lang, lines[lang]) for lang in langs]
    bitexts = [AlignedCorpus(pivot, lang, lines[pivot], lines[lang])
               for lang in langs if lang != pivot]
    start = time.perf_counter()
    model, progress = train(model, monos, bitexts, cfg)
    return model, progress, time.perf_counter() - start, lines


@pytest.fixture(scope="module")
def chain_ids():
    return sd.bigram_ids(vocab_size=200, n_sentences=5000, seed=7)


@pytest.fixture(scope="module")
def recovery(chain_ids):
    cfg = TrainingConfig(dim=20, epochs=5, threads=4, subsample_t=0.0, seed=1)
    model, progress, elapsed, lines = train_renamed_languages(
        chain_ids, ["a", "b"], "a", cfg)
    return {"model": model, "elapsed": elapsed, "lines": lines,
            "progress": progress}


def test_pair_gradients_match_finite_differences():
    """Analytic update direction vs central finite differences of the pair
    loss, D=10, 100 trials split between a monolingual-style pair (target and
    contexts from one language's matrices) and a cross-lingual pair (target
    from one language, contexts from another)."""
    vocabs = [build_vocab(MonoCorpus(lang, ["x y z w v u t s r q"] * 5),
                          min_count=1, subsample_t=0.0) for lang in ("e", "f")]
    model = init_model(vocabs, dim=10, seed=9)
    rng = np.random.default_rng(123)
    for emb in model.embeddings.values():
        emb.context[:] = rng.standard_normal(emb.context.shape) * 0.4
        emb.target[:] = rng.standard_normal(emb.target.shape) * 0.4

    eps = 1e-5
    worst = 0.0
    start = time.perf_counter()
    for trial in range(100):
        if trial % 2 == 0:
            tgt_emb = ctx_emb = model.embeddings["e"]
        else:
            tgt_emb, ctx_emb = model.embeddings["e"], model.embeddings["f"]
        w = tgt_emb.target[rng.integers(10)].astype(np.float64)
        c = ctx_emb.context[rng.integers(10)].astype(np.float64)
        negs = [ctx_emb.context[rng.integers(10)].astype(np.float64)
                for _ in range(3)]

        w2, c2 = w.copy(), c.copy()
        negs2 = [n.copy() for n in negs]
        pair_step(w2, c2, negs2, lr=1.0)
        analytic = [w - w2, c - c2] + [n - n2 for n, n2 in zip(negs, negs2)]

        def loss_at(vectors):
            return pair_loss(vectors[0], vectors[1], vectors[2:])

        vectors = [w, c, *negs]
        for vi, grad in enumerate(analytic):
            for d in range(10):
                bumped = [v.copy() for v in vectors]
                bumped[vi][d] += eps
                hi = loss_at(bumped)
                bumped[vi][d] -= 2 * eps
                lo = loss_at(bumped)
                fd = (hi - lo) / (2 * eps)
                rel = abs(grad[d] - fd) / max(abs(fd), 1e-4)
                worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    print(f"\ngradient check: max relative error {worst:.2e} "
          f"over 100 trials in {elapsed:.2f}s")
    assert worst < 1e-4
    assert elapsed < 5.0


def test_bilingual_recovery_of_renamed_language(recovery, chain_ids, tmp_path):
    """Language b is a token-for-token rename of language a; after joint
    training, each frequent a-word's nearest b-neighbor should be its own
    rename."""
    freq = sd.frequent_ids(chain_ids, min_count=50)
    tsv = tmp_path / "truth.tsv"
    sd.write_translation_tsv(tsv, freq, "a", "b")
    testset = load_translation_testset(tsv, "a", "b")
    res = translation_precision(recovery["model"], testset, k=1)
    print(f"\nbilingual recovery: P@1={res.precision:.3f} over {res.total} "
          f"word pairs (oov={res.oov}), trained in {recovery['elapsed']:.1f}s")
    assert recovery["elapsed"] < 60
    assert res.oov == 0
    assert res.precision >= 0.90


def test_pivot_transfer_without_direct_bitext(chain_ids, tmp_path):
    """Three renamed languages with bitext only a-b and a-c: b and c must
    still land near each other through the shared pivot space."""
    cfg = TrainingConfig(dim=20, epochs=5, threads=4, subsample_t=0.0, seed=1)
    model, _, elapsed, _ = train_renamed_languages(
        chain_ids, ["a", "b", "c"], "a", cfg)
    freq = sd.frequent_ids(chain_ids, min_count=50)
    tsv = tmp_path / "truth.tsv"
    sd.write_translation_tsv(tsv, freq, "b", "c")
    testset = load_translation_testset(tsv, "b", "c")
    res = translation_precision(model, testset, k=1)
    print(f"\npivot transfer: b->c P@1={res.precision:.3f} over {res.total} "
          f"word pairs, trained in {elapsed:.1f}s")
    assert elapsed < 120
    assert res.precision >= 0.80


def test_loss_descends_across_epochs():
    ids = sd.bigram_ids(vocab_size=100, n_sentences=1000, seed=11)
    lines = render_lines(ids, "a")
    cfg = TrainingConfig(dim=40, lr_start=0.005, epochs=3, threads=1,
                         subsample_t=0.0, seed=1)
    vocab = build_vocab(MonoCorpus("a", lines), min_count=cfg.min_count,
                        subsample_t=0.0)
    model = init_model([vocab], cfg.dim, seed=cfg.seed, pivot="a")
    _, progress = train(model, [MonoCorpus("a", lines)], [], cfg)
    losses = progress.epoch_mean_losses
    print(f"\nepoch mean losses: {[round(l, 4) for l in losses]}")
    assert len(losses) == 3
    assert losses[0] > losses[1] > losses[2]


def test_probes_match_brute_force():
    """Every evaluation probe against an independent brute-force
    reimplementation on instances of at most 10 words / 10 documents."""
    rng = np.random.default_rng(5)
    words_s = [f"s{i}" for i in range(8)]
    words_t = [f"t{i}" for i in range(9)]
    space = WordSpace({
        "s": (words_s, rng.standard_normal((8, 4)).astype(np.float32)),
        "t": (words_t, rng.standard_normal((9, 4)).astype(np.float32)),
    })

    def brute_neighbors(vec, lang, k, exclude=()):
        out = []
        for w, row in zip(space.words(lang), space.matrix(lang)):
            if w in exclude:
                continue
            row = row.astype(np.float64)
            out.append((w, float(row @ vec
                                 / (np.linalg.norm(row) * np.linalg.norm(vec)))))
        out.sort(key=lambda ws: (-ws[1], ws[0]))
        return out[:k]

    # nearest neighbors, including self-exclusion
    for w in words_s:
        got = nearest_neighbors(space, ("s", w), "s", k=4)
        vec = space.vector("s", w).astype(np.float64)
        want = brute_neighbors(vec, "s", 4, exclude={w})
        assert [x for x, _ in got] == [x for x, _ in want]
        np.testing.assert_allclose([s for _, s in got], [s for _, s in want],
                                   atol=1e-9)

    # arithmetic with input exclusion
    got = arithmetic_query(space, plus=[("s", "s1"), ("s", "s2")],
                           minus=[("s", "s3")], target_lang="t", k=5)
    vec = (space.vector("s", "s1").astype(np.float64)
           + space.vector("s", "s2").astype(np.float64)
           - space.vector("s", "s3").astype(np.float64))
    want = brute_neighbors(vec, "t", 5, exclude={"s1", "s2", "s3"})
    assert [x for x, _ in got] == [x for x, _ in want]

    # translation precision
    entries = [(f"s{i}", {f"t{(3 * i) % 9}"}) for i in range(8)]
    for k in (1, 2, 5):
        res = translation_precision(space, TranslationTestSet("s", "t", entries),
                                    k=k)
        expected = sum(
            any(w in acc for w, _ in
                brute_neighbors(space.vector("s", src).astype(np.float64),
                                "t", k))
            for src, acc in entries)
        assert res.hits == expected

    # idf over 10 documents
    docs = []
    for i in range(10):
        picks = rng.choice(words_s, size=int(rng.integers(2, 6)))
        docs.append(LabeledDocument("l", [str(p) for p in picks], "s"))
    weights = idf_weights(docs)
    for word in {t for d in docs for t in d.tokens}:
        df = sum(word in d.tokens for d in docs)
        assert weights[word] == math.log(10 / df)

    # document vectors, per occurrence
    doc = docs[0]
    vec, used = document_vector(doc, space, weights)
    manual = np.zeros(4)
    count = 0
    for token in doc.tokens:
        manual += weights[token] * space.vector("s", token).astype(np.float64)
        count += 1
    np.testing.assert_allclose(vec, manual, atol=1e-12)
    assert used == count

    # averaged perceptron, exact replay
    examples = [(rng.standard_normal(3), ("one", "two")[i % 2])
                for i in range(10)]
    clf = perceptron_train(examples, epochs=2, seed=6)
    replay_rng = np.random.default_rng(6)
    w = np.zeros((2, 3))
    b = np.zeros(2)
    w_sum, b_sum = np.zeros_like(w), np.zeros_like(b)
    idx = {"one": 0, "two": 1}
    for _ in range(2):
        for i in replay_rng.permutation(10):
            x, label = examples[i]
            y = idx[label]
            pred = int(np.argmax(w @ x + b))
            if pred != y:
                w[y] += x
                b[y] += 1.0
                w[pred] -= x
                b[pred] -= 1.0
            w_sum += w
            b_sum += b
    np.testing.assert_array_equal(clf.weights, w)
    np.testing.assert_allclose(clf.averaged_weights, w_sum / 20, atol=1e-15)
    np.testing.assert_allclose(clf.averaged_bias, b_sum / 20, atol=1e-15)

    print("\nprobe equivalence: neighbors, arithmetic, translation, idf, "
          "document vectors, perceptron all match brute force")


def test_update_locality():
    """A skip-gram step may touch only its own language's matrices; a
    cross-lingual step in direction e->f may touch only e-target and
    f-context rows."""
    vocabs = [build_vocab(MonoCorpus(lang, ["a b c d e f g h i j"] * 5),
                          min_count=1, subsample_t=0.0) for lang in ("e", "f")]
    model = init_model(vocabs, dim=8, seed=4)
    rng = np.random.default_rng(0)
    for emb in model.embeddings.values():
        emb.context[:] = rng.standard_normal(emb.context.shape) * 0.3

    def snapshot():
        return {lang: (emb.target.copy(), emb.context.copy())
                for lang, emb in model.embeddings.items()}

    def changed(before, after):
        return set(np.nonzero(np.any(before != after, axis=1))[0].tolist())

    # skip-gram on language e over one sentence, no negatives
    sent = np.array([2, 5, 7], dtype=np.int32)
    offsets = np.array([0, 3], dtype=np.int64)
    before = snapshot()
    e = model.embeddings["e"]
    reference.skipgram_chunk(
        e.target, e.context, sent, offsets, 0, 1,
        vocabs[0].discard_probs, vocabs[0].neg_table, 5, 0, 0.1, 0, 77)
    assert changed(before["e"][0], e.target) == {2, 5, 7}
    assert changed(before["e"][1], e.context) == {2, 5, 7}
    f = model.embeddings["f"]
    assert np.array_equal(before["f"][0], f.target)
    assert np.array_equal(before["f"][1], f.context)

    # cross-lingual direction e->f only
    s_e = np.array([1, 3], dtype=np.int32)
    s_f = np.array([4, 6, 8], dtype=np.int32)
    before = snapshot()
    reference.crossgram_chunk(
        e.target, f.context, s_e, np.array([0, 2], dtype=np.int64),
        s_f, np.array([0, 3], dtype=np.int64), 0, 1,
        vocabs[1].neg_table, 0, 0.1, 78)
    assert changed(before["e"][0], e.target) == {1, 3}
    assert changed(before["f"][1], f.context) == {4, 6, 8}
    assert np.array_equal(before["e"][1], e.context)
    assert np.array_equal(before["f"][0], f.target)
    print("\nupdate locality: skip-gram stays within its language; "
          "e->f touches only e-target and f-context rows")


def test_deterministic_training_and_roundtrip(chain_ids, recovery, tmp_path):
    lines_a = render_lines(chain_ids[:600], "a")
    lines_b = render_lines(chain_ids[:600], "b")
    corpus_a = tmp_path / "a.txt"
    corpus_b = tmp_path / "b.txt"
    corpus_a.write_text("\n".join(lines_a) + "\n", encoding="utf-8")
    corpus_b.write_text("\n".join(lines_b) + "\n", encoding="utf-8")

    outs = []
    for name in ("m1.txt", "m2.txt"):
        out = tmp_path / name
        code = cli.main([
            "train", "--pivot", "a",
            "--mono", "a", str(corpus_a), "--mono", "b", str(corpus_b),
            "--bitext", "b", str(corpus_a), str(corpus_b),
            "--output", str(out), "--dim", "16", "--epochs", "2",
            "--sample", "0", "--threads", "1", "--seed", "42"])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]

    paths = save_embeddings(recovery["model"], tmp_path / "round.txt",
                            which="both", prefixed=True)
    worst = 0.0
    for which, path in zip(("target", "context"), paths):
        words, matrix = load_embeddings(path)
        rows = {w: i for i, w in enumerate(words)}
        for lang, emb in recovery["model"].embeddings.items():
            kept = getattr(emb, which)
            vocab = recovery["model"].vocabs[lang]
            for i, w in enumerate(vocab.words):
                diff = float(np.abs(matrix[rows[f"{lang}:{w}"]]
                                    - kept[i]).max())
                worst = max(worst, diff)
    print(f"\ndeterminism: re-run byte-identical; save/load max coordinate "
          f"drift {worst:.2e}")
    assert worst <= 1e-6


def test_crosslingual_classification_pipeline(recovery):
    """Train a topic classifier on language-a documents, test on language-b
    documents, sharing nothing but the embedding space."""
    train_docs = [LabeledDocument(label, tokens, "a")
                  for label, tokens in sd.topic_documents(400, "a", seed=21)]
    test_docs = [LabeledDocument(label, tokens, "b")
                 for label, tokens in sd.topic_documents(200, "b", seed=22)]
    res = classify_crosslingual(recovery["model"], train_docs, test_docs,
                                epochs=10, seed=1)
    print(f"\ncross-lingual classification: accuracy={res.accuracy:.3f} "
          f"({res.correct}/{res.total}, skipped={res.skipped})")
    assert res.skipped == 0
    assert res.accuracy >= 0.95
