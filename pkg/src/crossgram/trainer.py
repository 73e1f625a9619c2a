"""Joint asynchronous SGD over all objectives.

The global loss is the unweighted sum of one skip-gram objective per
monolingual corpus and, for every aligned corpus pairing a language with the
pivot, two cross-lingual objectives (one per direction). Workers repeatedly
pick an objective with probability proportional to its remaining token
budget for the epoch, claim a chunk of sentences from it, and run the
selected kernel on the shared embedding matrices without locking (individual
row races are tolerated by design; only the scheduler state is locked).

Module-level ``pair_loss`` / ``pair_step`` are the reference forms of the
update the kernels apply: exact logistic on inputs clamped to [-6, 6]. The
hot kernels approximate the same clamped logistic with a lookup table.
"""

from __future__ import annotations

import math
import sys
import threading
from dataclasses import dataclass, field

import numpy as np

from .corpus import (AlignedCorpus, MonoCorpus, PackedSentences, Vocabulary,
                     encode_bitext, encode_corpus)
from .kernels import default_kernel
from .kernels.reference import KernelRng, draw_negative
from .model import EmbeddingSet, MultilingualModel

SIGMA_CLAMP = 6.0
CHUNK_SENTENCES = 64
PROGRESS_EVERY_TOKENS = 100_000
LOSS_EMA_DECAY = 0.9999


class ConfigurationError(ValueError):
    pass


class MissingBitextError(ConfigurationError):
    pass


@dataclass
class TrainingConfig:
    """All training hyperparameters. Only dim has a task-derived default;
    the rest are conventional and overridable from the CLI."""

    dim: int = 40
    window: int = 5
    negatives: int = 5
    lr_start: float = 0.025
    lr_min: float = 1e-4
    subsample_t: float = 1e-4
    alpha: float = 0.75
    epochs: int = 5
    min_count: int = 5
    threads: int = 1
    seed: int = 1
    max_sentence_len: int = 1000

    def validate(self) -> None:
        checks = [
            (self.dim >= 1, "dim must be >= 1"),
            (self.window >= 1, "window must be >= 1"),
            (self.negatives >= 0, "negatives must be >= 0"),
            (self.lr_start > self.lr_min >= 0, "need lr > lr-min >= 0"),
            (self.subsample_t >= 0, "sample must be >= 0"),
            (self.alpha >= 0, "alpha must be >= 0"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.min_count >= 1, "min-count must be >= 1"),
            (self.threads >= 1, "threads must be >= 1"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.max_sentence_len >= 1, "max-sentence-len must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)


@dataclass
class TrainProgress:
    tokens_processed: int = 0
    total_token_budget: int = 0
    current_lr: float = 0.0
    running_loss: float | None = None
    epoch_mean_losses: list[float] = field(default_factory=list)
    dropped_pairs: int = 0


def lr_at(progress: float, cfg: TrainingConfig) -> float:
    """Linear decay from lr_start to the lr_min floor over the token budget."""
    return max(cfg.lr_min, cfg.lr_start * (1.0 - progress))


def sigmoid(x: float) -> float:
    """Logistic function on input clamped to [-SIGMA_CLAMP, SIGMA_CLAMP]."""
    x = min(max(x, -SIGMA_CLAMP), SIGMA_CLAMP)
    return 1.0 / (1.0 + math.exp(-x))


def pair_loss(w_vec: np.ndarray, c_vec: np.ndarray, neg_vecs=()) -> float:
    """-log sig(w.c) - sum_k log sig(-w.n_k), the per-pair training loss."""
    w_vec = np.asarray(w_vec)
    for other in (c_vec, *neg_vecs):
        if np.shape(other) != w_vec.shape:
            raise ValueError(
                f"dimension mismatch: {np.shape(other)} vs {w_vec.shape}")
    loss = -math.log(sigmoid(float(np.dot(w_vec, c_vec))))
    for n_vec in neg_vecs:
        loss -= math.log(sigmoid(-float(np.dot(w_vec, n_vec))))
    return loss


def pair_step(w_row: np.ndarray, c_row: np.ndarray, neg_rows=(), lr: float = 0.025) -> None:
    """In-place gradient step on one positive pair and its negatives.

    Each context-side row moves by lr*(label - sig(w.x))*w immediately; the
    target row collects lr*(label - sig(w.x))*x over all pairs and moves
    once at the end, so every logistic is evaluated at the original target.
    At the clamp boundary the step keeps the boundary slope rather than the
    flat clamped-loss gradient, which keeps saturated pairs training.
    """
    acc = np.zeros_like(w_row)
    for row, label in [(c_row, 1.0), *((n, 0.0) for n in neg_rows)]:
        if row.shape != w_row.shape:
            raise ValueError(f"dimension mismatch: {row.shape} vs {w_row.shape}")
        g = lr * (label - sigmoid(float(np.dot(w_row, row))))
        acc += g * row
        row += g * w_row
    w_row += acc


def skipgram_sentence_step(sentence, embeds: EmbeddingSet, vocab: Vocabulary,
                           cfg: TrainingConfig, lr: float, rng: KernelRng) -> int:
    """Reference skip-gram update for one sentence of vocabulary indices.

    Subsampling filters the sentence first (when cfg.subsample_t > 0), then
    each retained center trains against every word of its dynamic window,
    with cfg.negatives draws from this language's table excluding the
    context word. Consumes rng draws exactly like the chunk kernels.
    Returns the number of positive pairs trained.
    """
    tgt, ctx = embeds.target, embeds.context
    if cfg.subsample_t > 0:
        kept = [int(w) for w in sentence if rng.uniform() >= vocab.discard_probs[w]]
    else:
        kept = [int(w) for w in sentence]
    pairs = 0
    for i, w in enumerate(kept):
        b = rng.window(cfg.window)
        for j in range(max(0, i - b), min(len(kept), i + b + 1)):
            if j == i:
                continue
            c = kept[j]
            negs = [draw_negative(rng, vocab.neg_table, c, vocab.size)
                    for _ in range(cfg.negatives)]
            pair_step(tgt[w], ctx[c], [ctx[n] for n in negs], lr)
            pairs += 1
    return pairs


def crossgram_sentence_step(s_e, s_f, embeds_e: EmbeddingSet, embeds_f: EmbeddingSet,
                            vocab_f: Vocabulary, cfg: TrainingConfig, lr: float,
                            rng: KernelRng) -> int:
    """Reference cross-lingual update for one aligned pair, direction e->f:
    every word of s_e trains its target vector against the context vector of
    every word of s_f, negatives drawn from language f's table. Touches only
    e's target matrix and f's context matrix.
    """
    tgt, ctx = embeds_e.target, embeds_f.context
    pairs = 0
    for w in s_e:
        for c in s_f:
            c = int(c)
            negs = [draw_negative(rng, vocab_f.neg_table, c, vocab_f.size)
                    for _ in range(cfg.negatives)]
            pair_step(tgt[int(w)], ctx[c], [ctx[n] for n in negs], lr)
            pairs += 1
    return pairs


class _MonoObjective:
    def __init__(self, lang: str, packed: PackedSentences, vocab: Vocabulary,
                 emb: EmbeddingSet, cfg: TrainingConfig, kernel):
        self.lang = lang
        self.packed = packed
        self.vocab = vocab
        self.emb = emb
        self.cfg = cfg
        self.kernel = kernel
        self.budget = packed.total_tokens
        self.n_sentences = packed.n_sentences
        self.cursor = 0
        self.remaining = self.budget

    def tokens_in(self, lo: int, hi: int) -> int:
        return int(self.packed.offsets[hi] - self.packed.offsets[lo])

    def run(self, lo: int, hi: int, lr: float, state: int):
        return self.kernel.skipgram_chunk(
            self.emb.target, self.emb.context,
            self.packed.tokens, self.packed.offsets, lo, hi,
            self.vocab.discard_probs, self.vocab.neg_table,
            self.cfg.window, self.cfg.negatives, lr,
            int(self.cfg.subsample_t > 0), state)


class _CrossObjective:
    """Both directions of one aligned corpus, applied back-to-back per chunk.
    Side e is always the pivot."""

    def __init__(self, lang_e: str, lang_f: str, packed_e: PackedSentences,
                 packed_f: PackedSentences, vocab_e: Vocabulary, vocab_f: Vocabulary,
                 emb_e: EmbeddingSet, emb_f: EmbeddingSet, cfg: TrainingConfig, kernel):
        self.lang_e = lang_e
        self.lang_f = lang_f
        self.packed_e = packed_e
        self.packed_f = packed_f
        self.vocab_e = vocab_e
        self.vocab_f = vocab_f
        self.emb_e = emb_e
        self.emb_f = emb_f
        self.cfg = cfg
        self.kernel = kernel
        self.budget = packed_e.total_tokens + packed_f.total_tokens
        self.n_sentences = packed_e.n_sentences
        self.cursor = 0
        self.remaining = self.budget

    def tokens_in(self, lo: int, hi: int) -> int:
        return int(self.packed_e.offsets[hi] - self.packed_e.offsets[lo]
                   + self.packed_f.offsets[hi] - self.packed_f.offsets[lo])

    def run(self, lo: int, hi: int, lr: float, state: int):
        state, pairs_ef, loss_ef = self.kernel.crossgram_chunk(
            self.emb_e.target, self.emb_f.context,
            self.packed_e.tokens, self.packed_e.offsets,
            self.packed_f.tokens, self.packed_f.offsets, lo, hi,
            self.vocab_f.neg_table, self.cfg.negatives, lr, state)
        state, pairs_fe, loss_fe = self.kernel.crossgram_chunk(
            self.emb_f.target, self.emb_e.context,
            self.packed_f.tokens, self.packed_f.offsets,
            self.packed_e.tokens, self.packed_e.offsets, lo, hi,
            self.vocab_e.neg_table, self.cfg.negatives, lr, state)
        return state, pairs_ef + pairs_fe, loss_ef + loss_fe


def _build_objectives(model: MultilingualModel, monos, bitexts,
                      cfg: TrainingConfig, kernel, progress: TrainProgress):
    objectives = []
    for mono in monos:
        if mono.language not in model.vocabs:
            raise ConfigurationError(
                f"mono corpus language {mono.language!r} is not in the model")
        packed = encode_corpus(mono, model.vocabs[mono.language], cfg.max_sentence_len)
        if packed.n_sentences:
            objectives.append(_MonoObjective(
                mono.language, packed, model.vocabs[mono.language],
                model.embeddings[mono.language], cfg, kernel))

    paired: set[str] = set()
    for bt in bitexts:
        for lang in (bt.lang_e, bt.lang_f):
            if lang not in model.vocabs:
                raise ConfigurationError(
                    f"bitext language {lang!r} is not in the model")
        if model.pivot not in (bt.lang_e, bt.lang_f):
            raise ConfigurationError(
                f"bitext {bt.lang_e}-{bt.lang_f} does not include the pivot "
                f"{model.pivot!r}; only pivot-aligned bitext is supported")
        other = bt.lang_f if bt.lang_e == model.pivot else bt.lang_e
        if other in paired:
            raise ConfigurationError(
                f"language {other!r} appears in more than one bitext")
        paired.add(other)

        swap = bt.lang_e != model.pivot
        lang_e, lang_f = (model.pivot, other)
        packed_e, packed_f, dropped = encode_bitext(
            bt, model.vocabs[bt.lang_e], model.vocabs[bt.lang_f], cfg.max_sentence_len)
        if swap:
            packed_e, packed_f = packed_f, packed_e
        progress.dropped_pairs += dropped
        if packed_e.n_sentences:
            objectives.append(_CrossObjective(
                lang_e, lang_f, packed_e, packed_f,
                model.vocabs[lang_e], model.vocabs[lang_f],
                model.embeddings[lang_e], model.embeddings[lang_f], cfg, kernel))

    for lang in model.languages:
        if lang != model.pivot and lang not in paired:
            raise MissingBitextError(
                f"non-pivot language {lang!r} has no bitext with the pivot "
                f"{model.pivot!r}")
    return objectives


class _Scheduler:
    """Claims chunks of sentences, proportionally to remaining budgets, and
    owns all shared counters. Everything here runs under one lock; the
    kernels run outside it.
    """

    def __init__(self, objectives, cfg: TrainingConfig, progress: TrainProgress,
                 stream):
        self.objectives = objectives
        self.cfg = cfg
        self.progress = progress
        self.stream = stream
        self.lock = threading.Lock()
        self.rng = np.random.default_rng(cfg.seed)
        self.epoch_loss = 0.0
        self.epoch_pairs = 0
        self.next_emit = PROGRESS_EVERY_TOKENS

    def start_epoch(self) -> None:
        for o in self.objectives:
            o.cursor = 0
            o.remaining = o.budget
        self.epoch_loss = 0.0
        self.epoch_pairs = 0

    def claim(self):
        """Next (objective, lo, hi, lr) task, or None when the epoch is done."""
        with self.lock:
            active = [o for o in self.objectives if o.cursor < o.n_sentences]
            if not active:
                return None
            weights = np.array([o.remaining for o in active], dtype=np.float64)
            obj = active[self.rng.choice(len(active), p=weights / weights.sum())]
            lo = obj.cursor
            hi = min(lo + CHUNK_SENTENCES, obj.n_sentences)
            obj.cursor = hi
            tokens = obj.tokens_in(lo, hi)
            obj.remaining -= tokens
            lr = lr_at(self.progress.tokens_processed
                       / self.progress.total_token_budget, self.cfg)
            self.progress.tokens_processed += tokens
            self.progress.current_lr = lr
            return obj, lo, hi, lr

    def report(self, pairs: int, loss: float) -> None:
        with self.lock:
            self.epoch_pairs += pairs
            self.epoch_loss += loss
            if pairs:
                mean = loss / pairs
                ema = self.progress.running_loss
                if ema is None:
                    self.progress.running_loss = mean
                else:
                    keep = LOSS_EMA_DECAY ** pairs
                    self.progress.running_loss = ema * keep + mean * (1.0 - keep)
            while self.progress.tokens_processed >= self.next_emit:
                pct = 100.0 * self.progress.tokens_processed / self.progress.total_token_budget
                loss_txt = ("%.4f" % self.progress.running_loss
                            if self.progress.running_loss is not None else "nan")
                print(f"progress={pct:.2f}% lr={self.progress.current_lr:.6f} "
                      f"loss={loss_txt}", file=self.stream, flush=True)
                self.next_emit += PROGRESS_EVERY_TOKENS


def _worker(sched: _Scheduler, seed_state: int) -> None:
    state = seed_state
    while True:
        task = sched.claim()
        if task is None:
            return
        obj, lo, hi, lr = task
        state, pairs, loss = obj.run(lo, hi, lr, state)
        sched.report(pairs, loss)


def _worker_seed(cfg: TrainingConfig, epoch: int, worker_id: int) -> int:
    ss = np.random.SeedSequence(entropy=[cfg.seed, epoch, worker_id])
    return int(ss.generate_state(1, np.uint64)[0])


def train(model: MultilingualModel, monos, bitexts, cfg: TrainingConfig,
          kernel=None, progress_stream=None):
    """Run cfg.epochs asynchronous-SGD passes over all objectives.

    monos: MonoCorpus list; bitexts: AlignedCorpus list, each pairing one
    non-pivot language with the pivot. Mutates model in place and returns
    (model, TrainProgress). Single-worker runs with a fixed seed are
    reproducible; multi-worker runs race benignly on embedding rows.
    """
    cfg.validate()
    if kernel is None:
        kernel = default_kernel()
    stream = progress_stream if progress_stream is not None else sys.stderr

    progress = TrainProgress(current_lr=cfg.lr_start)
    objectives = _build_objectives(model, monos, bitexts, cfg, kernel, progress)
    per_epoch = sum(o.budget for o in objectives)
    progress.total_token_budget = cfg.epochs * per_epoch
    if cfg.epochs == 0 or per_epoch == 0:
        model.config_snapshot = cfg
        return model, progress

    sched = _Scheduler(objectives, cfg, progress, stream)
    for epoch in range(cfg.epochs):
        sched.start_epoch()
        if cfg.threads == 1:
            _worker(sched, _worker_seed(cfg, epoch, 0))
        else:
            threads = [
                threading.Thread(target=_worker, name=f"crossgram-train-{i}",
                                 args=(sched, _worker_seed(cfg, epoch, i)))
                for i in range(cfg.threads)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        progress.epoch_mean_losses.append(
            sched.epoch_loss / sched.epoch_pairs if sched.epoch_pairs else math.nan)
        model.check_finite()

    model.config_snapshot = cfg
    return model, progress
