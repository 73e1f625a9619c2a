"""Pure NumPy training kernels.

This is the fallback backend, selected when the compiled extension is not
available. Both backends implement the same contract:

    skipgram_chunk(tgt, ctx, tokens, offsets, s_lo, s_hi,
                   discard, neg_table, window, negatives, lr,
                   do_subsample, state) -> (state, pairs, loss_sum)
    crossgram_chunk(tgt_e, ctx_f, tokens_e, offsets_e, tokens_f, offsets_f,
                    s_lo, s_hi, neg_table_f, negatives, lr,
                    state) -> (state, pairs, loss_sum)

and consume random draws from the same 64-bit LCG in the same order, so for
a given starting state they pick identical subsampling decisions, window
widths and negative samples. Results differ only in floating-point detail
(the compiled backend accumulates dot products in C). Training updates
follow the usual scheme: context rows are adjusted immediately, the target
row collects its gradient across the positive and all negatives and is
adjusted once at the end.

The logistic function is a 1024-entry lookup table over inputs clamped to
[-6, 6]; a matching log-sigmoid table provides per-pair losses.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

LCG_MULT = 25214903917
LCG_INC = 11
_MASK64 = (1 << 64) - 1

EXP_TABLE_SIZE = 1024
MAX_EXP = 6.0
_SCALE = EXP_TABLE_SIZE / (2.0 * MAX_EXP)


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    centers = (np.arange(EXP_TABLE_SIZE) + 0.5) * (2.0 * MAX_EXP / EXP_TABLE_SIZE) - MAX_EXP
    sig = 1.0 / (1.0 + np.exp(-centers))
    return sig.astype(np.float32), np.log(sig).astype(np.float32)


SIG_TABLE, LOG_SIG_TABLE = _build_tables()


def sigmoid_table() -> np.ndarray:
    return SIG_TABLE.copy()


def log_sigmoid_table() -> np.ndarray:
    return LOG_SIG_TABLE.copy()


def _sig_index(x: float) -> int:
    if x <= -MAX_EXP:
        return 0
    if x >= MAX_EXP:
        return EXP_TABLE_SIZE - 1
    return min(int((x + MAX_EXP) * _SCALE), EXP_TABLE_SIZE - 1)


class KernelRng:
    """The kernels' deterministic 64-bit LCG, exposed for the pure-Python
    path and for cross-backend tests."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def step(self) -> int:
        self.state = (self.state * LCG_MULT + LCG_INC) & _MASK64
        return self.state

    def uniform(self) -> float:
        """One draw in [0, 1) from the top 32 state bits."""
        return ((self.step() >> 32) & 0xFFFFFFFF) / 4294967296.0

    def window(self, max_window: int) -> int:
        """Effective window width, uniform over 1..max_window."""
        return 1 + (self.step() >> 16) % max_window

    def table_slot(self, table_size: int) -> int:
        return (self.step() >> 16) % table_size


def lcg_sequence(seed: int, n: int) -> np.ndarray:
    """First n raw states after seeding; used to check backend parity."""
    rng = KernelRng(seed)
    return np.array([rng.step() for _ in range(n)], dtype=np.uint64)


def draw_negative(rng: KernelRng, neg_table: np.ndarray, exclude: int,
                   vocab_size: int) -> int:
    for _ in range(100):
        cand = int(neg_table[rng.table_slot(len(neg_table))])
        if cand != exclude:
            return cand
    # degenerate table: uniform over the other indices, still deterministic
    return (exclude + 1 + (rng.state >> 16) % (vocab_size - 1)) % vocab_size


def _pair_update(tgt: np.ndarray, w: int, ctx: np.ndarray, rows: list[int],
                 lr: float) -> float:
    """One positive pair (rows[0]) plus its negatives; returns the pair loss."""
    acc = np.zeros(tgt.shape[1], dtype=np.float32)
    tgt_w = tgt[w]
    loss = 0.0
    for k, row in enumerate(rows):
        dot = float(np.dot(tgt_w, ctx[row]))
        idx = _sig_index(dot if k == 0 else -dot)
        loss -= float(LOG_SIG_TABLE[idx])
        label = 1.0 if k == 0 else 0.0
        g = np.float32(lr * (label - float(SIG_TABLE[_sig_index(dot)])))
        acc += g * ctx[row]
        ctx[row] += g * tgt_w
    tgt_w += acc
    return loss


def skipgram_chunk(tgt, ctx, tokens, offsets, s_lo, s_hi, discard, neg_table,
                   window, negatives, lr, do_subsample, state):
    """Skip-gram pass over sentences [s_lo, s_hi) of a packed corpus."""
    rng = KernelRng(state)
    vocab_size = tgt.shape[0]
    pairs = 0
    loss_sum = 0.0
    for s in range(s_lo, s_hi):
        sent = tokens[offsets[s]:offsets[s + 1]]
        if do_subsample:
            kept = [int(w) for w in sent if rng.uniform() >= discard[w]]
        else:
            kept = [int(w) for w in sent]
        m = len(kept)
        for i in range(m):
            b = rng.window(window)
            for j in range(max(0, i - b), min(m, i + b + 1)):
                if j == i:
                    continue
                c = kept[j]
                rows = [c] + [draw_negative(rng, neg_table, c, vocab_size)
                              for _ in range(negatives)]
                loss_sum += _pair_update(tgt, kept[i], ctx, rows, lr)
                pairs += 1
    return rng.state, pairs, loss_sum


def crossgram_chunk(tgt_e, ctx_f, tokens_e, offsets_e, tokens_f, offsets_f,
                    s_lo, s_hi, neg_table_f, negatives, lr, state):
    """One direction of the cross-lingual objective over aligned pairs
    [s_lo, s_hi): every word of the source sentence is trained against every
    word of the aligned sentence, negatives drawn from the context side.
    """
    rng = KernelRng(state)
    vocab_size_f = ctx_f.shape[0]
    pairs = 0
    loss_sum = 0.0
    for s in range(s_lo, s_hi):
        sent_e = tokens_e[offsets_e[s]:offsets_e[s + 1]]
        sent_f = tokens_f[offsets_f[s]:offsets_f[s + 1]]
        for w in sent_e:
            w = int(w)
            for c in sent_f:
                c = int(c)
                rows = [c] + [draw_negative(rng, neg_table_f, c, vocab_size_f)
                              for _ in range(negatives)]
                loss_sum += _pair_update(tgt_e, w, ctx_f, rows, lr)
                pairs += 1
    return rng.state, pairs, loss_sum
