# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training kernels.

Mirrors kernels.reference exactly: same LCG, same draw order, same lookup
tables, so both backends make identical sampling decisions from a given
state and differ only in floating-point rounding. The sentence loops run
without the GIL, which is what makes multi-worker training actually
parallel.
"""

from libc.math cimport exp, log
from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np

NAME = "cython"

cdef enum:
    EXP_TABLE_SIZE = 1024

cdef double MAX_EXP = 6.0
cdef double SIG_SCALE = EXP_TABLE_SIZE / 12.0

cdef float[EXP_TABLE_SIZE] SIG_TABLE
cdef float[EXP_TABLE_SIZE] LOG_SIG_TABLE


cdef void _init_tables() noexcept:
    cdef int i
    cdef double x, s
    for i in range(EXP_TABLE_SIZE):
        x = (i + 0.5) * (2.0 * MAX_EXP / EXP_TABLE_SIZE) - MAX_EXP
        s = 1.0 / (1.0 + exp(-x))
        SIG_TABLE[i] = <float> s
        LOG_SIG_TABLE[i] = <float> log(s)

_init_tables()


def sigmoid_table():
    return np.array([SIG_TABLE[i] for i in range(EXP_TABLE_SIZE)], dtype=np.float32)


def log_sigmoid_table():
    return np.array([LOG_SIG_TABLE[i] for i in range(EXP_TABLE_SIZE)], dtype=np.float32)


def lcg_sequence(seed, n):
    cdef uint64_t st = seed
    cdef Py_ssize_t i
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] view = out
    for i in range(n):
        st = st * 25214903917ULL + 11ULL
        view[i] = st
    return out


cdef inline uint64_t lcg(uint64_t state) noexcept nogil:
    return state * 25214903917ULL + 11ULL


cdef inline int sig_index(double x) noexcept nogil:
    cdef int idx
    if x <= -MAX_EXP:
        return 0
    if x >= MAX_EXP:
        return EXP_TABLE_SIZE - 1
    idx = <int> ((x + MAX_EXP) * SIG_SCALE)
    if idx > EXP_TABLE_SIZE - 1:
        idx = EXP_TABLE_SIZE - 1
    return idx


cdef inline int draw_negative(uint64_t* state, const int32_t* table,
                              int64_t table_size, int exclude,
                              int vocab_size) noexcept nogil:
    cdef int cand, tries
    for tries in range(100):
        state[0] = lcg(state[0])
        cand = table[(state[0] >> 16) % <uint64_t> table_size]
        if cand != exclude:
            return cand
    # degenerate table: uniform over the other indices, still deterministic
    return <int> ((exclude + 1 + (state[0] >> 16) % <uint64_t> (vocab_size - 1))
                  % <uint64_t> vocab_size)


cdef inline double pair_update(float[:, ::1] tgt, int w, float[:, ::1] ctx,
                               int c, const int* negs, int n, float lr,
                               float* acc, int dim) noexcept nogil:
    """One positive pair plus its negatives; returns the pair loss."""
    cdef int k, j, row
    cdef double dot, loss = 0.0
    cdef float g, label
    for j in range(dim):
        acc[j] = 0.0
    for k in range(n + 1):
        if k == 0:
            row = c
            label = 1.0
        else:
            row = negs[k - 1]
            label = 0.0
        dot = 0.0
        for j in range(dim):
            dot += tgt[w, j] * ctx[row, j]
        loss -= LOG_SIG_TABLE[sig_index(dot if k == 0 else -dot)]
        g = lr * (label - SIG_TABLE[sig_index(dot)])
        for j in range(dim):
            acc[j] += g * ctx[row, j]
            ctx[row, j] += g * tgt[w, j]
    for j in range(dim):
        tgt[w, j] += acc[j]
    return loss


def skipgram_chunk(float[:, ::1] tgt, float[:, ::1] ctx,
                   int32_t[::1] tokens, int64_t[::1] offsets,
                   Py_ssize_t s_lo, Py_ssize_t s_hi,
                   float[::1] discard, int32_t[::1] neg_table,
                   int window, int negatives, float lr,
                   int do_subsample, state):
    """Skip-gram pass over sentences [s_lo, s_hi) of a packed corpus."""
    cdef uint64_t st = state
    cdef int dim = tgt.shape[1]
    cdef int vocab_size = tgt.shape[0]
    cdef int64_t table_size = neg_table.shape[0]
    cdef Py_ssize_t s, t, i, j, lo, hi, max_len = 0
    cdef int w, c, b, m, k
    cdef long long pairs = 0
    cdef double loss = 0.0, u
    cdef int* kept
    cdef int* negs
    cdef float* acc

    for s in range(s_lo, s_hi):
        if offsets[s + 1] - offsets[s] > max_len:
            max_len = offsets[s + 1] - offsets[s]
    if max_len == 0:
        return st, 0, 0.0

    kept = <int*> malloc(max_len * sizeof(int))
    negs = <int*> malloc((negatives if negatives > 0 else 1) * sizeof(int))
    acc = <float*> malloc(dim * sizeof(float))
    if kept == NULL or negs == NULL or acc == NULL:
        free(kept); free(negs); free(acc)
        raise MemoryError()
    try:
        with nogil:
            for s in range(s_lo, s_hi):
                m = 0
                if do_subsample:
                    for t in range(offsets[s], offsets[s + 1]):
                        w = tokens[t]
                        st = lcg(st)
                        u = ((st >> 32) & 0xFFFFFFFFULL) * (1.0 / 4294967296.0)
                        if u >= discard[w]:
                            kept[m] = w
                            m += 1
                else:
                    for t in range(offsets[s], offsets[s + 1]):
                        kept[m] = tokens[t]
                        m += 1
                for i in range(m):
                    st = lcg(st)
                    b = <int> (1 + (st >> 16) % <uint64_t> window)
                    lo = i - b
                    if lo < 0:
                        lo = 0
                    hi = i + b
                    if hi > m - 1:
                        hi = m - 1
                    for j in range(lo, hi + 1):
                        if j == i:
                            continue
                        c = kept[j]
                        for k in range(negatives):
                            negs[k] = draw_negative(&st, &neg_table[0], table_size,
                                                    c, vocab_size)
                        loss += pair_update(tgt, kept[i], ctx, c, negs, negatives,
                                            lr, acc, dim)
                        pairs += 1
    finally:
        free(kept); free(negs); free(acc)
    return st, pairs, loss


def crossgram_chunk(float[:, ::1] tgt_e, float[:, ::1] ctx_f,
                    int32_t[::1] tokens_e, int64_t[::1] offsets_e,
                    int32_t[::1] tokens_f, int64_t[::1] offsets_f,
                    Py_ssize_t s_lo, Py_ssize_t s_hi,
                    int32_t[::1] neg_table_f, int negatives, float lr,
                    state):
    """One direction of the cross-lingual objective over aligned pairs
    [s_lo, s_hi)."""
    cdef uint64_t st = state
    cdef int dim = tgt_e.shape[1]
    cdef int vocab_size_f = ctx_f.shape[0]
    cdef int64_t table_size = neg_table_f.shape[0]
    cdef Py_ssize_t s, te, tf
    cdef int w, c, k
    cdef long long pairs = 0
    cdef double loss = 0.0
    cdef int* negs
    cdef float* acc

    if s_hi <= s_lo:
        return st, 0, 0.0
    negs = <int*> malloc((negatives if negatives > 0 else 1) * sizeof(int))
    acc = <float*> malloc(dim * sizeof(float))
    if negs == NULL or acc == NULL:
        free(negs); free(acc)
        raise MemoryError()
    try:
        with nogil:
            for s in range(s_lo, s_hi):
                for te in range(offsets_e[s], offsets_e[s + 1]):
                    w = tokens_e[te]
                    for tf in range(offsets_f[s], offsets_f[s + 1]):
                        c = tokens_f[tf]
                        for k in range(negatives):
                            negs[k] = draw_negative(&st, &neg_table_f[0], table_size,
                                                    c, vocab_size_f)
                        loss += pair_update(tgt_e, w, ctx_f, c, negs, negatives,
                                            lr, acc, dim)
                        pairs += 1
    finally:
        free(negs); free(acc)
    return st, pairs, loss
