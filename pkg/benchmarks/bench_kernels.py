"""Benchmark the training kernel backends on synthetic packed corpora.

Runs the same chunk workload through the compiled backend and the pure
NumPy fallback and reports tokens/second for each, plus the speedup. The
pure backend is slow by design (it exists for portability and as an
executable reference), so the default workload is small; scale --sentences
up when benchmarking the compiled kernel alone.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sentences 2000 --backend cython
"""

import argparse
import time

import numpy as np

from crossgram import kernels


def build_workload(args, rng):
    tokens = rng.integers(0, args.vocab, size=args.sentences * args.length,
                          dtype=np.int64).astype(np.int32)
    offsets = np.arange(args.sentences + 1, dtype=np.int64) * args.length
    tgt = ((rng.random((args.vocab, args.dim), dtype=np.float32)) - 0.5) / args.dim
    ctx = rng.standard_normal((args.vocab, args.dim)).astype(np.float32) * 0.01
    discard = np.zeros(args.vocab, dtype=np.float32)
    neg_table = rng.integers(0, args.vocab, size=1_000_000).astype(np.int32)
    return tokens, offsets, tgt, ctx, discard, neg_table


def bench_backend(backend, args, objective):
    rng = np.random.default_rng(args.seed)
    tokens, offsets, tgt, ctx, discard, neg_table = build_workload(args, rng)
    tokens_f = tokens[::-1].copy()
    n = args.sentences
    best = float("inf")
    pairs = 0
    for _ in range(args.repeat):
        t = tgt.copy()
        c = ctx.copy()
        start = time.perf_counter()
        if objective == "skipgram":
            _, pairs, _ = backend.skipgram_chunk(
                t, c, tokens, offsets, 0, n, discard, neg_table,
                args.window, args.negatives, 0.025, 0, args.seed)
            processed = len(tokens)
        else:
            _, pairs, _ = backend.crossgram_chunk(
                t, c, tokens, offsets, tokens_f, offsets, 0, n,
                neg_table, args.negatives, 0.025, args.seed)
            processed = 2 * len(tokens)
        best = min(best, time.perf_counter() - start)
    return processed / best, pairs, best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sentences", type=int, default=300)
    parser.add_argument("--length", type=int, default=20,
                        help="tokens per sentence")
    parser.add_argument("--vocab", type=int, default=5000)
    parser.add_argument("--dim", type=int, default=100)
    parser.add_argument("--window", type=int, default=5)
    parser.add_argument("--negatives", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=3,
                        help="take the best of this many runs")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--backend", choices=["all", "cython", "python"],
                        default="all")
    parser.add_argument("--objective", choices=["both", "skipgram", "crossgram"],
                        default="both")
    args = parser.parse_args(argv)

    backends = [b for b in kernels.available_backends()
                if args.backend in ("all", b.NAME)]
    if not backends:
        parser.error(f"backend {args.backend!r} is not available in this build")
    objectives = (["skipgram", "crossgram"] if args.objective == "both"
                  else [args.objective])

    print(f"workload: {args.sentences} sentences x {args.length} tokens, "
          f"V={args.vocab}, D={args.dim}, window={args.window}, "
          f"negatives={args.negatives}, best of {args.repeat}")
    rates = {}
    for objective in objectives:
        for backend in backends:
            rate, pairs, secs = bench_backend(backend, args, objective)
            rates[(objective, backend.NAME)] = rate
            print(f"{objective:>9} | {backend.NAME:>6} | "
                  f"{rate / 1000:10.1f}k tokens/s | {pairs:9d} pairs | "
                  f"{secs:6.3f}s")
        if len(backends) == 2:
            fast = rates[(objective, backends[0].NAME)]
            slow = rates[(objective, backends[1].NAME)]
            print(f"{objective:>9} | {backends[0].NAME} is "
                  f"{fast / slow:.1f}x the {backends[1].NAME} backend")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
