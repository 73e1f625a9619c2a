"""Full-scale cross-lingual classification run on user-supplied corpora.

The bundled test suite proves the pipeline on synthetic data; this script
runs the same pipeline at realistic scale. You supply:

  * sentence-aligned English-German bitext (e.g. Europarl), one sentence per
    line, line i of the English file translating line i of the German file;
  * optional extra monolingual text per language (the bitext sides are
    always also used as monolingual data);
  * labeled documents for training (English) and testing (German) as TSV
    `label<TAB>space-separated tokens`, e.g. Reuters RCV1/RCV2 headlines
    plus bodies reduced to four top-level topics.

It trains a joint embedding space through the English pivot, then trains an
averaged perceptron on IDF-weighted English document vectors and evaluates
on German documents. With full Europarl bitext and the standard four-topic
Reuters setup, methods of this kind land in the high 80s on En->De; expect
an accuracy within a few points of 0.88 (roughly 0.83 to 0.93). Large
deviations usually mean mismatched preprocessing between the bitext and the
documents (tokenization or casing).

Example:
    python3 scripts/reproduce_fullscale.py \
        --bitext-en europarl-v7.de-en.en --bitext-de europarl-v7.de-en.de \
        --train-docs rcv1_en_train.tsv --test-docs rcv2_de_test.tsv \
        --output fullscale.vec --threads 8
"""

import argparse
import sys
import time

from crossgram import cli


def main(argv=None):
    parser = argparse.ArgumentParser(
        description=__doc__.splitlines()[0],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--bitext-en", required=True,
                        help="English side of the aligned corpus")
    parser.add_argument("--bitext-de", required=True,
                        help="German side of the aligned corpus")
    parser.add_argument("--mono-en", action="append", default=[],
                        help="extra English monolingual corpus, repeatable")
    parser.add_argument("--mono-de", action="append", default=[],
                        help="extra German monolingual corpus, repeatable")
    parser.add_argument("--train-docs", required=True,
                        help="English labeled documents (label<TAB>tokens)")
    parser.add_argument("--test-docs", required=True,
                        help="German labeled documents (label<TAB>tokens)")
    parser.add_argument("--output", required=True,
                        help="where to write the embeddings")
    parser.add_argument("--dim", type=int, default=40)
    parser.add_argument("--window", type=int, default=5)
    parser.add_argument("--negatives", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--sample", type=float, default=1e-4)
    parser.add_argument("--min-count", type=int, default=5)
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--classifier-epochs", type=int, default=10)
    parser.add_argument("--skip-training", action="store_true",
                        help="reuse an existing --output model file")
    args = parser.parse_args(argv)

    if not args.skip_training:
        train_argv = [
            "train", "--pivot", "en",
            "--bitext", "de", args.bitext_en, args.bitext_de,
            "--output", args.output,
            "--dim", str(args.dim), "--window", str(args.window),
            "--negatives", str(args.negatives), "--epochs", str(args.epochs),
            "--sample", str(args.sample), "--min-count", str(args.min_count),
            "--threads", str(args.threads), "--seed", str(args.seed),
        ]
        # the skip-gram objective on each language is what ties that
        # language's exported vectors into the shared space, so the bitext
        # sides always serve as monolingual corpora too
        for path in [args.bitext_en, *args.mono_en]:
            train_argv += ["--mono", "en", path]
        for path in [args.bitext_de, *args.mono_de]:
            train_argv += ["--mono", "de", path]
        print(f"training: crossgram {' '.join(train_argv)}", file=sys.stderr)
        start = time.perf_counter()
        code = cli.main(train_argv)
        if code != 0:
            return code
        print(f"training took {time.perf_counter() - start:.0f}s",
              file=sys.stderr)

    code = cli.main([
        "classify-eval", "--model", args.output,
        "--train", args.train_docs, "--train-lang", "en",
        "--test", args.test_docs, "--test-lang", "de",
        "--epochs", str(args.classifier_epochs), "--seed", str(args.seed),
    ])
    if code == 0:
        print("reference band for full Europarl + four-topic Reuters: "
              "accuracy 0.83-0.93", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
