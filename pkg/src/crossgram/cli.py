"""Command-line interface.

Subcommands: train, query, translate-eval, classify-eval, export.
Exit codes: 0 success, 1 usage error, 2 runtime error. Results go to
standard output; progress and notes go to standard error. Model writing is
write-then-rename, so a failing run never leaves a partial file at the
final path.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluate
from .corpus import AlignedCorpus, MonoCorpus, build_vocab
from .model import (WordSpace, _derive_path, init_model, save_embeddings,
                    write_word_vectors)
from .trainer import ConfigurationError, TrainingConfig, train

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _add_train_parser(sub):
    p = sub.add_parser("train", help="train embeddings from corpora")
    p.add_argument("--config", metavar="FILE",
                   help="key=value defaults; explicit flags win")
    p.add_argument("--pivot", metavar="LANG",
                   help="pivot language id (every bitext pairs it with one language)")
    p.add_argument("--mono", nargs=2, action="append", default=None,
                   metavar=("LANG", "FILE"), help="monolingual corpus, repeatable")
    p.add_argument("--bitext", nargs=3, action="append", default=None,
                   metavar=("LANG", "PIVOT_FILE", "LANG_FILE"),
                   help="sentence-aligned corpus pairing LANG with the pivot, repeatable")
    p.add_argument("--output", metavar="FILE", help="embeddings file to write")
    p.add_argument("--which", choices=["target", "context", "both"], default=None,
                   help="which matrices to export (default target)")
    p.add_argument("--no-lowercase", action="store_true",
                   help="keep corpus case instead of lowercasing")
    p.add_argument("--dump-vocab", metavar="DIR",
                   help="also write per-language vocabulary counts to DIR")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lr-min", type=float, default=None)
    p.add_argument("--sample", type=float, default=None,
                   help="frequent-word subsampling threshold (0 disables)")
    p.add_argument("--alpha", type=float, default=None,
                   help="negative-sampling distribution exponent")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-sentence-len", type=int, default=None)


def _add_query_parser(sub):
    p = sub.add_parser("query", help="nearest neighbors or vector arithmetic")
    p.add_argument("--model", required=True, metavar="FILE",
                   help="prefixed embeddings file (lang:word rows)")
    p.add_argument("--word", metavar="LANG:WORD", help="single query word")
    p.add_argument("--plus", action="append", default=[], metavar="LANG:WORD",
                   help="added term, repeatable")
    p.add_argument("--minus", action="append", default=[], metavar="LANG:WORD",
                   help="subtracted term, repeatable")
    p.add_argument("--target", required=True, metavar="LANG",
                   help="language to rank")
    p.add_argument("-k", type=int, default=10, help="results to print")


def _add_translate_parser(sub):
    p = sub.add_parser("translate-eval", help="word translation P@1 / P@5")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--source", required=True, metavar="LANG")
    p.add_argument("--target", required=True, metavar="LANG")
    p.add_argument("--testset", required=True, metavar="FILE",
                   help="TSV `source<TAB>target`, repeated lines allowed")


def _add_classify_parser(sub):
    p = sub.add_parser("classify-eval", help="cross-lingual document classification")
    p.add_argument("--model", required=True, metavar="FILE")
    p.add_argument("--train", dest="train_docs", required=True, metavar="FILE",
                   help="TSV `label<TAB>tokens` training documents")
    p.add_argument("--train-lang", required=True, metavar="LANG")
    p.add_argument("--test", dest="test_docs", required=True, metavar="FILE")
    p.add_argument("--test-lang", required=True, metavar="LANG")
    p.add_argument("--epochs", type=int, default=10,
                   help="perceptron epochs (default 10)")
    p.add_argument("--seed", type=int, default=1)


def _add_export_parser(sub):
    p = sub.add_parser("export", help="re-export a model file per language")
    p.add_argument("--model", required=True, metavar="FILE",
                   help="prefixed embeddings file to read")
    p.add_argument("--output", required=True, metavar="FILE",
                   help="output path (language inserted before the extension)")
    p.add_argument("--lang", metavar="LANG",
                   help="export just one language to --output as given")


def build_parser() -> _Parser:
    parser = _Parser(prog="crossgram",
                     description="Multilingual word embeddings in one shared "
                                 "space, trained from monolingual text plus "
                                 "pivot-aligned bitext.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    _add_train_parser(sub)
    _add_query_parser(sub)
    _add_translate_parser(sub)
    _add_classify_parser(sub)
    _add_export_parser(sub)
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise _UsageError("a command is required "
                          "(train | query | translate-eval | classify-eval | export)")
    return args


def _read_config_file(path) -> dict:
    """key=value lines; blank lines and # comments ignored. mono and bitext
    may repeat and collect into lists."""
    single = {}
    multi = {"mono": [], "bitext": []}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise _UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key in multi:
                multi[key].append(value.split())
            else:
                single[key] = value
    return {**single, **{k: v for k, v in multi.items() if v}}


_CFG_FIELDS = {
    # flag/config key -> (TrainingConfig field, converter)
    "dim": ("dim", int),
    "window": ("window", int),
    "negatives": ("negatives", int),
    "lr": ("lr_start", float),
    "lr_min": ("lr_min", float),
    "sample": ("subsample_t", float),
    "alpha": ("alpha", float),
    "epochs": ("epochs", int),
    "min_count": ("min_count", int),
    "threads": ("threads", int),
    "seed": ("seed", int),
    "max_sentence_len": ("max_sentence_len", int),
}


def _resolve_train_settings(args):
    """Merge config-file values under explicit flags and build the config."""
    filecfg = _read_config_file(args.config) if args.config else {}

    overrides = {}
    for key, (field_name, conv) in _CFG_FIELDS.items():
        flag_value = getattr(args, key)
        if flag_value is not None:
            overrides[field_name] = flag_value
        elif key in filecfg:
            try:
                overrides[field_name] = conv(filecfg[key])
            except ValueError:
                raise _UsageError(
                    f"config key {key}: expected {conv.__name__}, "
                    f"got {filecfg[key]!r}")
    cfg = TrainingConfig(**overrides)
    try:
        cfg.validate()
    except ConfigurationError as exc:
        raise _UsageError(str(exc))

    pivot = args.pivot or filecfg.get("pivot")
    output = args.output or filecfg.get("output")
    which = args.which or filecfg.get("which", "target")
    monos = args.mono if args.mono is not None else filecfg.get("mono", [])
    bitexts = args.bitext if args.bitext is not None else filecfg.get("bitext", [])
    lowercase = not args.no_lowercase
    if "lowercase" in filecfg and not args.no_lowercase:
        lowercase = filecfg["lowercase"].lower() not in ("0", "false", "no")

    if not pivot:
        raise _UsageError("--pivot is required")
    if not output:
        raise _UsageError("--output is required")
    if not monos and not bitexts:
        raise _UsageError("at least one --mono or --bitext corpus is required")
    if which not in ("target", "context", "both"):
        raise _UsageError(f"which must be target|context|both, got {which!r}")
    for entry in monos:
        if len(entry) != 2:
            raise _UsageError(f"--mono needs LANG FILE, got {entry!r}")
    for entry in bitexts:
        if len(entry) != 3:
            raise _UsageError(f"--bitext needs LANG PIVOT_FILE LANG_FILE, got {entry!r}")
    return cfg, pivot, output, which, monos, bitexts, lowercase


def _cmd_train(args) -> int:
    cfg, pivot, output, which, mono_specs, bitext_specs, lowercase = \
        _resolve_train_settings(args)

    monos = [MonoCorpus(lang, path, lowercase=lowercase)
             for lang, path in mono_specs]
    bitexts = [AlignedCorpus(pivot, lang, pivot_file, lang_file,
                             lowercase=lowercase)
               for lang, pivot_file, lang_file in bitext_specs]

    sources = {}
    for mono in monos:
        sources.setdefault(mono.language, []).append(mono)
    for bt in bitexts:
        view_e, view_f = bt.mono_views()
        sources.setdefault(view_e.language, []).append(view_e)
        sources.setdefault(view_f.language, []).append(view_f)
    if pivot not in sources:
        raise _UsageError(f"no corpus mentions the pivot language {pivot!r}")

    vocabs = []
    for lang in sorted(sources):
        vocab = build_vocab(sources[lang], min_count=cfg.min_count,
                            subsample_t=cfg.subsample_t, alpha=cfg.alpha)
        vocabs.append(vocab)
        print(f"vocab {lang}: {vocab.size} words, {vocab.total_tokens} tokens",
              file=sys.stderr)

    model = init_model(vocabs, cfg.dim, seed=cfg.seed, pivot=pivot)
    model, progress = train(model, monos, bitexts, cfg)
    if progress.dropped_pairs:
        print(f"note: skipped {progress.dropped_pairs} aligned pairs with an "
              f"empty side", file=sys.stderr)

    if args.dump_vocab:
        outdir = Path(args.dump_vocab)
        outdir.mkdir(parents=True, exist_ok=True)
        for lang, vocab in model.vocabs.items():
            with open(outdir / f"{lang}.vocab.tsv", "w", encoding="utf-8") as fh:
                vocab.dump(fh)

    for path in save_embeddings(model, output, which=which, prefixed=True):
        print(f"wrote {path}")
    return 0


def _cmd_query(args) -> int:
    if args.k < 1:
        raise _UsageError("-k must be >= 1")
    has_word = args.word is not None
    has_terms = bool(args.plus or args.minus)
    if has_word == has_terms:
        raise _UsageError("give either --word or --plus/--minus terms")
    for term in ([args.word] if has_word else args.plus + args.minus):
        if ":" not in term:
            raise _UsageError(f"expected LANG:WORD, got {term!r}")

    space = WordSpace.from_prefixed_file(args.model)
    if has_word:
        results = evaluate.nearest_neighbors(space, args.word, args.target,
                                             k=args.k)
    else:
        results = evaluate.arithmetic_query(space, args.plus, args.minus,
                                            args.target, k=args.k)
    for word, score in results:
        print(f"{word}\t{score:.6f}")
    return 0


def _cmd_translate_eval(args) -> int:
    space = WordSpace.from_prefixed_file(args.model)
    testset = evaluate.load_translation_testset(args.testset, args.source,
                                                args.target)
    at1 = evaluate.translation_precision(space, testset, k=1)
    at5 = evaluate.translation_precision(space, testset, k=5)
    print(f"P@1={at1.precision:.4f} P@5={at5.precision:.4f} oov={at1.oov}")
    return 0


def _cmd_classify_eval(args) -> int:
    space = WordSpace.from_prefixed_file(args.model)
    train_docs = evaluate.load_labeled_documents(args.train_docs, args.train_lang)
    test_docs = evaluate.load_labeled_documents(args.test_docs, args.test_lang)
    result = evaluate.classify_crosslingual(space, train_docs, test_docs,
                                            epochs=args.epochs, seed=args.seed)
    print("note: train-side idf from training documents; test-side idf "
          "computed from the test documents", file=sys.stderr)
    print(f"accuracy={result.accuracy:.4f} skipped={result.skipped}")
    return 0


def _cmd_export(args) -> int:
    space = WordSpace.from_prefixed_file(args.model)
    if args.lang:
        if not space.has_language(args.lang):
            raise ValueError(f"model has no language {args.lang!r}")
        path = write_word_vectors(args.output, space.words(args.lang),
                                  space.matrix(args.lang))
        print(f"wrote {path}")
        return 0
    for lang in space.languages:
        path = write_word_vectors(_derive_path(args.output, lang, None),
                                  space.words(lang), space.matrix(lang))
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "query": _cmd_query,
    "translate-eval": _cmd_translate_eval,
    "classify-eval": _cmd_classify_eval,
    "export": _cmd_export,
}


def run(args) -> int:
    return _COMMANDS[args.command](args)


def main(argv=None) -> int:
    try:
        args = parse_args(argv if argv is not None else sys.argv[1:])
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except SystemExit as exc:   # argparse --help exits 0
        return int(exc.code or 0)
    try:
        return run(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (KeyboardInterrupt, BrokenPipeError):
        return RUNTIME_EXIT
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
