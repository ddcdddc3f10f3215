"""``aspectpath`` command line: embeddings, features, tagging, scoring and sweeps."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

import numpy as np

from .artifacts import atomic_write, provenance
from .corpus import ParsedSentence, build_vocab, read_conllu
from .deptree import MAX_HOPS, DepPath
from .discretize import DEFAULT_BINS, DiscreteEmbeddingTable
from .embed import TrainConfig, load_params, nearest_neighbors, save_params, train_model
from .eval import (approx_randomization, bio_to_spans, read_spans, span_f1, spans_to_bio,
                   write_spans)
from .features import BLOCKS, WINDOW, FeatureBuilder, read_feature_file, write_feature_file
from .tagger import load_model, save_model, train_crf, viterbi_decode

log = logging.getLogger("aspectpath")

THREADS_ENV = "ASPECTPATH_THREADS"


class UsageError(Exception):
    pass


# -- argument helpers --------------------------------------------------------

def int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def block_list(text: str) -> tuple[str, ...]:
    sets = tuple(b.strip().upper() for b in text.split(",") if b.strip())
    bad = [b for b in sets if b not in BLOCKS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown feature block(s) {bad}; choose from W, L, D")
    return tuple(b for b in BLOCKS if b in sets)


def grid(text: str) -> tuple[int, ...]:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (int(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            values = tuple(range(start, stop + 1, step))
        else:
            values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:step or a,b,c") from None
    if not values:
        raise argparse.ArgumentTypeError(f"grid {text!r} is empty")
    return values


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def add_embedding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=5, help="linear context half-window")
    p.add_argument("--neg-w", type=int, default=5, help="negative words per context pair")
    p.add_argument("--neg-r", type=int_list, default=(5, 3, 2), help="negative paths per hop, e.g. 5,3,2")
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--max-hops", type=int, default=MAX_HOPS)
    p.add_argument("--threads", type=int, default=default_threads(),
                   help=f"worker threads (default from ${THREADS_ENV}, else 1)")
    p.add_argument("--seed", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aspectpath", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag defaults (keys are flag names)")

    p = sub.add_parser("train-emb", parents=[common], help="train word, relation and composer embeddings")
    p.add_argument("--conllu", nargs="+", required=True)
    p.add_argument("--dim", type=int, default=100)
    add_embedding_flags(p)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_train_emb)

    p = sub.add_parser("discretize", parents=[common], help="fit per-block bins on training sentences")
    p.add_argument("--emb", required=True, help="embedding prefix")
    p.add_argument("--conllu", nargs="+", required=True)
    p.add_argument("--l", type=int, default=DEFAULT_BINS, help="number of intervals")
    p.add_argument("--sets", type=block_list, default=BLOCKS)
    p.add_argument("--len", type=int, default=WINDOW, dest="length", help="linear window length")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.<block>.disc")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("features", parents=[common], help="write a CRF feature file")
    p.add_argument("--emb", required=True)
    p.add_argument("--disc", required=True, help="discretizer prefix")
    p.add_argument("--conllu", nargs="+", required=True)
    p.add_argument("--gold", help="span file with gold aspects; adds a label column")
    p.add_argument("--sets", type=block_list, default=BLOCKS)
    p.add_argument("--baseline", action="store_true", help="add the surface feature templates")
    p.add_argument("--len", type=int, default=WINDOW, dest="length")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train-tagger", parents=[common], help="train the CRF")
    p.add_argument("--feat", required=True)
    p.add_argument("--l1", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_tagger)

    p = sub.add_parser("tag", parents=[common], help="decode a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--feat", required=True)
    p.add_argument("--format", choices=("labels", "spans"), default="labels")
    p.add_argument("--strict", action="store_true", help="drop I labels that do not continue a span")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", parents=[common], help="exact-span P/R/F1, optionally with a significance test")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--compare", help="second system's spans for approximate randomization")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("query", parents=[common], help="nearest words to a word or word+path")
    p.add_argument("--emb", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--path", help="e.g. amod:u or conj:u/dep:d")
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sweep", parents=[common], help="dev-set F1 over a grid of l and d")
    p.add_argument("--train", nargs="+", required=True, help="labelled CoNLL-U sentences")
    p.add_argument("--gold", required=True, help="span file for --train")
    p.add_argument("--conllu", nargs="+", help="embedding corpus (default: --train)")
    p.add_argument("--l", type=grid, default=(DEFAULT_BINS,), dest="l_grid")
    p.add_argument("--d", type=grid, default=(100,), dest="d_grid")
    p.add_argument("--sets", type=block_list, default=BLOCKS)
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--len", type=int, default=WINDOW, dest="length")
    add_embedding_flags(p)
    p.add_argument("--l1", type=float, default=1.0)
    p.add_argument("--crf-epochs", type=int, default=20)
    p.add_argument("--crf-lr", type=float, default=0.1)
    p.add_argument("--dev-ratio", type=float, default=0.2)
    p.add_argument("--out", required=True, help="TSV output")
    p.set_defaults(func=cmd_sweep)
    return parser


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                cfg = json.load(f)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        dests = {a.dest: a for a in sub._actions}
        renamed = {"len": "length", "l": "l_grid" if args.command == "sweep" else "l",
                   "d": "d_grid"}
        defaults = {}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            dest = renamed.get(dest, dest) if dest not in dests else dest
            if dest not in dests or dest in ("config", "help"):
                parser.error(f"config key {key!r} is not a flag of {args.command}")
            action = dests[dest]
            if isinstance(value, str) and action.type is not None:
                try:
                    value = action.type(value)
                except argparse.ArgumentTypeError as exc:
                    parser.error(str(exc))
            defaults[dest] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _flags(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}


def _read_sentences(paths: Sequence[str]) -> list[ParsedSentence]:
    sentences = []
    for path in paths:
        sentences.extend(read_conllu(path))
    if not sentences:
        raise ValueError("no sentences read from " + ", ".join(paths))
    return sentences


def _load_discretizers(prefix: str, sets: Sequence[str]) -> dict[str, DiscreteEmbeddingTable]:
    out = {}
    for b in sets:
        with open(f"{prefix}.{b}.disc", encoding="utf-8") as f:
            out[b] = DiscreteEmbeddingTable.load(f)
    return out


def _gold_labels(sentences: Sequence[ParsedSentence], spans: dict) -> list[list[str]]:
    known = {s.id for s in sentences}
    stray = sorted(set(spans) - known)
    if stray:
        raise ValueError(f"gold spans for unknown sentence id(s): {', '.join(stray[:5])}")
    return [spans_to_bio(spans.get(s.id, set()), len(s)) for s in sentences]


def _embedding_config(args, d: int) -> TrainConfig:
    return TrainConfig(d=d, k_w=args.neg_w, k_r=args.neg_r, initial_lr=args.lr, window=args.window,
                       max_hops=args.max_hops, epochs=args.epochs, threads=args.threads, seed=args.seed)


# -- subcommands -------------------------------------------------------------

def cmd_train_emb(args) -> None:
    sentences = _read_sentences(args.conllu)
    vocab = build_vocab(sentences, args.min_count)
    result = train_model(sentences, vocab, _embedding_config(args, args.dim))
    save_params(result.params, args.out, provenance("train-emb", _flags(args)))
    log.info("wrote embeddings for %d words to %s.*", len(vocab), args.out)


def cmd_discretize(args) -> None:
    params = load_params(args.emb)
    sentences = _read_sentences(args.conllu)
    tables = FeatureBuilder(params, args.length).fit_discretizers(sentences, args.l, args.sets)
    header = provenance("discretize", _flags(args))
    for b, table in tables.items():
        with atomic_write(f"{args.out}.{b}.disc") as f:
            f.write(header)
            table.save(f)


def cmd_features(args) -> None:
    params = load_params(args.emb)
    discretizers = _load_discretizers(args.disc, args.sets)
    sentences = _read_sentences(args.conllu)
    labels = None
    if args.gold:
        with open(args.gold, encoding="utf-8") as f:
            labels = _gold_labels(sentences, read_spans(f))
    builder = FeatureBuilder(params, args.length)
    with atomic_write(args.out) as f:
        f.write(provenance("features", _flags(args)))
        write_feature_file(f, ((s.id, builder.assemble(s, discretizers, args.sets, args.baseline,
                                                        labels[k] if labels else None))
                               for k, s in enumerate(sentences)))


def cmd_train_tagger(args) -> None:
    with open(args.feat, encoding="utf-8") as f:
        data = read_feature_file(f)
    model = train_crf([rows for _, rows in data], l1_lambda=args.l1, epochs=args.epochs, lr=args.lr,
                      seed=args.seed)
    with atomic_write(args.out) as f:
        f.write(provenance("train-tagger", _flags(args)))
        f.write(f"# final objective {model.objective:.17g}\n")
        save_model(model, f)


def cmd_tag(args) -> None:
    with open(args.model, encoding="utf-8") as f:
        model = load_model(f)
    with open(args.feat, encoding="utf-8") as f:
        data = read_feature_file(f)
    decoded = [(sid, viterbi_decode(model, rows)) for sid, rows in data]
    with atomic_write(args.out) as f:
        f.write(provenance("tag", _flags(args)))
        if args.format == "spans":
            write_spans(f, {sid: bio_to_spans(y, args.strict) for sid, y in decoded})
        else:
            for sid, labels in decoded:
                f.write(f"# sent_id = {sid}\n" + "".join(y + "\n" for y in labels) + "\n")


def cmd_eval(args) -> None:
    def load(path):
        with open(path, encoding="utf-8") as f:
            return read_spans(f)

    pred, gold = load(args.pred), load(args.gold)
    p, r, f1 = span_f1(pred, gold)
    cols = ["system", "precision", "recall", "f1"]
    rows = [[args.pred, p, r, f1]]
    if args.compare:
        other = load(args.compare)
        rows.append([args.compare, *span_f1(other, gold)])
        if args.iters < 100:
            raise UsageError("--iters must be at least 100")
        pval = approx_randomization(pred, other, gold, args.iters, args.seed)
        cols.append("p_value")
        rows[0].append(pval)
        rows[1].append(pval)
    print("\t".join(cols))
    for row in rows:
        print("\t".join([row[0]] + [f"{x:.6f}" for x in row[1:]]))


def cmd_query(args) -> None:
    params = load_params(args.emb)
    if args.word not in params.vocab.word_index:
        raise ValueError(f"{args.word!r} is not in the vocabulary")
    query = (args.word, DepPath.parse(args.path)) if args.path else args.word
    for word, cosine in nearest_neighbors(query, args.k, params):
        print(f"{word}\t{cosine:.6f}")


def split_sentences(n: int, dev_ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of sentence indices cut into train and dev parts."""
    if not 0 < dev_ratio < 1:
        raise ValueError("dev ratio must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(n)
    n_dev = max(1, int(round(n * dev_ratio)))
    if n_dev >= n:
        raise ValueError("not enough sentences for a train/dev split")
    return np.sort(order[n_dev:]), np.sort(order[:n_dev])


def run_sweep(labelled: Sequence[ParsedSentence], gold_labels: Sequence[Sequence[str]],
              emb_sentences: Sequence[ParsedSentence], args) -> list[tuple]:
    train_idx, dev_idx = split_sentences(len(labelled), args.dev_ratio, args.seed)
    train_s = [labelled[k] for k in train_idx]
    dev_s = [labelled[k] for k in dev_idx]
    gold = {str(k): bio_to_spans(gold_labels[k]) for k in dev_idx}
    results = []
    for d in args.d_grid:
        vocab = build_vocab(emb_sentences, args.min_count)
        params = train_model(emb_sentences, vocab, _embedding_config(args, d)).params
        builder = FeatureBuilder(params, args.length)
        for l in args.l_grid:
            disc = builder.fit_discretizers(train_s, l, args.sets)
            rows = [builder.assemble(s, disc, args.sets, args.baseline, gold_labels[k])
                    for s, k in zip(train_s, train_idx)]
            model = train_crf(rows, l1_lambda=args.l1, epochs=args.crf_epochs, lr=args.crf_lr,
                              seed=args.seed)
            pred = {str(k): bio_to_spans(viterbi_decode(model, builder.assemble(s, disc, args.sets,
                                                                                args.baseline)))
                    for s, k in zip(dev_s, dev_idx)}
            p, r, f1 = span_f1(pred, gold)
            log.info("d=%d l=%d: F1 %.4f", d, l, f1)
            results.append((d, l, len(train_s), len(dev_s), p, r, f1))
    return results


def cmd_sweep(args) -> None:
    labelled = _read_sentences(args.train)
    with open(args.gold, encoding="utf-8") as f:
        labels = _gold_labels(labelled, read_spans(f))
    emb_sentences = _read_sentences(args.conllu) if args.conllu else labelled
    results = run_sweep(labelled, labels, emb_sentences, args)
    with atomic_write(args.out) as f:
        f.write(provenance("sweep", _flags(args)))
        f.write("d\tl\tn_train\tn_dev\tprecision\trecall\tf1\n")
        for d, l, nt, nd, p, r, f1 in results:
            f.write(f"{d}\t{l}\t{nt}\t{nd}\t{p:.6f}\t{r:.6f}\t{f1:.6f}\n")


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"aspectpath {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"aspectpath {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
