"""Joint training of word, relation and composer parameters.

Each sentence contributes, token by token, the linear-context pairs of that
token followed by the path triples that start at it.  The resulting instance
stream is cut into contiguous per-thread slices (whole sentences) and every
thread runs the compiled SGD loop on the shared arrays, Hogwild-style.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import UNK, ParsedSentence, Vocabulary
from ..deptree import MAX_HOPS, DepPath, paths_from
from . import kernels
from .params import ModelParams, init_params

log = logging.getLogger(__name__)

TRACE_EVERY = 1000


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    d: int = 100
    k_w: int = 5
    k_r: tuple[int, int, int] = (5, 3, 2)
    initial_lr: float = 0.001
    window: int = 5
    max_hops: int = MAX_HOPS
    epochs: int = 5
    threads: int = 1
    seed: int = 1

    def __post_init__(self):
        self.k_r = tuple(int(k) for k in self.k_r)
        counts = [self.d, self.k_w, *self.k_r, self.window, self.max_hops, self.epochs, self.threads]
        if len(self.k_r) != MAX_HOPS or min(counts) < 1:
            raise ValueError("all counts in TrainConfig must be >= 1 (and k_r has one entry per hop)")
        if self.max_hops > MAX_HOPS:
            raise ValueError(f"max_hops is capped at {MAX_HOPS}")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")


@dataclass
class Instances:
    """Flat encoding of the training stream plus the path tables it refers to."""

    kind: np.ndarray
    a: np.ndarray
    b: np.ndarray
    p: np.ndarray
    sentence_starts: np.ndarray  # offset of each sentence's first instance, plus a final sentinel
    paths: list[DepPath]
    path_rows: np.ndarray
    path_hops: np.ndarray
    hop_ids: np.ndarray
    hop_cdf: np.ndarray
    hop_n: np.ndarray
    hop_pos: np.ndarray
    n_pairs: int = 0
    n_triples: int = 0


@dataclass
class TrainResult:
    params: ModelParams
    instances: Instances
    loss_trace: list[float] = field(default_factory=list)  # mean loss per TRACE_EVERY instances


def linear_pairs(ids: Sequence[int], i: int, window: int) -> list[int]:
    """Positions (0-based) of the linear context of ``i``; both ends truncated at the sentence."""
    lo, hi = max(0, i - window), min(len(ids), i + window + 1)
    return [j for j in range(lo, hi) if j != i]


def build_instances(sentences: Sequence[ParsedSentence], vocab: Vocabulary,
                    config: TrainConfig) -> Instances:
    """Encode pairs and triples, recounting ``vocab.path_counts`` from scratch.

    Paths seen fewer than ``vocab.min_count`` times are dropped along with
    their triples, mirroring the word filter.
    """
    vocab.path_counts.clear()
    vocab._path_tables.clear()
    raw: list[tuple[int, int, int, DepPath | None]] = []
    starts = [0]
    for sent in sentences:
        ids = [vocab.word_id(f) for f in sent.forms]
        for i, wid in enumerate(ids):
            if wid == UNK:
                continue
            for j in linear_pairs(ids, i, config.window):
                if ids[j] != UNK:
                    raw.append((0, wid, ids[j], None))
            for j, path in paths_from(sent, i + 1, config.max_hops):
                if ids[j - 1] != UNK and all(st.label in vocab.relation_index for st in path):
                    raw.append((1, wid, ids[j - 1], path))
                    vocab.count_path(path)
        starts.append(len(raw))

    paths: list[DepPath] = []
    pid: dict[DepPath, int] = {}
    hop_pos = []
    tables = [vocab.path_table(h) for h in range(1, MAX_HOPS + 1)]
    for table, _ in tables:
        for pos, path in enumerate(table):
            pid[path] = len(paths)
            paths.append(path)
            hop_pos.append(pos)
    path_rows = np.zeros((max(len(paths), 1), MAX_HOPS), dtype=np.int64)
    for k, path in enumerate(paths):
        for i, s in enumerate(path):
            path_rows[k, i] = vocab.relation_row(s.label, s.up)
    width = max([len(t) for t, _ in tables] + [1])
    hop_ids = np.zeros((MAX_HOPS, width), dtype=np.int64)
    hop_cdf = np.ones((MAX_HOPS, width))
    hop_n = np.zeros(MAX_HOPS, dtype=np.int64)
    for h, (table, cdf) in enumerate(tables):
        hop_n[h] = len(table)
        for pos, path in enumerate(table):
            hop_ids[h, pos] = pid[path]
        hop_cdf[h, : len(table)] = cdf

    kind, a, b, p = [], [], [], []
    kept_starts = [0]
    cursor = 0
    for s in range(len(starts) - 1):
        for n in range(starts[s], starts[s + 1]):
            k, w1, w2, path = raw[n]
            if k == 1:
                q = pid.get(path, -1)
                if q < 0:
                    continue
            else:
                q = -1
            kind.append(k)
            a.append(w1)
            b.append(w2)
            p.append(q)
            cursor += 1
        kept_starts.append(cursor)

    kind_arr = np.asarray(kind, dtype=np.int8)
    return Instances(
        kind=kind_arr, a=np.asarray(a, dtype=np.int64), b=np.asarray(b, dtype=np.int64),
        p=np.asarray(p, dtype=np.int64), sentence_starts=np.asarray(kept_starts, dtype=np.int64),
        paths=paths, path_rows=path_rows,
        path_hops=np.asarray([pp.hops for pp in paths] or [1], dtype=np.int64),
        hop_ids=hop_ids, hop_cdf=hop_cdf, hop_n=hop_n,
        hop_pos=np.asarray(hop_pos or [0], dtype=np.int64),
        n_pairs=int((kind_arr == 0).sum()), n_triples=int((kind_arr == 1).sum()),
    )


def _thread_slices(starts: np.ndarray, threads: int) -> list[tuple[int, int]]:
    n_sent = len(starts) - 1
    bounds = [round(t * n_sent / threads) for t in range(threads + 1)]
    return [(int(starts[bounds[t]]), int(starts[bounds[t + 1]])) for t in range(threads)]


def _seed_states(seed: int, threads: int) -> list[np.ndarray]:
    states = []
    for child in np.random.SeedSequence(seed).spawn(threads):
        value = int(child.generate_state(1, dtype=np.uint64)[0]) or 0x9E3779B97F4A7C15
        states.append(np.array([value], dtype=np.uint64))
    return states


def train_model(sentences: Sequence[ParsedSentence], vocab: Vocabulary,
                config: TrainConfig | None = None) -> TrainResult:
    config = config or TrainConfig()
    if len(vocab) < 2:
        raise TrainingError("vocabulary needs at least two words for negative sampling")
    inst = build_instances(sentences, vocab, config)
    if len(inst.kind) == 0:
        raise TrainingError("no trainable instances (check min_count and input)")
    log.info("training on %d pairs and %d triples (%d distinct paths)",
             inst.n_pairs, inst.n_triples, len(inst.paths))

    rng = np.random.default_rng(config.seed)
    params = init_params(vocab, config.d, rng)
    k_r = np.asarray(config.k_r, dtype=np.int64)
    total = float(len(inst.kind) * config.epochs)
    progress = np.zeros(1, dtype=np.int64)
    slices = _thread_slices(inst.sentence_starts, config.threads)
    states = _seed_states(config.seed, config.threads)
    trace: list[float] = []

    def run(t: int, out: np.ndarray) -> None:
        start, end = slices[t]
        kernels.train_range(params.target, params.context, params.relations, params.composer,
                            vocab.unigram_cdf, inst.path_rows, inst.path_hops, inst.hop_ids,
                            inst.hop_cdf, inst.hop_n, inst.hop_pos, inst.kind, inst.a, inst.b,
                            inst.p, start, end, config.k_w, k_r, config.initial_lr, total,
                            progress, states[t], out, TRACE_EVERY)

    for epoch in range(config.epochs):
        outs = [np.zeros((e - s) // TRACE_EVERY + 1) for s, e in slices]
        if config.threads == 1:
            run(0, outs[0])
        else:
            workers = [threading.Thread(target=run, args=(t, outs[t])) for t in range(config.threads)]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
        for (s, e), out in zip(slices, outs):
            full = (e - s) // TRACE_EVERY
            trace.extend((out[:full] / TRACE_EVERY).tolist())
        log.info("epoch %d: mean loss %.4f", epoch + 1,
                 sum(o.sum() for o in outs) / max(len(inst.kind), 1))
    if not all(np.isfinite(m).all() for m in (params.target, params.context,
                                              params.relations, params.composer)):
        raise TrainingError("parameters diverged to non-finite values")
    return TrainResult(params, inst, trace)


def train(sentences: Sequence[ParsedSentence], vocab: Vocabulary,
          config: TrainConfig | None = None) -> ModelParams:
    return train_model(sentences, vocab, config).params
