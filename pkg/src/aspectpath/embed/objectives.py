"""Loss/gradient evaluation and negative sampling outside the training loop.

These wrap the compiled kernels the trainer uses, so what the tests check is
exactly what training runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..corpus import Vocabulary
from ..deptree import DepPath, Triple
from . import kernels
from .params import ModelParams


class ContextPair(NamedTuple):
    target: int
    context: int


@dataclass
class SparseGrads:
    """Gradients keyed by row; ``composer`` is dense (zeros when no multi-hop term is live)."""

    target: dict[int, np.ndarray] = field(default_factory=dict)
    context: dict[int, np.ndarray] = field(default_factory=dict)
    relations: dict[int, np.ndarray] = field(default_factory=dict)
    composer: np.ndarray | None = None


def _add(table: dict, row: int, vec: np.ndarray) -> None:
    if row in table:
        table[row] = table[row] + vec
    else:
        table[row] = np.array(vec, dtype=np.float64)


def path_loss_and_grads(triple: Triple, negatives: list[DepPath],
                        params: ModelParams) -> tuple[float, SparseGrads]:
    if not negatives:
        raise ValueError("need at least one negative path")
    hop = triple.path.hops
    for neg in negatives:
        if neg.hops != hop:
            raise ValueError(f"negative {neg} has {neg.hops} hops, triple path has {hop}")
    m = len(negatives)
    d = params.d
    rows = np.stack([params.path_rows(p) for p in (triple.path, *negatives)])
    hops = np.full(m + 1, hop, dtype=np.int64)
    shape = (m + 1, kernels.MAX_HOPS, d)
    H, A, G = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    gu = np.zeros(d)
    gW = np.zeros_like(params.composer)
    loss, _ = kernels.path_loss_grad(params.target, params.relations, params.composer,
                                     triple.w1, triple.w2, rows, hops, m,
                                     H, A, G, gu, gW, np.zeros(d), np.zeros(d), np.zeros(d))
    grads = SparseGrads(composer=gW)
    _add(grads.target, triple.w2, gu)
    _add(grads.target, triple.w1, -gu)
    for j in range(m + 1):
        for i in range(hop):
            _add(grads.relations, int(rows[j, i]), G[j, i])
    return float(loss), grads


def context_loss_and_grads(pair: ContextPair, negatives: list[int],
                           params: ModelParams) -> tuple[float, SparseGrads]:
    if not negatives:
        raise ValueError("need at least one negative word")
    if pair.context in negatives:
        raise ValueError("negatives must not contain the true context word")
    negs = np.asarray(negatives, dtype=np.int64)
    gw = np.zeros(params.d)
    active = np.zeros(len(negs), dtype=np.int64)
    loss, n_active = kernels.context_loss_grad(params.target, params.context, pair.target,
                                               pair.context, negs, len(negs), gw, active)
    w = params.target[pair.target]
    grads = SparseGrads()
    _add(grads.target, pair.target, gw)
    _add(grads.context, pair.context, -n_active * w)
    for cn, live in zip(negs, active):
        _add(grads.context, int(cn), w if live else np.zeros_like(w))
    return float(loss), grads


def sgd_step(params: ModelParams, grads: SparseGrads, lr: float) -> None:
    """In-place ``params -= lr * grads``."""
    for matrix, table in ((params.target, grads.target), (params.context, grads.context),
                          (params.relations, grads.relations)):
        for row, g in table.items():
            matrix[row] -= lr * g
    if grads.composer is not None:
        params.composer -= lr * grads.composer


def sample_negative_paths(hop: int, k: int, exclude: DepPath, vocab: Vocabulary,
                          rng: np.random.Generator) -> list[DepPath]:
    """``k`` paths of ``hop`` hops from the smoothed per-hop table, avoiding ``exclude`` when possible."""
    paths, cdf = vocab.path_table(hop)
    if not paths:
        raise ValueError(f"no {hop}-hop paths to sample from")
    n = len(paths)
    try:
        excl = paths.index(exclude)
    except ValueError:
        excl = -1
    out = []
    for _ in range(k):
        idx = kernels.pick(cdf, n, rng.random())
        tries = 0
        while idx == excl and tries < kernels.RESAMPLE_LIMIT:
            idx = kernels.pick(cdf, n, rng.random())
            tries += 1
        out.append(paths[idx])
    return out


def sample_negative_words(k: int, exclude: int, vocab: Vocabulary,
                          rng: np.random.Generator) -> list[int]:
    """``k`` word ids from the smoothed unigram distribution with ``exclude`` removed."""
    if len(vocab) < 2:
        raise ValueError("need at least two words to sample negatives")
    cdf = vocab.unigram_cdf
    return [int(kernels.draw_excluding(cdf, exclude, rng.random())) for _ in range(k)]
