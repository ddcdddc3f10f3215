"""Analytic gradients of both hinge losses against central finite differences.

The oracle losses below are plain numpy re-implementations; they share no code
with the compiled kernels.
"""
import time

import numpy as np
import pytest

from aspectpath.deptree import DepPath, DirectedRelation, Triple
from aspectpath.embed import ContextPair, context_loss_and_grads, path_loss_and_grads

from helpers import LABELS, toy_params, toy_vocab

EPS = 1e-5
TOL = 1e-4
BOUNDARY = 1e-3


def oracle_compose(path, params):
    R, W = params.relations, params.composer
    rows = [params.vocab.relation_row(s.label, s.up) for s in path]
    h = R[rows[0]].copy()
    pre = []
    for r in rows[1:]:
        a = W @ np.concatenate([h, R[r]])
        pre.append(a)
        h = np.clip(a, -1.0, 1.0)
    return h, pre


def oracle_path_loss(triple, negatives, params):
    u = params.target[triple.w2] - params.target[triple.w1]
    pos = u @ oracle_compose(triple.path, params)[0]
    return sum(max(0.0, 1.0 - pos + u @ oracle_compose(n, params)[0]) for n in negatives)


def oracle_context_loss(pair, negatives, params):
    w = params.target[pair.target]
    s = w @ params.context[pair.context]
    return sum(max(0.0, 1.0 - s + w @ params.context[n]) for n in negatives)


def random_path(rng, hops):
    return DepPath(DirectedRelation(LABELS[rng.integers(len(LABELS))], "ud"[rng.integers(2)])
                   for _ in range(hops))


def dense(grads, params):
    out = {"target": np.zeros_like(params.target), "context": np.zeros_like(params.context),
           "relations": np.zeros_like(params.relations), "composer": np.zeros_like(params.composer)}
    for key in ("target", "context", "relations"):
        for row, g in getattr(grads, key).items():
            out[key][row] += g
    if grads.composer is not None:
        out["composer"] += grads.composer
    return out


def numeric(loss, params, entries):
    out = {k: np.zeros_like(getattr(params, k)) for k in ("target", "context", "relations", "composer")}
    for key, idx in entries:
        m = getattr(params, key)
        old = m[idx]
        m[idx] = old + EPS
        up = loss()
        m[idx] = old - EPS
        down = loss()
        m[idx] = old
        out[key][idx] = (up - down) / (2 * EPS)
    return out


def rel_error(a, n):
    va = np.concatenate([x.ravel() for x in a.values()])
    vn = np.concatenate([x.ravel() for x in n.values()])
    scale = max(np.linalg.norm(va), np.linalg.norm(vn))
    return 0.0 if scale == 0 else np.linalg.norm(va - vn) / scale


def near_boundary_path(triple, negatives, params):
    u = params.target[triple.w2] - params.target[triple.w1]
    pos, pre = oracle_compose(triple.path, params)
    acts = list(pre)
    margins = []
    for n in negatives:
        h, p = oracle_compose(n, params)
        acts += p
        margins.append(1.0 - u @ pos + u @ h)
    if any(abs(m) < BOUNDARY for m in margins) or not any(m > 0 for m in margins):
        return True
    return any(np.any(np.abs(np.abs(a) - 1.0) < BOUNDARY) for a in acts)


def path_instance(rng, d, hops):
    vocab = toy_vocab()
    while True:
        params = toy_params(d, rng, vocab, scale=rng.choice([0.3, 0.8]))
        w1, w2 = rng.choice(len(vocab), size=2, replace=False)
        triple = Triple(int(w1), int(w2), random_path(rng, hops))
        negatives = [random_path(rng, hops) for _ in range(int(rng.integers(1, 6)))]
        if not near_boundary_path(triple, negatives, params):
            return triple, negatives, params


def check_path(rng, d, hops):
    triple, negatives, params = path_instance(rng, d, hops)
    loss, grads = path_loss_and_grads(triple, negatives, params)
    assert loss == pytest.approx(oracle_path_loss(triple, negatives, params), rel=1e-12, abs=1e-12)
    rows = {params.vocab.relation_row(s.label, s.up) for p in (triple.path, *negatives) for s in p}
    entries = [("target", (w, c)) for w in {triple.w1, triple.w2} for c in range(d)]
    entries += [("relations", (r, c)) for r in rows for c in range(d)]
    entries += [("composer", idx) for idx in np.ndindex(params.composer.shape)]
    num = numeric(lambda: oracle_path_loss(triple, negatives, params), params, entries)
    err = rel_error(dense(grads, params), num)
    assert err < TOL, (d, hops, err)


def check_context(rng, d):
    vocab = toy_vocab(8)
    while True:
        params = toy_params(d, rng, vocab, scale=rng.choice([0.3, 0.8]))
        t, c = (int(x) for x in rng.choice(len(vocab), size=2, replace=False))
        negs = [int(x) for x in rng.choice([k for k in range(len(vocab)) if k != c], size=int(rng.integers(1, 6)))]
        w = params.target[t]
        margins = [1 - w @ params.context[c] + w @ params.context[n] for n in negs]
        if all(abs(m) >= BOUNDARY for m in margins) and any(m > 0 for m in margins):
            break
    pair = ContextPair(t, c)
    loss, grads = context_loss_and_grads(pair, negs, params)
    assert loss == pytest.approx(oracle_context_loss(pair, negs, params), rel=1e-12, abs=1e-12)
    entries = [("target", (t, k)) for k in range(d)]
    entries += [("context", (r, k)) for r in {c, *negs} for k in range(d)]
    num = numeric(lambda: oracle_context_loss(pair, negs, params), params, entries)
    assert rel_error(dense(grads, params), num) < TOL


@pytest.mark.parametrize("hops", [1, 2, 3])
@pytest.mark.parametrize("d", [3, 5, 10])
def test_path_gradient_matches_finite_differences(d, hops):
    rng = np.random.default_rng(100 * d + hops)
    for _ in range(12):
        check_path(rng, d, hops)


@pytest.mark.parametrize("d", [3, 5, 10])
def test_context_gradient_matches_finite_differences(d):
    rng = np.random.default_rng(d)
    for _ in range(34):
        check_context(rng, d)


def test_gradient_suite_budget():
    """100 instances per loss over d in {3, 5, 10} within the time budget."""
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    for k in range(100):
        check_path(rng, (3, 5, 10)[k % 3], 1 + k % 3)
        check_context(rng, (3, 5, 10)[k % 3])
    assert time.perf_counter() - start < 10.0
