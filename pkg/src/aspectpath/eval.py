"""Exact-span scoring of aspect terms and paired approximate-randomization tests.

A span set maps sentence ids to sets of ``(start, end)`` token spans, 1-based
and inclusive.
"""
from __future__ import annotations

import itertools
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .artifacts import skip_comments

Span = tuple[int, int]
SpanSet = dict[str, set[Span]]


def bio_to_spans(labels: Sequence[str], strict: bool = False) -> set[Span]:
    """Spans start at B and run through following I's.

    An I that follows O (or opens the sentence) starts a span of its own;
    with ``strict=True`` such orphan I's are ignored instead.
    """
    spans = set()
    start = None
    for i, y in enumerate(labels, 1):
        if y == "B" or (y == "I" and start is None and not strict):
            if start is not None:
                spans.add((start, i - 1))
            start = i
        elif y != "I":
            if start is not None:
                spans.add((start, i - 1))
            start = None
    if start is not None:
        spans.add((start, len(labels)))
    return spans


def spans_to_bio(spans: Iterable[Span], n: int) -> list[str]:
    labels = ["O"] * n
    for start, end in sorted(spans):
        if not 1 <= start <= end <= n:
            raise ValueError(f"span {(start, end)} outside a sentence of {n} tokens")
        labels[start - 1] = "B"
        for k in range(start, end):
            labels[k] = "I"
    return labels


def _counts(pred: Mapping[str, set[Span]], gold: Mapping[str, set[Span]]) -> tuple[int, int, int]:
    hit = sum(len(spans & gold.get(sid, set())) for sid, spans in pred.items())
    return hit, sum(len(s) for s in pred.values()), sum(len(s) for s in gold.values())


def _prf(hit: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    p = hit / n_pred if n_pred else (1.0 if n_gold == 0 else 0.0)
    r = hit / n_gold if n_gold else (1.0 if n_pred == 0 else 0.0)
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def span_f1(pred: Mapping[str, set[Span]], gold: Mapping[str, set[Span]]) -> tuple[float, float, float]:
    """Exact-match ``(precision, recall, f1)``; an empty side scores 1 only against an empty side."""
    return _prf(*_counts(pred, gold))


def _per_sentence(pred_a, pred_b, gold):
    sids = sorted(set(pred_a) | set(pred_b) | set(gold))
    rows = []
    for sid in sids:
        a, b, g = pred_a.get(sid, set()), pred_b.get(sid, set()), gold.get(sid, set())
        rows.append((len(a & g), len(a), len(b & g), len(b)))
    m = np.asarray(rows, dtype=np.int64).reshape(-1, 4)
    return m, sum(len(s) for s in gold.values())


def _f1_vec(hit, n_pred, n_gold):
    hit, n_pred = np.asarray(hit, dtype=np.float64), np.asarray(n_pred, dtype=np.float64)
    if n_gold == 0:
        r = np.where(n_pred == 0, 1.0, 0.0)
    else:
        r = hit / n_gold
    p = np.where(n_pred > 0, hit / np.maximum(n_pred, 1), 1.0 if n_gold == 0 else 0.0)
    return np.where(p + r > 0, 2 * p * r / np.where(p + r > 0, p + r, 1.0), 0.0)


def _swap_stats(m: np.ndarray, n_gold: int, swaps: np.ndarray) -> np.ndarray:
    """|F1(a') - F1(b')| for each row of a boolean swap matrix (iterations x sentences)."""
    s = swaps.astype(np.int64)
    keep = 1 - s
    ha = keep @ m[:, 0] + s @ m[:, 2]
    na = keep @ m[:, 1] + s @ m[:, 3]
    hb = keep @ m[:, 2] + s @ m[:, 0]
    nb = keep @ m[:, 3] + s @ m[:, 1]
    return np.abs(_f1_vec(ha, na, n_gold) - _f1_vec(hb, nb, n_gold))


def _observed(m, n_gold) -> float:
    return float(_swap_stats(m, n_gold, np.zeros((1, len(m)), dtype=bool))[0])


# Float noise in F1 differences must not decide whether a shuffle "ties" the observed value.
_TOL = 1e-12


def approx_randomization(pred_a: Mapping[str, set[Span]], pred_b: Mapping[str, set[Span]],
                         gold: Mapping[str, set[Span]], iterations: int = 1000,
                         seed: int = 0, batch: int = 4096) -> float:
    """Two-sided p-value for ``|F1(a) - F1(b)|`` under per-sentence swapping."""
    if iterations < 1:
        raise ValueError("iterations must be positive")
    m, n_gold = _per_sentence(pred_a, pred_b, gold)
    observed = _observed(m, n_gold)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < iterations:
        k = min(batch, iterations - done)
        swaps = rng.random((k, len(m))) < 0.5
        hits += int((_swap_stats(m, n_gold, swaps) >= observed - _TOL).sum())
        done += k
    return (hits + 1) / (iterations + 1)


def exact_randomization(pred_a, pred_b, gold, max_sentences: int = 20) -> float:
    """Share of all 2^n swap patterns whose statistic reaches the observed one."""
    m, n_gold = _per_sentence(pred_a, pred_b, gold)
    if len(m) > max_sentences:
        raise ValueError(f"exhaustive enumeration over {len(m)} sentences is too large")
    observed = _observed(m, n_gold)
    swaps = np.array(list(itertools.product((False, True), repeat=len(m))), dtype=bool).reshape(-1, len(m))
    return float((_swap_stats(m, n_gold, swaps) >= observed - _TOL).mean())


# -- span files --------------------------------------------------------------

def labels_to_spanset(labelled: Iterable[tuple[str, Sequence[str]]], strict: bool = False) -> SpanSet:
    return {sid: bio_to_spans(labels, strict) for sid, labels in labelled}


def write_spans(stream: IO[str], spans: Mapping[str, set[Span]]) -> None:
    for sid, ss in spans.items():
        for start, end in sorted(ss):
            stream.write(f"{sid}\t{start}\t{end}\n")


def read_spans(stream: IO[str] | Iterable[str]) -> SpanSet:
    out: SpanSet = {}
    for no, line in enumerate(skip_comments(stream), 1):
        line = line.rstrip("\r\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        try:
            sid, start, end = parts[0], int(parts[1]), int(parts[2])
        except (IndexError, ValueError):
            raise ValueError(f"span line {no}: expected sentence_id<TAB>start<TAB>end") from None
        if not 1 <= start <= end:
            raise ValueError(f"span line {no}: bad span {start}-{end}")
        out.setdefault(sid, set()).add((start, end))
    return out
