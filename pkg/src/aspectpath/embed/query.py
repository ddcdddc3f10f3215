"""Cosine nearest-neighbour queries over target word vectors."""
from __future__ import annotations

import numpy as np

from ..deptree import DepPath
from .params import ModelParams, compose_path


def _word_id(params: ModelParams, word: str | int) -> int:
    wid = params.vocab.word_id(word) if isinstance(word, str) else int(word)
    if not 0 <= wid < len(params.vocab):
        raise KeyError(f"unknown word {word!r}")
    return wid


def query_vector(query, params: ModelParams) -> tuple[np.ndarray, int | None]:
    """Resolve a query to ``(vector, word id to exclude)``.

    Accepts a raw vector, a word (string or id), or a ``(word, path)`` pair
    whose vector is ``w + compose(path)``.
    """
    if isinstance(query, np.ndarray):
        return query.astype(np.float64), None
    if isinstance(query, tuple):
        word, path = query
        if isinstance(path, str):
            path = DepPath.parse(path)
        wid = _word_id(params, word)
        return params.target[wid] + compose_path(path, params), wid
    wid = _word_id(params, query)
    return params.target[wid].copy(), wid


def nearest_neighbors(query, k: int, params: ModelParams) -> list[tuple[str, float]]:
    """Top-``k`` words by cosine similarity; the query word itself is never returned."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vec, exclude = query_vector(query, params)
    qn = np.linalg.norm(vec)
    if qn == 0 or not np.isfinite(qn):
        raise ValueError("undefined cosine: query vector has zero norm")
    norms = np.linalg.norm(params.target, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    cos = np.where(norms > 0, params.target @ vec / (safe * qn), 0.0)
    ids = np.arange(len(cos))
    order = np.lexsort((ids, -cos))
    out = []
    for i in order:
        if i == exclude:
            continue
        out.append((params.vocab.words[i], float(cos[i])))
        if len(out) == k:
            break
    return out
