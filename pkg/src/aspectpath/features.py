"""Per-token CRF features built from trained embeddings.

Three real-valued blocks are computed per token and then binned:

* ``W`` - the token's own target vector (d values);
* ``L`` - target vectors of the linear neighbours at offsets -2, -1, +1, +2
  (zeros past the sentence edge), 4d values for the default window of 5;
* ``D`` - the mean over dependency-context pairs of ``compose(path) + word``.

Each binned value becomes one indicator string such as ``W12=7`` or ``L-2_4=3``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .corpus import ParsedSentence
from .deptree import MAX_HOPS, DepPath, paths_from
from .discretize import DiscreteEmbeddingTable, fit_discretizer
from .embed.params import ModelParams, compose_path
from .tagger.templates import baseline_templates

BLOCKS = ("W", "L", "D")
LABELS = ("B", "I", "O")
WINDOW = 5
NO_FEATURES = "_"  # placeholder column for a token without features


class FeatureError(ValueError):
    pass


@dataclass
class FeatureRow:
    index: int
    features: list[str] = field(default_factory=list)
    label: str | None = None


def window_offsets(length: int = WINDOW) -> list[int]:
    if length < 3 or length % 2 == 0:
        raise ValueError("linear window length must be odd and >= 3")
    half = length // 2
    return [k for k in range(-half, half + 1) if k != 0]


def linear_context_vector(sentence: ParsedSentence, i: int, length: int,
                          params: ModelParams) -> np.ndarray:
    n = len(sentence)
    parts = []
    for k in window_offsets(length):
        j = i + k
        parts.append(params.word_vector(sentence[j].form) if 1 <= j <= n else np.zeros(params.d))
    return np.concatenate(parts)


class _PathCache(dict):
    """Composed path vectors; paths over unknown relation labels compose to zeros."""

    def __init__(self, params: ModelParams):
        super().__init__()
        self.params = params

    def __missing__(self, path: DepPath) -> np.ndarray:
        try:
            vec = compose_path(path, self.params)
        except KeyError:
            vec = np.zeros(self.params.d)
        self[path] = vec
        return vec


def dep_context_vector(sentence: ParsedSentence, i: int, params: ModelParams,
                       max_hops: int = MAX_HOPS, cache: dict | None = None) -> np.ndarray:
    cache = cache if cache is not None else _PathCache(params)
    pairs = paths_from(sentence, i, max_hops)
    if not pairs:
        return np.zeros(params.d)
    total = np.zeros(params.d)
    for j, path in pairs:
        total += cache[path] + params.word_vector(sentence[j].form)
    return total / len(pairs)


class FeatureBuilder:
    """Computes real-valued blocks and their indicator strings for one embedding model."""

    def __init__(self, params: ModelParams, length: int = WINDOW, max_hops: int = MAX_HOPS):
        self.params = params
        self.length = length
        self.offsets = window_offsets(length)
        self.max_hops = max_hops
        self._paths = _PathCache(params)

    def block_vectors(self, sentence: ParsedSentence, sets: Iterable[str] = BLOCKS) -> dict[str, np.ndarray]:
        """``{block: n x dim}`` real-valued features for every token."""
        p = self.params
        n = len(sentence)
        out = {}
        sets = set(sets)
        if "W" in sets:
            out["W"] = np.stack([p.word_vector(sentence[i].form) for i in range(1, n + 1)]) if n else \
                np.zeros((0, p.d))
        if "L" in sets:
            out["L"] = np.stack([linear_context_vector(sentence, i, self.length, p)
                                 for i in range(1, n + 1)]) if n else np.zeros((0, p.d * len(self.offsets)))
        if "D" in sets:
            out["D"] = np.stack([dep_context_vector(sentence, i, p, self.max_hops, self._paths)
                                 for i in range(1, n + 1)]) if n else np.zeros((0, p.d))
        return out

    def fit_discretizers(self, sentences: Sequence[ParsedSentence], l: int,
                         sets: Iterable[str] = BLOCKS) -> dict[str, DiscreteEmbeddingTable]:
        sets = [b for b in BLOCKS if b in set(sets)]
        stacks: dict[str, list[np.ndarray]] = {b: [] for b in sets}
        for sent in sentences:
            for b, m in self.block_vectors(sent, sets).items():
                stacks[b].append(m)
        return {b: fit_discretizer(np.concatenate(stacks[b]).T, l) for b in sets}

    def feature_names(self, block: str) -> list[str]:
        d = self.params.d
        if block == "L":
            return [f"L{k:+d}_{j}" for k in self.offsets for j in range(d)]
        return [f"{block}{j}" for j in range(d)]

    def assemble(self, sentence: ParsedSentence, discretizers: dict[str, DiscreteEmbeddingTable],
                 sets: Iterable[str] = BLOCKS, baseline: bool = False,
                 labels: Sequence[str] | None = None) -> list[FeatureRow]:
        sets = [b for b in BLOCKS if b in set(sets)]
        missing = [b for b in sets if b not in discretizers]
        if missing:
            raise FeatureError(f"no discretizer for block(s) {', '.join(missing)}")
        if labels is not None:
            if len(labels) != len(sentence):
                raise FeatureError(f"sentence {sentence.id!r}: {len(labels)} labels for {len(sentence)} tokens")
            bad = [y for y in labels if y not in LABELS]
            if bad:
                raise FeatureError(f"sentence {sentence.id!r}: labels outside B/I/O: {bad}")
        rows = [FeatureRow(i, [], labels[i - 1] if labels is not None else None)
                for i in range(1, len(sentence) + 1)]
        blocks = self.block_vectors(sentence, sets)
        for b in sets:
            codes = discretizers[b].encode(blocks[b].T).T  # n x dim
            names = self.feature_names(b)
            for row, code_row in zip(rows, codes):
                row.features.extend(f"{name}={c}" for name, c in zip(names, code_row))
        if baseline:
            for row, extra in zip(rows, baseline_templates(sentence)):
                row.features.extend(extra)
        return rows


def assemble_features(sentence: ParsedSentence, labels: Sequence[str] | None, params: ModelParams,
                      discretizers: dict[str, DiscreteEmbeddingTable], sets: Iterable[str] = BLOCKS,
                      baseline: bool = False, length: int = WINDOW,
                      max_hops: int = MAX_HOPS) -> list[FeatureRow]:
    return FeatureBuilder(params, length, max_hops).assemble(sentence, discretizers, sets, baseline, labels)


# -- feature files -------------------------------------------------------------

def write_feature_file(stream: IO[str], sentences: Iterable[tuple[str, list[FeatureRow]]]) -> None:
    """One token per line (features TAB-separated, gold label last), blank line after each sentence."""
    for sid, rows in sentences:
        if sid:
            stream.write(f"# sent_id = {sid}\n")
        for row in rows:
            cols = list(row.features) or [NO_FEATURES]
            if row.label is not None:
                cols.append(row.label)
            stream.write("\t".join(cols) + "\n")
        stream.write("\n")


def read_feature_file(stream: IO[str] | Iterable[str]) -> list[tuple[str, list[FeatureRow]]]:
    out: list[tuple[str, list[FeatureRow]]] = []
    rows: list[FeatureRow] = []
    sid = ""

    def flush():
        nonlocal rows, sid
        if rows:
            out.append((sid or str(len(out) + 1), rows))
        rows, sid = [], ""

    for line in stream:
        line = line.rstrip("\r\n")
        if not line:
            flush()
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key.strip() == "sent_id":
                sid = value.strip()
            continue
        cols = line.split("\t")
        label = None
        if cols[-1] != NO_FEATURES and "=" not in cols[-1]:
            label = cols.pop()
        if cols == [NO_FEATURES]:
            cols = []
        rows.append(FeatureRow(len(rows) + 1, cols, label))
    flush()
    return out
