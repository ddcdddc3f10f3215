"""Per-dimension min-max binning of real-valued features into ``l`` integer codes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .artifacts import skip_comments

DEFAULT_BINS = 15


@dataclass(frozen=True)
class DiscreteEmbeddingTable:
    """Fitted bins.  ``codes`` holds the training columns' codes (d x num)."""

    mins: np.ndarray
    maxs: np.ndarray
    l: int
    codes: np.ndarray | None = None

    @property
    def d(self) -> int:
        return len(self.mins)

    def encode(self, values: np.ndarray) -> np.ndarray:
        """Codes for ``values`` whose leading axis is the dimension axis."""
        values = np.asarray(values, dtype=np.float64)
        mins = self.mins.reshape((-1,) + (1,) * (values.ndim - 1))
        span = (self.maxs - self.mins).reshape(mins.shape)
        flat = span <= 0
        scaled = np.floor((values - mins) * self.l / np.where(flat, 1.0, span))
        codes = np.clip(scaled, 0, self.l - 1).astype(np.int64)
        return np.where(flat, 0, codes)

    def save(self, stream: IO[str]) -> None:
        stream.write(f"{self.d} {self.l}\n")
        for lo, hi in zip(self.mins, self.maxs):
            stream.write(f"{lo:.17g} {hi:.17g}\n")

    @classmethod
    def load(cls, stream: IO[str] | Iterable[str]) -> "DiscreteEmbeddingTable":
        lines = skip_comments(stream)
        d, l = (int(x) for x in next(lines).split())
        bounds = np.array([[float(x) for x in next(lines).split()] for _ in range(d)]).reshape(d, 2)
        return cls(bounds[:, 0].copy(), bounds[:, 1].copy(), l)


def fit_discretizer(columns: np.ndarray, l: int = DEFAULT_BINS) -> DiscreteEmbeddingTable:
    """Fit bins on a d x num matrix whose columns are feature vectors.

    ``code = floor((x - min) * l / (max - min))`` per dimension, with the value
    ``l`` (reached only at the maximum) folded into ``l - 1`` and constant
    dimensions mapped to 0.
    """
    if l < 2:
        raise ValueError("need at least 2 bins")
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim != 2 or columns.shape[1] == 0:
        raise ValueError("expected a non-empty d x num matrix")
    if not np.isfinite(columns).all():
        raise ValueError("matrix has non-finite entries")
    table = DiscreteEmbeddingTable(columns.min(axis=1), columns.max(axis=1), l)
    return DiscreteEmbeddingTable(table.mins, table.maxs, l, table.encode(columns))


def apply_discretizer(table: DiscreteEmbeddingTable, vector: np.ndarray) -> np.ndarray:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape[0] != table.d:
        raise ValueError(f"vector has {vector.shape[0]} dimensions, discretizer expects {table.d}")
    return table.encode(vector)
