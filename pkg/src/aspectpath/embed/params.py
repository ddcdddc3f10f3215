"""Model parameters, path composition and their on-disk formats."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import IO

import numpy as np

from ..artifacts import atomic_write, skip_comments
from ..corpus import Vocabulary
from ..deptree import DepPath
from . import kernels

COMPOSER_MAGIC = b"APCOMPW\x01"


class EmbeddingFormatError(ValueError):
    pass


@dataclass
class ModelParams:
    """Target and context word vectors, directed-relation vectors and the composer ``W`` (d x 2d)."""

    vocab: Vocabulary
    target: np.ndarray
    context: np.ndarray
    relations: np.ndarray
    composer: np.ndarray

    def __post_init__(self):
        d = self.target.shape[1]
        if self.context.shape != self.target.shape:
            raise ValueError("target and context matrices differ in shape")
        if self.relations.shape != (2 * len(self.vocab.relations), d):
            raise ValueError("relation matrix must have one row per directed relation")
        if self.composer.shape != (d, 2 * d):
            raise ValueError(f"composer must be {d}x{2 * d}")

    @property
    def d(self) -> int:
        return self.target.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.vocab, self.target.copy(), self.context.copy(),
                           self.relations.copy(), self.composer.copy())

    def word_vector(self, word: str | int) -> np.ndarray:
        """Target vector of ``word``; out-of-vocabulary words get zeros."""
        wid = self.vocab.word_id(word) if isinstance(word, str) else word
        if wid < 0:
            return np.zeros(self.d)
        return self.target[wid]

    def path_rows(self, path: DepPath) -> np.ndarray:
        rows = np.zeros(kernels.MAX_HOPS, dtype=np.int64)
        if not 1 <= path.hops <= kernels.MAX_HOPS:
            raise ValueError(f"paths must have 1..{kernels.MAX_HOPS} hops, got {path.hops}")
        for i, step in enumerate(path):
            rows[i] = self.vocab.relation_row(step.label, step.up)
        return rows


def init_params(vocab: Vocabulary, d: int, rng: np.random.Generator) -> ModelParams:
    """word2vec-style init: small uniform target/relation rows, zero context rows."""
    if d < 1:
        raise ValueError("d must be >= 1")
    half = 0.5 / d
    target = rng.uniform(-half, half, size=(len(vocab), d))
    relations = rng.uniform(-half, half, size=(2 * len(vocab.relations), d))
    bound = np.sqrt(6.0 / (3 * d))
    composer = rng.uniform(-bound, bound, size=(d, 2 * d))
    return ModelParams(vocab, target, np.zeros((len(vocab), d)), relations, composer)


def compose_path(path: DepPath, params: ModelParams) -> np.ndarray:
    rows = params.path_rows(path)
    d = params.d
    H = np.zeros((kernels.MAX_HOPS, d))
    A = np.zeros((kernels.MAX_HOPS, d))
    return kernels.compose(params.relations, params.composer, rows, path.hops, H, A).copy()


def ranking_score(w1: int | str, w2: int | str, path: DepPath, params: ModelParams) -> float:
    ids = []
    for w in (w1, w2):
        wid = params.vocab.word_id(w) if isinstance(w, str) else w
        if not 0 <= wid < len(params.vocab):
            raise KeyError(f"unknown word {w!r}")
        ids.append(wid)
    diff = params.target[ids[1]] - params.target[ids[0]]
    return float(diff @ compose_path(path, params))


# -- text / binary formats ---------------------------------------------------

def write_matrix(stream: IO[str], tokens: list[str], matrix: np.ndarray) -> None:
    stream.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
    for tok, row in zip(tokens, matrix):
        stream.write(tok + " " + " ".join(format(x, ".17g") for x in row) + "\n")


def read_matrix(stream: IO[str]) -> tuple[list[str], np.ndarray]:
    lines = skip_comments(stream)
    rows, d = (int(x) for x in next(lines).split())
    tokens = []
    matrix = np.zeros((rows, d))
    for i in range(rows):
        parts = next(lines).rstrip("\n").rsplit(" ", d)
        if len(parts) != d + 1:
            raise EmbeddingFormatError(f"row {i + 1}: expected {d} values")
        tokens.append(parts[0])
        matrix[i] = [float(x) for x in parts[1:]]
    return tokens, matrix


def write_composer(stream: IO[bytes], W: np.ndarray) -> None:
    d = W.shape[0]
    stream.write(COMPOSER_MAGIC + struct.pack("<Q", d))
    stream.write(np.ascontiguousarray(W, dtype="<f8").tobytes())


def read_composer(stream: IO[bytes]) -> np.ndarray:
    header = stream.read(16)
    if len(header) != 16 or header[:8] != COMPOSER_MAGIC:
        raise EmbeddingFormatError("not a composer file")
    (d,) = struct.unpack("<Q", header[8:])
    data = np.frombuffer(stream.read(), dtype="<f8")
    if data.size != 2 * d * d:
        raise EmbeddingFormatError(f"composer body has {data.size} values, expected {2 * d * d}")
    return data.reshape(d, 2 * d).astype(np.float64)


def artifact_paths(prefix: str) -> dict[str, str]:
    return {
        "vocab": f"{prefix}.vocab",
        "target": f"{prefix}.target.txt",
        "context": f"{prefix}.context.txt",
        "relations": f"{prefix}.relations.txt",
        "composer": f"{prefix}.composer.bin",
    }


def save_params(params: ModelParams, prefix: str, header: str = "") -> dict[str, str]:
    paths = artifact_paths(prefix)
    vocab = params.vocab
    rel_tokens = [vocab.relation_token(r) for r in range(params.relations.shape[0])]
    with atomic_write(paths["vocab"]) as f:
        f.write(header)
        vocab.save(f)
    for key, tokens, matrix in (("target", vocab.words, params.target),
                                ("context", vocab.words, params.context),
                                ("relations", rel_tokens, params.relations)):
        with atomic_write(paths[key]) as f:
            f.write(header)
            write_matrix(f, tokens, matrix)
    with atomic_write(paths["composer"], binary=True) as f:
        write_composer(f, params.composer)
    return paths


def load_params(prefix: str) -> ModelParams:
    paths = artifact_paths(prefix)
    with open(paths["vocab"], encoding="utf-8") as f:
        vocab = Vocabulary.load(f)
    mats = {}
    for key in ("target", "context", "relations"):
        with open(paths[key], encoding="utf-8") as f:
            tokens, mats[key] = read_matrix(f)
        expected = vocab.words if key != "relations" else [
            vocab.relation_token(r) for r in range(2 * len(vocab.relations))]
        if tokens != expected:
            raise EmbeddingFormatError(f"{paths[key]} rows do not match the vocabulary")
    with open(paths["composer"], "rb") as f:
        W = read_composer(f)
    return ModelParams(vocab, mats["target"], mats["context"], mats["relations"], W)
