"""Linear-chain CRF over B/I/O with sparse indicator features.

Emission weights live in an ``F x 3`` matrix indexed by feature string,
transitions in a ``3 x 3`` matrix ``[previous, current]``.  There are no start
or stop weights.  Training is plain SGD on the per-sentence log-likelihood with
the cumulative-penalty form of lazy L1 truncation (Tsuruoka et al., 2009).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

LABELS = ("B", "I", "O")
LABEL_INDEX = {y: k for k, y in enumerate(LABELS)}
NL = len(LABELS)


class CRFError(ValueError):
    pass


@dataclass
class CRFModel:
    feature_index: dict[str, int]
    emission: np.ndarray                 # F x 3
    transition: np.ndarray               # 3 x 3, [prev, cur]
    l1_lambda: float = 1.0
    history: list[float] = field(default_factory=list)  # penalized objective after each epoch

    def __post_init__(self):
        self.emission = np.asarray(self.emission, dtype=np.float64).reshape(-1, NL)
        self.transition = np.asarray(self.transition, dtype=np.float64)
        if self.transition.shape != (NL, NL):
            raise CRFError("transition table must be 3 x 3")
        if len(self.emission) != len(self.feature_index):
            raise CRFError("emission rows do not match the feature index")
        if not (np.isfinite(self.emission).all() and np.isfinite(self.transition).all()):
            raise CRFError("model weights must be finite")

    @classmethod
    def zeros(cls, features: Iterable[str] = (), l1_lambda: float = 1.0) -> "CRFModel":
        index: dict[str, int] = {}
        for f in features:
            index.setdefault(f, len(index))
        return cls(index, np.zeros((len(index), NL)), np.zeros((NL, NL)), l1_lambda)

    @property
    def objective(self) -> float | None:
        return self.history[-1] if self.history else None

    def encode(self, rows: Sequence[Sequence[str]]) -> list[np.ndarray]:
        """Feature ids per token; features unseen in training are dropped."""
        idx = self.feature_index
        return [np.fromiter((idx[f] for f in feats if f in idx), dtype=np.int64) for feats in rows]

    def scores(self, encoded: Sequence[np.ndarray]) -> np.ndarray:
        """``n x 3`` emission scores."""
        out = np.zeros((len(encoded), NL))
        for i, ids in enumerate(encoded):
            if len(ids):
                out[i] = self.emission[ids].sum(axis=0)
        return out


def _features(rows) -> list[list[str]]:
    return [list(getattr(r, "features", r)) for r in rows]


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    return np.squeeze(m, axis) + np.log(np.exp(a - m).sum(axis=axis))


def _forward_backward(E: np.ndarray, T: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Log partition, ``n x 3`` position marginals and ``(n-1) x 3 x 3`` pair marginals."""
    n = len(E)
    if n == 0:
        return 0.0, np.zeros((0, NL)), np.zeros((0, NL, NL))
    alpha = np.empty_like(E)
    beta = np.zeros_like(E)
    alpha[0] = E[0]
    for i in range(1, n):
        alpha[i] = _lse(alpha[i - 1][:, None] + T, 0) + E[i]
    for i in range(n - 2, -1, -1):
        beta[i] = _lse(T + (E[i + 1] + beta[i + 1])[None, :], 1)
    logz = float(_lse(alpha[-1], 0))
    marg = np.exp(alpha + beta - logz)
    pair = np.exp(alpha[:-1, :, None] + T[None] + (E[1:] + beta[1:])[:, None, :] - logz)
    return logz, marg, pair


def forward_backward(model: CRFModel, rows) -> tuple[float, np.ndarray]:
    """``(log Z, n x 3 marginals)`` for one sentence; ``rows`` are FeatureRows or feature lists."""
    E = model.scores(model.encode(_features(rows)))
    logz, marg, _ = _forward_backward(E, model.transition)
    return logz, marg


def _viterbi(E: np.ndarray, T: np.ndarray) -> list[int]:
    # Best completion scores are computed right to left so that a left-to-right
    # decode taking the first maximum yields the lexicographically smallest
    # optimal sequence under B < I < O.
    n = len(E)
    if n == 0:
        return []
    V = np.empty_like(E)
    V[-1] = E[-1]
    for i in range(n - 2, -1, -1):
        V[i] = E[i] + (T + V[i + 1][None, :]).max(axis=1)
    path = [int(np.argmax(V[0]))]
    for i in range(1, n):
        path.append(int(np.argmax(T[path[-1]] + V[i])))
    return path


def viterbi_decode(model: CRFModel, rows) -> list[str]:
    E = model.scores(model.encode(_features(rows)))
    return [LABELS[k] for k in _viterbi(E, model.transition)]


def sequence_score(model: CRFModel, rows, labels: Sequence[str]) -> float:
    E = model.scores(model.encode(_features(rows)))
    y = [LABEL_INDEX[t] for t in labels]
    return float(sum(E[i, k] for i, k in enumerate(y))
                 + sum(model.transition[a, b] for a, b in zip(y, y[1:])))


def log_likelihood(model: CRFModel, rows, labels: Sequence[str]) -> float:
    return sequence_score(model, rows, labels) - forward_backward(model, rows)[0]


def _gradient(model: CRFModel, ids: list[np.ndarray], y: np.ndarray):
    """Log-likelihood, per-token emission gradient rows and transition gradient."""
    E = model.scores(ids)
    logz, marg, pair = _forward_backward(E, model.transition)
    gold = np.eye(NL)[y]
    score = E[np.arange(len(y)), y].sum() + model.transition[y[:-1], y[1:]].sum()
    gT = -pair.sum(axis=0)
    np.add.at(gT, (y[:-1], y[1:]), 1.0)
    return score - logz, gold - marg, gT


def loglik_gradient(model: CRFModel, rows, labels: Sequence[str]) -> tuple[float, np.ndarray, np.ndarray]:
    """Dense ``(log p(y|x), dE, dT)`` for one sentence."""
    ids = model.encode(_features(rows))
    y = np.asarray([LABEL_INDEX[t] for t in labels], dtype=np.int64)
    ll, tok, gT = _gradient(model, ids, y)
    gE = np.zeros_like(model.emission)
    for i, f in enumerate(ids):
        np.add.at(gE, f, tok[i])
    return ll, gE, gT


def _prepare(sentences) -> tuple[list[str], list[tuple[list[np.ndarray], np.ndarray]]]:
    index: dict[str, int] = {}
    data = []
    row_no = 0
    for s, rows in enumerate(sentences):
        ids, ys = [], []
        for r in rows:
            row_no += 1
            label = getattr(r, "label", None)
            if label not in LABEL_INDEX:
                raise CRFError(f"row {row_no} (sentence {s + 1}): label {label!r} is not one of B, I, O")
            ids.append(np.fromiter((index.setdefault(f, len(index)) for f in r.features), dtype=np.int64))
            ys.append(LABEL_INDEX[label])
        if ids:
            data.append((ids, np.asarray(ys, dtype=np.int64)))
    return list(index), data


def _penalized_objective(model: CRFModel, data) -> float:
    ll = sum(_gradient(model, ids, y)[0] for ids, y in data)
    l1 = np.abs(model.emission).sum() + np.abs(model.transition).sum()
    return float(ll - model.l1_lambda * l1)


def train_crf(sentences, l1_lambda: float = 1.0, epochs: int = 20, lr: float = 0.1,
              decay: float = 0.9, seed: int = 0) -> CRFModel:
    """Fit on labelled sentences (sequences of FeatureRow-like objects with ``features``/``label``).

    The learning rate for epoch ``e`` is ``lr * decay**e``; each sentence
    update adds ``rate * l1_lambda / N`` to the cumulative L1 budget, which is
    charged lazily to the weights that the sentence touches.
    """
    if l1_lambda < 0 or lr <= 0 or epochs < 1:
        raise CRFError("need l1_lambda >= 0, lr > 0 and epochs >= 1")
    names, data = _prepare(sentences)
    if not data:
        raise CRFError("empty training set")
    model = CRFModel.zeros(names, l1_lambda)
    W, T = model.emission, model.transition
    qW = np.zeros_like(W)    # penalty actually applied so far, per weight
    qT = np.zeros_like(T)
    u = 0.0                  # penalty every weight could have received
    n = len(data)
    rng = np.random.default_rng(seed)

    def charge(w: np.ndarray, q: np.ndarray) -> None:
        z = w.copy()
        np.copyto(w, np.where(z > 0, np.maximum(0.0, z - (u + q)),
                              np.where(z < 0, np.minimum(0.0, z + (u - q)), z)))
        q += w - z

    for epoch in range(epochs):
        rate = lr * decay ** epoch
        for s in rng.permutation(n):
            ids, y = data[s]
            _, tok, gT = _gradient(model, ids, y)
            flat = np.concatenate(ids)
            if len(flat):
                np.add.at(W, flat, rate * np.repeat(tok, [len(f) for f in ids], axis=0))
            T += rate * gT
            u += rate * l1_lambda / n
            if l1_lambda > 0:
                touched = np.unique(flat)
                sub, qsub = W[touched], qW[touched]
                charge(sub, qsub)
                W[touched], qW[touched] = sub, qsub
                charge(T, qT)
        model.history.append(_penalized_objective(model, data))
        log.info("epoch %d: penalized log-likelihood %.4f", epoch + 1, model.history[-1])
    return model


# -- model files -------------------------------------------------------------

def save_model(model: CRFModel, stream: IO[str]) -> None:
    """Transitions as ``prev<TAB>cur<TAB>weight``, then non-zero ``feature<TAB>label<TAB>weight`` lines."""
    stream.write(f"#L1\t{model.l1_lambda:.17g}\n#TRANSITIONS\n")
    for a in range(NL):
        for b in range(NL):
            stream.write(f"{LABELS[a]}\t{LABELS[b]}\t{model.transition[a, b]:.17g}\n")
    stream.write("#EMISSIONS\n")
    for name, k in model.feature_index.items():
        for j in range(NL):
            w = model.emission[k, j]
            if w != 0.0:
                stream.write(f"{name}\t{LABELS[j]}\t{w:.17g}\n")


def load_model(stream: IO[str] | Iterable[str]) -> CRFModel:
    T = np.zeros((NL, NL))
    index: dict[str, int] = {}
    rows: list[np.ndarray] = []
    l1 = 1.0
    section = None
    for no, line in enumerate(stream, 1):
        line = line.rstrip("\r\n")
        if not line:
            continue
        if line.startswith("#"):
            head = line[1:].split("\t")
            if head[0] == "L1" and len(head) == 2:
                l1 = float(head[1])
            elif head[0] in ("TRANSITIONS", "EMISSIONS"):
                section = head[0]
            continue
        parts = line.rsplit("\t", 2)
        if len(parts) != 3 or section is None or parts[1] not in LABEL_INDEX:
            raise CRFError(f"line {no}: malformed model line")
        try:
            w = float(parts[2])
        except ValueError:
            raise CRFError(f"line {no}: bad weight {parts[2]!r}") from None
        if section == "TRANSITIONS":
            if parts[0] not in LABEL_INDEX:
                raise CRFError(f"line {no}: unknown label {parts[0]!r}")
            T[LABEL_INDEX[parts[0]], LABEL_INDEX[parts[1]]] = w
        else:
            k = index.setdefault(parts[0], len(index))
            if k == len(rows):
                rows.append(np.zeros(NL))
            rows[k][LABEL_INDEX[parts[1]]] = w
    emission = np.array(rows) if rows else np.zeros((0, NL))
    return CRFModel(index, emission, T, l1)
