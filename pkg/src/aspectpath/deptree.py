"""Paths between tokens of a dependency tree.

A path is written as its grammatical relations with a traversal direction:
``u`` when the step climbs from a dependent to its head, ``d`` when it
descends from a head to a dependent.  ``conj:u/dep:d/amod:d`` climbs one
``conj`` arc and then descends through ``dep`` and ``amod``.
"""
from __future__ import annotations

from collections import deque
from typing import NamedTuple

from .corpus import ParsedSentence, Vocabulary, UNK

UP, DOWN = "u", "d"
MAX_HOPS = 3


class DirectedRelation(NamedTuple):
    label: str
    direction: str  # UP or DOWN

    @property
    def up(self) -> bool:
        return self.direction == UP

    def flipped(self) -> "DirectedRelation":
        return DirectedRelation(self.label, DOWN if self.up else UP)

    def __str__(self) -> str:
        return f"{self.label}:{self.direction}"

    @classmethod
    def parse(cls, text: str) -> "DirectedRelation":
        label, sep, direction = text.rpartition(":")
        if not sep or not label or direction not in (UP, DOWN):
            raise ValueError(f"bad directed relation {text!r}; expected label:u or label:d")
        return cls(label, direction)


class DepPath(tuple):
    """An immutable sequence of :class:`DirectedRelation` steps."""

    def __new__(cls, steps=()):
        steps = tuple(s if isinstance(s, DirectedRelation) else DirectedRelation(*s) for s in steps)
        return super().__new__(cls, steps)

    @property
    def hops(self) -> int:
        return len(self)

    def reversed(self) -> "DepPath":
        return DepPath(s.flipped() for s in reversed(self))

    def __str__(self) -> str:
        return "/".join(str(s) for s in self)

    def __repr__(self) -> str:
        return f"DepPath({str(self)!r})"

    @classmethod
    def parse(cls, text: str) -> "DepPath":
        if not text:
            raise ValueError("empty path")
        return cls(DirectedRelation.parse(part) for part in text.split("/"))


class Triple(NamedTuple):
    w1: int
    w2: int
    path: DepPath


def _depths(sentence: ParsedSentence) -> list[int]:
    depth = [0] * (len(sentence) + 1)
    for i in range(1, len(sentence) + 1):
        d, j = 0, i
        while j != 0:
            j = sentence[j].head
            d += 1
        depth[i] = d
    return depth


def tree_path(sentence: ParsedSentence, i: int, j: int) -> DepPath:
    """The unique path from token ``i`` to token ``j`` through their lowest common ancestor."""
    n = len(sentence)
    if not (1 <= i <= n and 1 <= j <= n) or i == j:
        raise ValueError(f"need two distinct token positions in 1..{n}, got {i}, {j}")
    depth = _depths(sentence)
    up, down = [], []
    a, b = i, j
    while depth[a] > depth[b]:
        up.append(DirectedRelation(sentence[a].rel, UP))
        a = sentence[a].head
    while depth[b] > depth[a]:
        down.append(DirectedRelation(sentence[b].rel, DOWN))
        b = sentence[b].head
    while a != b:
        up.append(DirectedRelation(sentence[a].rel, UP))
        down.append(DirectedRelation(sentence[b].rel, DOWN))
        a, b = sentence[a].head, sentence[b].head
    return DepPath(up + down[::-1])


def paths_from(sentence: ParsedSentence, i: int, max_hops: int = MAX_HOPS) -> list[tuple[int, DepPath]]:
    """All tokens within ``max_hops`` arcs of ``i``, with the path leading to each (BFS order)."""
    kids = sentence.children()
    out = []
    seen = {i}
    queue = deque([(i, ())])
    while queue:
        node, steps = queue.popleft()
        if len(steps) == max_hops:
            continue
        head = sentence[node].head
        nxt = []
        if head and head not in seen:
            nxt.append((head, DirectedRelation(sentence[node].rel, UP)))
        nxt.extend((c, DirectedRelation(sentence[c].rel, DOWN)) for c in kids[node] if c not in seen)
        for other, step in nxt:
            seen.add(other)
            path = steps + (step,)
            out.append((other, DepPath(path)))
            queue.append((other, path))
    return out


def extract_triples(sentence: ParsedSentence, vocab: Vocabulary, max_hops: int = MAX_HOPS,
                    count_paths: bool = True) -> list[Triple]:
    """Triples for every ordered pair of in-vocabulary tokens at most ``max_hops`` apart.

    Each emitted path is also tallied in ``vocab.path_counts`` unless
    ``count_paths`` is false.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    ids = [vocab.word_id(f) for f in sentence.forms]
    triples = []
    for i in range(1, len(sentence) + 1):
        w1 = ids[i - 1]
        if w1 == UNK:
            continue
        for j, path in paths_from(sentence, i, max_hops):
            w2 = ids[j - 1]
            if w2 == UNK:
                continue
            triples.append(Triple(w1, w2, path))
            if count_paths:
                vocab.count_path(path)
    return triples


def dependency_context(sentence: ParsedSentence, i: int, vocab: Vocabulary,
                       max_hops: int = MAX_HOPS) -> list[tuple[DepPath, int]]:
    """``(path, word id)`` pairs for every token reachable from ``i``; OOV words map to UNK."""
    if not 1 <= i <= len(sentence):
        raise IndexError(i)
    return [(path, vocab.word_id(sentence[j].form)) for j, path in paths_from(sentence, i, max_hops)]
