"""CoNLL-U ingestion and vocabularies.

Sentences come in pre-parsed; the only normalization applied to word forms is
lowercasing.  A :class:`Vocabulary` holds the word and relation-label inventories
together with the smoothed unigram distribution used for negative sampling.
Per-hop path counts are attached later by :func:`aspectpath.deptree.extract_triples`.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

log = logging.getLogger(__name__)

UNK = -1
SMOOTHING_POWER = 0.75


class ConlluError(ValueError):
    """A malformed line or an invalid tree in CoNLL-U input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VocabError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Token:
    form: str
    pos: str
    head: int
    rel: str
    raw: str = ""

    @property
    def surface(self) -> str:
        return self.raw or self.form


@dataclass(frozen=True)
class ParsedSentence:
    """One dependency-parsed sentence.  Token positions are 1-based, 0 is the root."""

    tokens: tuple[Token, ...]
    id: str = ""

    def __post_init__(self):
        n = len(self.tokens)
        roots = 0
        for i, tok in enumerate(self.tokens, 1):
            if not tok.form:
                raise ConlluError(f"sentence {self.id!r}: empty form at token {i}")
            if not 0 <= tok.head <= n:
                raise ConlluError(f"sentence {self.id!r}: head {tok.head} of token {i} out of range")
            if tok.head == i:
                raise ConlluError(f"sentence {self.id!r}: token {i} is its own head")
            roots += tok.head == 0
        if n and roots != 1:
            raise ConlluError(f"sentence {self.id!r}: expected exactly one root, found {roots}")
        for i in range(1, n + 1):
            seen = set()
            j = i
            while j != 0:
                if j in seen:
                    raise ConlluError(f"sentence {self.id!r}: cycle through token {i}")
                seen.add(j)
                j = self.tokens[j - 1].head

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> Token:
        """1-based token access."""
        if not 1 <= i <= len(self.tokens):
            raise IndexError(i)
        return self.tokens[i - 1]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(len(self.tokens) + 1)]
        for i, tok in enumerate(self.tokens, 1):
            kids[tok.head].append(i)
        return kids


def _sentence_from_block(rows: list[tuple[int, list[str]]], sent_id: str) -> ParsedSentence:
    tokens = []
    for lineno, cols in rows:
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"non-integer HEAD {cols[6]!r}", lineno) from None
        raw = cols[1]
        pos = cols[3] if cols[3] != "_" else cols[4]
        tokens.append(Token(form=raw.lower(), pos=pos, head=head, rel=cols[7], raw=raw))
    return ParsedSentence(tuple(tokens), sent_id)


def iter_conllu(stream: IO[str] | Iterable[str],
                errors: list[ConlluError] | None = None) -> Iterator[ParsedSentence]:
    """Yield sentences from a CoNLL-U stream.

    A malformed line or an invalid tree drops the sentence that contains it;
    reading continues with the next block.  Diagnostics are logged and, when
    ``errors`` is given, appended to it.
    """
    def fail(exc: ConlluError):
        log.warning("skipping sentence: %s", exc)
        if errors is not None:
            errors.append(exc)

    rows: list[tuple[int, list[str]]] = []
    bad: ConlluError | None = None
    sent_id = ""
    ordinal = 0
    lineno = 0

    def flush():
        nonlocal rows, bad, sent_id, ordinal
        if rows or bad:
            ordinal += 1
            sid = sent_id or str(ordinal)
            if bad is not None:
                fail(bad)
            else:
                try:
                    yield _sentence_from_block(rows, sid)
                except ConlluError as exc:
                    if exc.line is None:
                        exc = ConlluError(str(exc), rows[0][0])
                    fail(exc)
        rows, bad, sent_id = [], None, ""

    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            yield from flush()
            continue
        if line.startswith("#"):
            if not rows and line[1:].strip().startswith("sent_id"):
                _, _, value = line.partition("=")
                sent_id = value.strip()
            continue
        if bad is not None:
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            bad = ConlluError(f"expected 10 columns, got {len(cols)}", lineno)
            continue
        if "-" in cols[0] or "." in cols[0]:
            continue  # multiword token or empty node
        try:
            idx = int(cols[0])
            int(cols[6])
        except ValueError:
            bad = ConlluError(f"non-integer ID or HEAD in {cols[0]!r}/{cols[6]!r}", lineno)
            continue
        if idx != len(rows) + 1:
            bad = ConlluError(f"token ID {idx} out of sequence", lineno)
            continue
        rows.append((lineno, cols))
    yield from flush()


def parse_conllu(stream: IO[str] | Iterable[str],
                 errors: list[ConlluError] | None = None) -> list[ParsedSentence]:
    return list(iter_conllu(stream, errors))


def read_conllu(path: str, errors: list[ConlluError] | None = None) -> list[ParsedSentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f, errors)


def write_conllu(sentences: Iterable[ParsedSentence], stream: IO[str]) -> None:
    for sent in sentences:
        if sent.id:
            stream.write(f"# sent_id = {sent.id}\n")
        for i, tok in enumerate(sent.tokens, 1):
            cols = [str(i), tok.surface, "_", tok.pos or "_", "_", "_", str(tok.head), tok.rel, "_", "_"]
            stream.write("\t".join(cols) + "\n")
        stream.write("\n")


def smoothed_cdf(counts: np.ndarray) -> np.ndarray:
    """Cumulative count**0.75 weights, the shape every negative sampler draws from."""
    return np.cumsum(np.asarray(counts, dtype=np.float64) ** SMOOTHING_POWER)


@dataclass
class Vocabulary:
    words: list[str]
    word_counts: np.ndarray
    relations: list[str]
    relation_counts: np.ndarray
    min_count: int = 1
    path_counts: dict[int, Counter] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.word_counts = np.asarray(self.word_counts, dtype=np.int64)
        self.relation_counts = np.asarray(self.relation_counts, dtype=np.int64)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.relation_index = {r: i for i, r in enumerate(self.relations)}
        if len(self.word_index) != len(self.words) or len(self.relation_index) != len(self.relations):
            raise VocabError("duplicate entries in vocabulary")
        self.unigram_cdf = smoothed_cdf(self.word_counts)
        self._path_tables: dict[int, tuple[list, np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_index

    def word_id(self, word: str) -> int:
        return self.word_index.get(word, UNK)

    @property
    def unigram_weights(self) -> np.ndarray:
        return self.word_counts.astype(np.float64) ** SMOOTHING_POWER

    def relation_row(self, label: str, up: bool) -> int:
        """Row of a directed relation in the relation matrix: 2*id for toward-head, 2*id+1 otherwise."""
        try:
            rid = self.relation_index[label]
        except KeyError:
            raise KeyError(f"unknown relation label {label!r}") from None
        return 2 * rid + (0 if up else 1)

    def relation_token(self, row: int) -> str:
        return f"{self.relations[row // 2]}:{'u' if row % 2 == 0 else 'd'}"

    def count_path(self, path, n: int = 1) -> None:
        self.path_counts.setdefault(path.hops, Counter())[path] += n
        self._path_tables.pop(path.hops, None)

    def path_table(self, hop: int) -> tuple[list, np.ndarray]:
        """Paths of ``hop`` hops seen at least ``min_count`` times, with their smoothed cdf.

        Ordered by count (descending) then path string, so table positions are
        reproducible.
        """
        if hop not in self._path_tables:
            counts = self.path_counts.get(hop, Counter())
            kept = sorted(((p, c) for p, c in counts.items() if c >= self.min_count),
                          key=lambda pc: (-pc[1], str(pc[0])))
            self._path_tables[hop] = ([p for p, _ in kept], smoothed_cdf([c for _, c in kept]))
        return self._path_tables[hop]

    def save(self, stream: IO[str]) -> None:
        stream.write(f"{len(self.words)} {len(self.relations)} {self.min_count}\n")
        for w, c in zip(self.words, self.word_counts):
            stream.write(f"{w}\t{c}\n")
        stream.write("#RELATIONS\n")
        for r, c in zip(self.relations, self.relation_counts):
            stream.write(f"{r}\t{c}\n")

    @classmethod
    def load(cls, stream: IO[str] | Iterable[str]) -> "Vocabulary":
        lines = (ln.rstrip("\r\n") for ln in stream)
        header = next(lines)
        while header.startswith("#"):
            header = next(lines)
        n_words, n_rels, min_count = (int(x) for x in header.split())
        words, wcounts = [], []
        for _ in range(n_words):
            w, c = next(lines).rsplit("\t", 1)
            words.append(w)
            wcounts.append(int(c))
        if next(lines) != "#RELATIONS":
            raise VocabError("missing #RELATIONS sentinel")
        rels, rcounts = [], []
        for _ in range(n_rels):
            r, c = next(lines).rsplit("\t", 1)
            rels.append(r)
            rcounts.append(int(c))
        return cls(words, wcounts, rels, rcounts, min_count)


def build_vocab(sentences: Iterable[ParsedSentence], min_count: int = 10) -> Vocabulary:
    if min_count < 1:
        raise VocabError("min_count must be >= 1")
    words: Counter = Counter()
    rels: Counter = Counter()
    n = 0
    for sent in sentences:
        n += 1
        for tok in sent.tokens:
            words[tok.form] += 1
            rels[tok.rel] += 1
    if n == 0:
        raise VocabError("no sentences")
    kept = sorted(((w, c) for w, c in words.items() if c >= min_count), key=lambda wc: (-wc[1], wc[0]))
    rel_items = sorted(rels.items(), key=lambda rc: (-rc[1], rc[0]))
    return Vocabulary(
        [w for w, _ in kept], [c for _, c in kept],
        [r for r, _ in rel_items], [c for _, c in rel_items],
        min_count,
    )
