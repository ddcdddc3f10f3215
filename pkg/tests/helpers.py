"""Shared builders for the test suite."""
from __future__ import annotations

import io

import numpy as np

from aspectpath.corpus import ParsedSentence, Token, Vocabulary, parse_conllu
from aspectpath.embed.params import ModelParams

# Running example "staff and service waiter very professional":
# service is conj of staff, waiter is dep of staff, very and professional hang off waiter.
STAFF_CONLLU = """\
# sent_id = staff1
1	staff	staff	NOUN	NN	_	0	root	_	_
2	and	and	CCONJ	CC	_	1	cc	_	_
3	service	service	NOUN	NN	_	1	conj	_	_
4	waiter	waiter	NOUN	NN	_	1	dep	_	_
5	very	very	ADV	RB	_	4	advmod	_	_
6	professional	professional	ADJ	JJ	_	4	amod	_	_

"""

LABELS = ["nsubj", "obj", "amod", "det", "case", "conj"]


def staff_sentence() -> ParsedSentence:
    return parse_conllu(io.StringIO(STAFF_CONLLU))[0]


def random_tree(rng: np.random.Generator, n: int, labels=LABELS, words=None) -> ParsedSentence:
    """Uniformly shuffled random recursive tree over ``n`` tokens."""
    order = rng.permutation(n) + 1          # order[k] = position of the k-th inserted node
    heads = [0] * (n + 1)
    for k in range(1, n):
        heads[order[k]] = int(order[rng.integers(k)])
    words = words or [f"w{i}" for i in range(8)]
    toks = []
    for i in range(1, n + 1):
        rel = "root" if heads[i] == 0 else labels[rng.integers(len(labels))]
        w = words[rng.integers(len(words))]
        toks.append(Token(form=w, pos="X", head=heads[i], rel=rel, raw=w))
    return ParsedSentence(tuple(toks), f"r{n}")


def toy_vocab(n_words: int = 6, labels=LABELS, min_count: int = 1) -> Vocabulary:
    words = [f"w{i}" for i in range(n_words)]
    return Vocabulary(words, np.arange(n_words, 0, -1) * 10, list(labels),
                      np.ones(len(labels), dtype=int), min_count)


def toy_params(d: int, rng: np.random.Generator, vocab: Vocabulary | None = None,
               scale: float = 0.5) -> ModelParams:
    vocab = vocab or toy_vocab()
    nw, nr = len(vocab), 2 * len(vocab.relations)
    return ModelParams(vocab, rng.uniform(-scale, scale, (nw, d)), rng.uniform(-scale, scale, (nw, d)),
                       rng.uniform(-scale, scale, (nr, d)), rng.uniform(-scale, scale, (d, 2 * d)))


# Acceptance lines collected during the run and printed in the terminal summary.
ACCEPTANCE: list[str] = []
