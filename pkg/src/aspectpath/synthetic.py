"""Synthetic parsed corpora with known structure, for end-to-end checks.

``planted_corpus`` builds sentences in which every ``amod`` arc attaches a
modifier word (class A) to a head noun (class B) and no other arc joins the two
classes.  ``aspect_corpus`` builds review-like sentences whose aspect terms
can only be told apart by who governs them in the tree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import ParsedSentence, Token


def _sentence(words: list[tuple[str, str, int, str]], sid: str) -> ParsedSentence:
    return ParsedSentence(tuple(Token(form=w.lower(), pos=pos, head=h, rel=rel, raw=w)
                                for w, pos, h, rel in words), sid)


@dataclass
class PlantedCorpus:
    sentences: list[ParsedSentence]
    class_a: list[str]
    class_b: list[str]
    relation: str = "amod"


def planted_corpus(n_sentences: int = 5000, seed: int = 0) -> PlantedCorpus:
    """Sentences over ~200 word types with a planted A --amod--> B relation.

    Every word class has a single syntactic role (B subjects, C objects,
    E obliques, adverbs only modify adjectives), so between two content
    classes there is one path.
    """
    rng = np.random.default_rng(seed)
    A = [f"adj{i}" for i in range(40)]
    B = [f"noun{i}" for i in range(40)]
    C = [f"thing{i}" for i in range(40)]
    E = [f"place{i}" for i in range(30)]
    V = [f"verb{i}" for i in range(30)]
    R = [f"adv{i}" for i in range(15)]
    D = ["the", "a", "this", "that", "every"]
    P = ["in", "on", "with", "near", "for", "from", "at", "by"]

    def pick(xs):
        return xs[rng.integers(len(xs))]

    sents = []
    for s in range(n_sentences):
        t = rng.integers(5)
        if t == 0:    # det A B verb det C
            w = [(pick(D), "DET", 3, "det"), (pick(A), "ADJ", 3, "amod"), (pick(B), "NOUN", 4, "nsubj"),
                 (pick(V), "VERB", 0, "root"), (pick(D), "DET", 6, "det"), (pick(C), "NOUN", 4, "obj")]
        elif t == 1:  # det adv A B verb det C
            w = [(pick(D), "DET", 4, "det"), (pick(R), "ADV", 3, "advmod"), (pick(A), "ADJ", 4, "amod"),
                 (pick(B), "NOUN", 5, "nsubj"), (pick(V), "VERB", 0, "root"), (pick(D), "DET", 7, "det"),
                 (pick(C), "NOUN", 5, "obj")]
        elif t == 2:  # A B verb prep det E
            w = [(pick(A), "ADJ", 2, "amod"), (pick(B), "NOUN", 3, "nsubj"), (pick(V), "VERB", 0, "root"),
                 (pick(P), "ADP", 6, "case"), (pick(D), "DET", 6, "det"), (pick(E), "NOUN", 3, "obl")]
        elif t == 3:  # det A B verb det C prep det E
            w = [(pick(D), "DET", 3, "det"), (pick(A), "ADJ", 3, "amod"), (pick(B), "NOUN", 4, "nsubj"),
                 (pick(V), "VERB", 0, "root"), (pick(D), "DET", 6, "det"), (pick(C), "NOUN", 4, "obj"),
                 (pick(P), "ADP", 9, "case"), (pick(D), "DET", 9, "det"), (pick(E), "NOUN", 4, "obl")]
        else:         # det B verb det C
            w = [(pick(D), "DET", 2, "det"), (pick(B), "NOUN", 3, "nsubj"), (pick(V), "VERB", 0, "root"),
                 (pick(D), "DET", 5, "det"), (pick(C), "NOUN", 3, "obj")]
        sents.append(_sentence(w, f"p{s}"))
    return PlantedCorpus(sents, A, B)


@dataclass
class AspectCorpus:
    sentences: list[ParsedSentence]
    labels: list[list[str]]


def aspect_corpus(n_sentences: int = 1500, seed: int = 0) -> AspectCorpus:
    """Review-like sentences with BIO aspect labels.

    The same nouns occur as aspects and as plain mentions; what decides is
    whether an opinion word governs (or modifies) them.  In some templates the
    opinion word sits inside the noun's linear window, in others it is only
    reachable through the tree.
    """
    rng = np.random.default_rng(seed)
    nouns = [f"dish{i}" for i in range(30)]
    heads = [f"part{i}" for i in range(10)]       # second element of two-word aspects
    opinions = [f"good{i}" for i in range(8)]
    neutral = [f"late{i}" for i in range(8)]
    places = [f"town{i}" for i in range(10)]
    verbs = [f"saw{i}" for i in range(8)]
    people = ["we", "they", "i", "he", "she"]
    # degree adverbs differ by class, which is what separates the two
    # adjective classes distributionally
    boosters = ["so", "really", "very"]
    hedges = ["still", "already", "now"]
    dets = ["the", "a", "this", "that"]

    def pick(xs):
        return xs[rng.integers(len(xs))]

    sents, labels = [], []
    for s in range(n_sentences):
        aspect = rng.random() < 0.5
        adj = pick(opinions) if aspect else pick(neutral)
        adv = pick(boosters) if aspect else pick(hedges)
        t = rng.integers(4)
        if t == 0:   # det N of det PLACE was ADV ADJ   (opinion only via the tree)
            w = [(pick(dets), "DET", 2, "det"), (pick(nouns), "NOUN", 8, "nsubj"),
                 ("of", "ADP", 5, "case"), (pick(dets), "DET", 5, "det"),
                 (pick(places), "NOUN", 2, "nmod"), ("was", "AUX", 8, "cop"), (adv, "ADV", 8, "advmod"),
                 (adj, "ADJ", 0, "root")]
            y = ["O", "B", "O", "O", "O", "O", "O", "O"]
        elif t == 1:  # PRON VERB det ADJ N            (opinion adjacent)
            w = [(pick(people), "PRON", 2, "nsubj"), (pick(verbs), "VERB", 0, "root"),
                 (pick(dets), "DET", 5, "det"), (adj, "ADJ", 5, "amod"), (pick(nouns), "NOUN", 2, "obj")]
            y = ["O", "O", "O", "O", "B"]
        elif t == 2:  # det N1 N2 was ADV ADJ           (two-word aspect)
            w = [(pick(dets), "DET", 3, "det"), (pick(nouns), "NOUN", 3, "compound"),
                 (pick(heads), "NOUN", 6, "nsubj"), ("was", "AUX", 6, "cop"), (adv, "ADV", 6, "advmod"),
                 (adj, "ADJ", 0, "root")]
            y = ["O", "B", "I", "O", "O", "O"]
        else:        # det N in det PLACE seemed ADV ADJ  (opinion only via the tree)
            w = [(pick(dets), "DET", 2, "det"), (pick(nouns), "NOUN", 8, "nsubj"),
                 ("in", "ADP", 5, "case"), (pick(dets), "DET", 5, "det"),
                 (pick(places), "NOUN", 2, "nmod"), ("seemed", "VERB", 8, "cop"),
                 (adv, "ADV", 8, "advmod"), (adj, "ADJ", 0, "root")]
            y = ["O", "B", "O", "O", "O", "O", "O", "O"]
        if not aspect:
            y = ["O"] * len(y)
        if rng.random() < 0.5:
            w = [(x[0].capitalize(), *x[1:]) if i == 0 else x for i, x in enumerate(w)]
        sents.append(_sentence(w, f"s{s}"))
        labels.append(y)
    return AspectCorpus(sents, labels)
