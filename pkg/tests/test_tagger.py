import io
import itertools
import time

import numpy as np
import pytest

from aspectpath.corpus import ParsedSentence, Token
from aspectpath.features import FeatureRow
from aspectpath.tagger import (LABELS, CRFError, CRFModel, baseline_templates, forward_backward, load_model,
                               save_model, stem, train_crf, viterbi_decode)
from aspectpath.tagger.crf import log_likelihood, loglik_gradient, sequence_score


def sentence(*raw):
    return ParsedSentence(tuple(Token(w.lower(), "NOUN", 0 if i == 0 else 1, "root" if i == 0 else "dep", w)
                                for i, w in enumerate(raw)))


# -- templates -----------------------------------------------------------------

def test_capital_tag_and_lowercase_word():
    feats = baseline_templates(sentence("Delicious", "food"))[0]
    assert "cap[0]=true" in feats and "w[0]=delicious" in feats
    assert "cap[1]=false" in feats and "t[0]=NOUN" in feats


def test_affixes_are_capped_at_word_length():
    feats = baseline_templates(sentence("cat"))[0]
    assert [f for f in feats if f.startswith("suf") and "[0]" in f] == \
        ["suf1[0]=t", "suf2[0]=at", "suf3[0]=cat", "suf4[0]=cat"]
    assert "pre1[0]=c" in feats and "pre4[0]=cat" in feats


def test_boundary_symbols():
    feats = baseline_templates(sentence("a", "b"))
    assert "w[-2]=__BOS__" in feats[0] and "t[-1]=__BOS__" in feats[0]
    assert "w[2]=__EOS__" in feats[0] and "w[1]=b" in feats[0]
    assert "cap[1]=__EOS__" in feats[1]
    assert len(set(len(f) for f in feats)) == 1


def test_stem():
    assert [stem(w) for w in ["dishes", "served", "waiting", "pizzas", "glass", "is", "bed", "parties"]] == \
        ["dish", "serv", "wait", "pizza", "glass", "is", "bed", "party"]


# -- inference oracles -----------------------------------------------------------

N_FEATS = 5


def random_model(rng, integer: bool) -> CRFModel:
    names = [f"f{k}" for k in range(N_FEATS)]
    if integer:
        E, T = rng.integers(-1, 2, (N_FEATS, 3)).astype(float), rng.integers(-1, 2, (3, 3)).astype(float)
    else:
        E, T = rng.normal(size=(N_FEATS, 3)), rng.normal(size=(3, 3))
    return CRFModel({n: k for k, n in enumerate(names)}, E, T)


def random_rows(rng, n):
    return [[f"f{k}" for k in range(N_FEATS) if rng.random() < 0.4] for _ in range(n)]


def oracle_score(model, rows, y):
    s = sum(model.emission[model.feature_index[f], y[i]] for i, feats in enumerate(rows) for f in feats)
    return s + sum(model.transition[a, b] for a, b in zip(y, y[1:]))


def enumerate_all(model, rows):
    seqs = list(itertools.product(range(3), repeat=len(rows)))      # lexicographic, B < I < O
    scores = np.array([oracle_score(model, rows, y) for y in seqs])
    return seqs, scores


def test_viterbi_and_marginals_match_enumeration():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    for trial in range(100):
        model = random_model(rng, integer=trial % 2 == 0)
        rows = random_rows(rng, int(rng.integers(1, 7)))
        seqs, scores = enumerate_all(model, rows)
        best = seqs[int(np.argmax(scores))]                          # first maximum = smallest sequence
        assert viterbi_decode(model, rows) == [LABELS[k] for k in best]
        logz, marg = forward_backward(model, rows)
        m = scores.max()
        want_logz = m + np.log(np.exp(scores - m).sum())
        assert logz == pytest.approx(want_logz, abs=1e-9)
        probs = np.exp(scores - want_logz)
        want = np.zeros((len(rows), 3))
        for y, pr in zip(seqs, probs):
            want[np.arange(len(rows)), y] += pr
        assert np.abs(marg - want).max() < 1e-9
        assert np.all(marg >= 0) and np.allclose(marg.sum(axis=1), 1.0, atol=1e-9)
    assert time.perf_counter() - start < 5.0


def test_zero_model():
    m = CRFModel.zeros(["a"])
    rows = [["a"], [], ["a"], []]
    assert viterbi_decode(m, rows) == ["B"] * 4
    logz, marg = forward_backward(m, rows)
    assert logz == pytest.approx(4 * np.log(3))
    assert np.allclose(marg, 1 / 3)


def test_single_token_and_empty():
    m = CRFModel({"a": 0}, np.array([[0.1, 0.7, 0.2]]), np.full((3, 3), 5.0))
    assert viterbi_decode(m, [["a"]]) == ["I"]
    assert viterbi_decode(m, []) == []
    assert forward_backward(m, [])[0] == 0.0


def test_loglik_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    eps = 1e-5
    for _ in range(20):
        model = random_model(rng, integer=False)
        rows = random_rows(rng, int(rng.integers(1, 6)))
        labels = [LABELS[k] for k in rng.integers(0, 3, len(rows))]
        _, gE, gT = loglik_gradient(model, rows, labels)
        num_E, num_T = np.zeros_like(gE), np.zeros_like(gT)
        for mat, out in ((model.emission, num_E), (model.transition, num_T)):
            for idx in np.ndindex(mat.shape):
                old = mat[idx]
                mat[idx] = old + eps
                up = log_likelihood(model, rows, labels)
                mat[idx] = old - eps
                down = log_likelihood(model, rows, labels)
                mat[idx] = old
                out[idx] = (up - down) / (2 * eps)
        a, n = np.concatenate([gE.ravel(), gT.ravel()]), np.concatenate([num_E.ravel(), num_T.ravel()])
        assert np.linalg.norm(a - n) / max(np.linalg.norm(a), 1e-12) < 1e-5


def test_sequence_score_uses_transitions():
    m = CRFModel({"a": 0}, np.array([[1.0, 0, 0]]), np.eye(3))
    assert sequence_score(m, [["a"], ["a"]], ["B", "B"]) == 3.0


# -- training --------------------------------------------------------------------

def separable(n=60, seed=0):
    rng = np.random.default_rng(seed)
    data = []
    for _ in range(n):
        k = int(rng.integers(2, 7))
        labels = ["B" if rng.random() < 0.3 else "O" for _ in range(k)]
        data.append([FeatureRow(i + 1, (["W0=1"] if y == "B" else ["W0=0"]) + ["bias"], y)
                     for i, y in enumerate(labels)])
    return data


def test_separable_data_is_learned():
    data = separable()
    m = train_crf(data, l1_lambda=0.1, epochs=10)
    for rows in data:
        assert viterbi_decode(m, rows) == [r.label for r in rows]
    assert m.objective == m.history[-1]


def test_objective_trends_upward():
    m = train_crf(separable(80, 1), l1_lambda=1.0, epochs=12, lr=0.05)
    h = m.history
    assert h[-1] > h[0]
    assert np.mean(h[-3:]) >= np.mean(h[:3])


def test_huge_penalty_zeroes_weights():
    m = train_crf(separable(), l1_lambda=1e6, epochs=3)
    assert not m.emission.any() and not m.transition.any()
    assert viterbi_decode(m, [["W0=1"], ["W0=0"]]) == ["B", "B"]


def test_unseen_feature_does_not_change_decoding():
    data = separable()
    m = train_crf(data, epochs=5)
    for rows in data[:10]:
        plain = [r.features for r in rows]
        noisy = [f + ["never_seen=1"] for f in plain]
        assert viterbi_decode(m, plain) == viterbi_decode(m, noisy)


def test_training_errors():
    with pytest.raises(CRFError, match="empty"):
        train_crf([])
    bad = [[FeatureRow(1, ["a"], "O"), FeatureRow(2, ["b"], "X")]]
    with pytest.raises(CRFError, match="row 2"):
        train_crf(bad)
    with pytest.raises(CRFError):
        train_crf([[FeatureRow(1, ["a"], None)]])


def test_training_is_deterministic():
    a = train_crf(separable(), epochs=4, seed=5)
    b = train_crf(separable(), epochs=4, seed=5)
    assert np.array_equal(a.emission, b.emission) and np.array_equal(a.transition, b.transition)


def test_model_file_roundtrip():
    m = train_crf(separable(), l1_lambda=0.5, epochs=4)
    buf = io.StringIO()
    save_model(m, buf)
    text = buf.getvalue()
    assert "#TRANSITIONS" in text and "W0=1\tB\t" in text
    back = load_model(io.StringIO("# header\n" + text))
    assert back.l1_lambda == 0.5 and np.array_equal(back.transition, m.transition)
    rows = [["W0=1", "bias"], ["W0=0", "bias"], ["W0=1"]]
    assert viterbi_decode(back, rows) == viterbi_decode(m, rows)
    assert forward_backward(back, rows)[0] == forward_backward(m, rows)[0]


def test_model_invariants():
    with pytest.raises(CRFError):
        CRFModel({}, np.zeros((0, 3)), np.zeros((2, 2)))
    with pytest.raises(CRFError):
        CRFModel({"a": 0}, np.array([[np.inf, 0, 0]]), np.zeros((3, 3)))
