import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from aspectpath.discretize import DEFAULT_BINS, DiscreteEmbeddingTable, apply_discretizer, fit_discretizer


def oracle_code(x, lo, hi, l):
    if hi == lo:
        return 0
    return min(l - 1, max(0, math.floor((x - lo) * l / (hi - lo))))


def test_hand_value():
    t = fit_discretizer(np.array([[-2.0, 0.0, 2.0]]), 15)
    assert t.codes.tolist() == [[0, 7, 14]]


def test_default_bins():
    assert DEFAULT_BINS == 15


def test_constant_dimension_is_zero():
    t = fit_discretizer(np.array([[3.0, 3.0, 3.0], [0.0, 1.0, 2.0]]), 4)
    assert t.codes[0].tolist() == [0, 0, 0]
    assert apply_discretizer(t, np.array([100.0, 1.0]))[0] == 0


def test_errors():
    with pytest.raises(ValueError):
        fit_discretizer(np.ones((2, 3)), 1)
    with pytest.raises(ValueError):
        fit_discretizer(np.zeros((2, 0)), 5)
    with pytest.raises(ValueError):
        fit_discretizer(np.array([[np.nan, 1.0]]), 5)
    t = fit_discretizer(np.random.default_rng(0).normal(size=(3, 10)), 5)
    with pytest.raises(ValueError):
        apply_discretizer(t, np.zeros(4))


def test_out_of_range_clamps():
    t = fit_discretizer(np.array([[0.0, 1.0]]), 10)
    assert apply_discretizer(t, np.array([-5.0]))[0] == 0
    assert apply_discretizer(t, np.array([5.0]))[0] == 9


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 30)), elements=finite),
       st.integers(2, 30))
def test_fit_matches_oracle_and_apply_is_idempotent(m, l):
    t = fit_discretizer(m, l)
    assert t.codes.min() >= 0 and t.codes.max() <= l - 1
    for i in range(m.shape[0]):
        lo, hi = m[i].min(), m[i].max()
        assert t.mins[i] <= t.maxs[i]
        for j in range(m.shape[1]):
            assert t.codes[i, j] == oracle_code(m[i, j], lo, hi, l)
        if hi > lo:
            assert t.codes[i, m[i].argmin()] == 0 and t.codes[i, m[i].argmax()] == l - 1
    for j in range(m.shape[1]):
        assert np.array_equal(apply_discretizer(t, m[:, j]), t.codes[:, j])


def test_every_code_reachable():
    l = 12
    t = fit_discretizer(np.linspace(0, 1, 1000)[None, :], l)
    assert sorted(set(t.codes[0].tolist())) == list(range(l))


def test_monotone_on_random_vectors():
    rng = np.random.default_rng(0)
    t = fit_discretizer(rng.normal(size=(8, 200)), 15)
    x = rng.normal(scale=2, size=(8, 10_000))
    y = x + rng.exponential(size=x.shape)
    cx, cy = t.encode(x), t.encode(y)
    assert np.all(cx <= cy)
    assert cx.min() >= 0 and cy.max() <= 14


def test_save_load():
    t = fit_discretizer(np.random.default_rng(1).normal(size=(4, 50)), 7)
    buf = io.StringIO()
    t.save(buf)
    assert buf.getvalue().splitlines()[0] == "4 7"
    back = DiscreteEmbeddingTable.load(io.StringIO("# prov\n" + buf.getvalue()))
    assert back.l == 7 and np.array_equal(back.mins, t.mins) and np.array_equal(back.maxs, t.maxs)
