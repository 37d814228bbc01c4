from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tuplewise_clt import ParameterError, ThinnedPlacement, cdf_mixture, kappa_positions, moment_mixture, sparsify
from tuplewise_clt.sparsifier import binomial_weights

marks_st = st.lists(st.integers(0, 1), min_size=0, max_size=40)


@given(marks_st, st.integers(0, 2**32))
def test_sparsify_places_source_in_order(marks, seed):
    source = np.random.default_rng(seed).normal(size=sum(marks))
    out = sparsify(source, marks)
    placement = kappa_positions(marks)
    assert out.shape == (len(marks),)
    assert np.array_equal(out[np.array(placement.kappa, dtype=int) - 1], source)
    assert np.all(out[np.asarray(marks, dtype=int) == 0] == 0)


def test_kappa_positions_are_one_based():
    p = kappa_positions([0, 1, 1, 0, 1])
    assert p.kappa == (2, 3, 5) and p.source_count == 3


def test_placement_validation():
    with pytest.raises(ParameterError):
        ThinnedPlacement((1, 2), 3)
    with pytest.raises(ParameterError):
        ThinnedPlacement((2, 2), 2)


def test_sparsify_validation():
    with pytest.raises(ParameterError):
        sparsify([1.0], [1, 1])
    with pytest.raises(ParameterError):
        sparsify([1.0], [2])
    with pytest.raises(ParameterError):
        sparsify([1.0], [[1]])


def test_cdf_mixture_at_zero():
    assert cdf_mixture(0.5, 0.5, 0.0) == 0.75
    assert cdf_mixture(0.5, 0.2, -1.0) == pytest.approx(0.1)
    with pytest.raises(ParameterError):
        cdf_mixture(0.0, 0.5, 0.0)
    with pytest.raises(ParameterError):
        cdf_mixture(0.5, 1.5, 0.0)


@given(st.integers(0, 60), st.sampled_from([0.5, 0.3, 0.9, 1 / 3]))
def test_weights_exact_for_small_n(n, p):
    a, d = Fraction(p).as_integer_ratio()
    want = [float(Fraction(comb(n, j) * a**j * (d - a) ** (n - j), d**n)) for j in range(n + 1)]
    assert binomial_weights(n, p).tolist() == want


@pytest.mark.parametrize("n", [1000, 1001, 5000])
@pytest.mark.parametrize("p", [0.5, 0.3])
def test_weights_have_twelve_digits(n, p):
    w = binomial_weights(n, p)
    fp = Fraction(p)
    for j in range(0, n + 1, 41):
        exact = float(Fraction(comb(n, j)) * fp**j * (1 - fp) ** (n - j))
        if exact > 1e-280:
            assert w[j] == pytest.approx(exact, rel=1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


def test_large_n_does_not_overflow():
    w = binomial_weights(10**5, 0.5)
    assert np.all(np.isfinite(w)) and w.sum() == pytest.approx(1.0, abs=1e-10)


def test_weights_are_copies():
    w = binomial_weights(5, 0.5)
    w[:] = 0
    assert binomial_weights(5, 0.5).sum() == pytest.approx(1.0)


@given(st.integers(1, 50), st.sampled_from([0.5, 0.25]))
def test_moment_mixture_of_variances(n, p):
    # second moments E S_j^2 = j mix to E S^2 = n p
    assert moment_mixture(p, n, 2, list(range(1, n + 1))) == pytest.approx(n * p)


def test_moment_mixture_validation():
    with pytest.raises(ParameterError):
        moment_mixture(0.5, 3, 2, [1.0, 2.0])
    with pytest.raises(ParameterError):
        moment_mixture(0.5, 0, 2, [])
    with pytest.raises(ParameterError):
        binomial_weights(-1, 0.5)
