from __future__ import annotations

import itertools
import math
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tuplewise_clt import oracle
from tuplewise_clt.params import ParameterError


# ---------------------------------------------------------------------------
# brute-force reference: enumerate the block sign vectors and convolve moments
#
# Inside one aligned level-1 block the coordinates are sigma_k * m_k with
# magnitudes m_k i.i.d. uniform on [0, sqrt(3)] and a sign vector uniform over
# the 2^(L-1) vectors whose product is -1, independent of the magnitudes.
# Distinct blocks are independent.  This is a different algorithm from the
# parity rule used by the package, so agreement is a real cross-check.


def _abs_moment(a: int) -> Fraction:
    # E m^a = 3^(a/2) / (a+1); the 3^(a/2) factor is pulled out and restored
    # once per window, where the total power is even
    return Fraction(1, a + 1)


def _sum_moments(signs: tuple[int, ...], power: int) -> list[Fraction]:
    """E(sum_k sigma_k m_k)^r / 3^(r/2) for r = 0..power, signs fixed."""
    out = [Fraction(1)] + [Fraction(0)] * power
    for s in signs:
        term = [Fraction(s**a) * _abs_moment(a) for a in range(power + 1)]
        out = [sum(comb(r, a) * term[a] * out[r - a] for a in range(r + 1)) for r in range(power + 1)]
    return out


def _block_moments(width: int, L: int, power: int) -> list[Fraction]:
    """Moments of the sum of ``width`` coordinates of one block, averaged over signs."""
    vectors = [v for v in itertools.product((1, -1), repeat=L) if math.prod(v) == -1]
    acc = [Fraction(0)] * (power + 1)
    for v in vectors:
        for r, m in enumerate(_sum_moments(v[:width], power)):
            acc[r] += m
    return [a / len(vectors) for a in acc]


def _window_moment(h: int, power: int, offset: int, L: int) -> Fraction:
    # split the window [offset, offset+h) into its block pieces
    widths = []
    pos = offset
    while pos < offset + h:
        end = min((pos // L + 1) * L, offset + h)
        widths.append((pos % L, end - pos))
        pos = end
    total = [Fraction(1)] + [Fraction(0)] * power
    for start, width in widths:
        # by exchangeability inside a block only the width matters
        piece = _block_moments(width, L, power)
        total = [sum(comb(r, a) * piece[a] * total[r - a] for a in range(r + 1)) for r in range(power + 1)]
    # restore the 3^(power/2) factor; power is even so this stays rational
    return total[power] * 3 ** (power // 2)


def brute_partial_sum_moment(h: int, power: int, shifted: bool, L: int = 6) -> Fraction:
    offsets = range(L) if shifted else range(1)
    return sum((_window_moment(h, power, s, L) for s in offsets), Fraction(0)) / len(offsets)


@pytest.mark.parametrize("h", [2, 3, 5, 6, 7, 11, 12, 13, 18])
@pytest.mark.parametrize("power", [2, 4, 6])
@pytest.mark.parametrize("shifted", [False, True])
def test_partial_sum_moment_matches_sign_enumeration(h, power, shifted):
    assert oracle.exact_partial_sum_moment_level1_exact(h, power, shifted) == brute_partial_sum_moment(
        h, power, shifted
    )


def test_partial_sum_moment_L8_matches_sign_enumeration():
    for h, power in [(4, 8), (9, 6), (10, 8)]:
        assert oracle.exact_partial_sum_moment_level1_exact(h, power, True, 8) == brute_partial_sum_moment(
            h, power, True, 8
        )


def test_partial_sum_moment_regression_values():
    assert oracle.exact_partial_sum_moment_level1_exact(6, 6, False) == Fraction(65223, 28)
    assert oracle.exact_partial_sum_moment_level1(6, 6, False) == pytest.approx(2329.392857, abs=1e-6)
    assert oracle.exact_partial_sum_moment_level1_exact(12, 2, True) == 12
    assert oracle.exact_partial_sum_moment_level1_exact(12, 6, True) == Fraction(1291131, 56)


def test_deficit_at_level_zero_window_twelve():
    value = oracle.exact_partial_sum_moment_level1_exact(12, 6, True)
    assert value <= 15 * 12**3 - Fraction(45, 4)
    assert float(15 * 12**3 - Fraction(45, 4)) == 25908.75


def test_second_moment_is_window_length():
    # pairwise independence and unit variance
    for h in range(2, 19):
        assert oracle.exact_partial_sum_moment_level1_exact(h, 2, False) == h


def test_partial_sum_moment_rejects_out_of_range():
    with pytest.raises(ParameterError):
        oracle.exact_partial_sum_moment_level1(19, 2, False)
    with pytest.raises(ParameterError):
        oracle.exact_partial_sum_moment_level1(6, 3, False)
    with pytest.raises(ParameterError):
        oracle.exact_partial_sum_moment_level1(6, 8, False)
    with pytest.raises(ParameterError):
        oracle.exact_partial_sum_moment_level1(1, 2, False)
    with pytest.raises(ParameterError):
        oracle.exact_partial_sum_moment_level1(6, 2, False, L=5)


# ---------------------------------------------------------------------------
# parity rule on single monomials


@given(st.lists(st.integers(1, 5), min_size=1, max_size=6))
def test_parity_moment_matches_sign_average(exponents):
    L = 6
    query = oracle.MomentQuery(tuple(enumerate(exponents)))
    vectors = [v for v in itertools.product((1, -1), repeat=L) if math.prod(v) == -1]
    sign_avg = Fraction(sum(math.prod(v[i] ** a for i, a in enumerate(exponents)) for v in vectors), len(vectors))
    magnitude = math.prod(Fraction(1, a + 1) for a in exponents)
    total = sum(exponents)
    if sign_avg == 0:
        assert oracle.parity_moment_level1_exact(query) == 0
    else:
        # a non-zero sign average forces every exponent even or all L odd; total is even then
        assert total % 2 == 0
        assert oracle.parity_moment_level1_exact(query) == sign_avg * magnitude * 3 ** (total // 2)


def test_parity_full_odd_block_is_negative():
    query = oracle.MomentQuery(tuple((i, 1) for i in range(6)))
    assert oracle.parity_moment_level1_exact(query) == -Fraction(27, 64)


def test_parity_five_odd_coordinates_vanish():
    query = oracle.MomentQuery(tuple((i, 1) for i in range(5)))
    assert oracle.parity_moment_level1(query) == 0.0


def test_moment_query_validation():
    with pytest.raises(ParameterError):
        oracle.MomentQuery(((0, 1), (0, 2)))
    with pytest.raises(ParameterError):
        oracle.MomentQuery(((0, 0),))
    with pytest.raises(ParameterError):
        oracle.MomentQuery(((0, 1),), level=2)
    with pytest.raises(ParameterError):
        oracle.parity_moment_level1(oracle.MomentQuery(((6, 2),)))
    with pytest.raises(ParameterError):
        oracle.parity_moment_level1(oracle.MomentQuery(((0, 2),), shifted=True))


# ---------------------------------------------------------------------------
# constants


def test_deficit_bound_values():
    assert oracle.deficit_bound(6, 0) == 11.25
    assert oracle.deficit_bound(6, 1) == 2430.0
    assert oracle.deficit_bound_exact(8, 1) == Fraction(40320 * 8**4, 256)


def test_clt_gap_constant_value():
    assert oracle.clt_gap_constant_exact(6) == Fraction(720, 2**17 * 6**6)
    assert oracle.clt_gap_constant(6) == pytest.approx(1.17738e-7, rel=1e-5)
    assert oracle.mixture_gap_constant(6) == pytest.approx(2 * oracle.clt_gap_constant(6))


def test_gaussian_and_uniform_moments():
    assert [oracle.gaussian_even_moment(L) for L in (2, 4, 6, 8)] == [1, 3, 15, 105]
    assert oracle.abs_uniform_moment(2) == pytest.approx(1.0)
    assert oracle.abs_uniform_moment(4) == pytest.approx(9 / 5)
    with pytest.raises(ParameterError):
        oracle.gaussian_even_moment(5)


# ---------------------------------------------------------------------------
# binomial quantities


def _direct_mod(m: int, d: int) -> list[Fraction]:
    return [Fraction(sum(comb(m, k) for k in range(r, m + 1, d)), 2**m) for r in range(d)]


@given(st.integers(0, 120), st.integers(1, 9))
def test_mod_distribution_matches_direct_sum(m, d):
    assert oracle.binomial_mod_distribution_exact(m, d) == _direct_mod(m, d)


def test_least_equidistributed_trials_regression():
    tol = Fraction(1, 10**6)
    m = oracle.least_equidistributed_trials(6, tol)
    assert m == 89
    assert max(abs(x - Fraction(1, 6)) for x in _direct_mod(89, 6)) <= tol
    assert max(abs(x - Fraction(1, 6)) for x in _direct_mod(88, 6)) > tol


def test_least_equidistributed_trials_limit():
    with pytest.raises(ParameterError):
        oracle.least_equidistributed_trials(6, Fraction(1, 10**30), limit=50)


def test_tail_half_at_least_half():
    for h in range(1, 65):
        direct = Fraction(sum(comb(h, k) for k in range(h // 2, h + 1)), 2**h)
        assert oracle.binomial_tail_half_exact(h) == direct >= Fraction(1, 2)


@given(st.integers(1, 400))
def test_gaussian_mixture_closed_form(h):
    assert oracle.gaussian_mixture_moment_exact(h, 6, Fraction(1, 2)) == Fraction(15, 8) + Fraction(45, 8 * h)


@given(st.integers(1, 40), st.sampled_from([2, 4, 6, 8]), st.sampled_from([Fraction(1, 2), Fraction(3, 10)]))
def test_gaussian_mixture_matches_binomial_sum(h, L, p):
    ez = math.prod(range(L - 1, 0, -2))
    direct = sum(comb(h, j) * p**j * (1 - p) ** (h - j) * j ** (L // 2) for j in range(h + 1))
    assert oracle.gaussian_mixture_moment_exact(h, L, p) == direct * ez / Fraction(h) ** (L // 2)


def test_gaussian_mixture_convergence_threshold():
    target = Fraction(15, 8)
    assert oracle.gaussian_mixture_moment_exact(5625, 6) - target == Fraction(1, 1000)
    assert oracle.gaussian_mixture_moment_exact(5624, 6) - target > Fraction(1, 1000)


def test_normalized_fourth_moment():
    assert oracle.normalized_fourth_moment_exact(1) == Fraction(9, 10)
    assert oracle.normalized_fourth_moment(16) == pytest.approx(0.75 + 3 / 320)
    with pytest.raises(ParameterError):
        oracle.normalized_fourth_moment(0)
