"""Closed-form and exhaustively enumerated reference values.

Everything here is deterministic.  Where a quantity is rational the ``*_exact``
variant returns a :class:`fractions.Fraction`; the plain variant rounds it to
float once at the end.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, factorial

from .params import ParameterError, check_L


def _check_int(name: str, value, minimum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Marginal and Gaussian moments


def abs_uniform_moment(m: int) -> float:
    """E|R|^m for R uniform on [-sqrt(3), sqrt(3)]."""
    _check_int("m", m, 0)
    return 3.0 ** (m / 2) / (m + 1)


def gaussian_even_moment(L: int) -> int:
    """E Z^L = (L-1)!! for standard normal Z and even L."""
    _check_int("L", L, 2)
    if L % 2:
        raise ParameterError(f"only even Gaussian moments are supported, got L={L}")
    return math.prod(range(L - 1, 0, -2))


# ---------------------------------------------------------------------------
# Level-1 parity algebra


@dataclass(frozen=True)
class MomentQuery:
    """A monomial prod_k Y_{index_k}^{exponent_k} inside the level-0/1 process."""

    coordinates: tuple[tuple[int, int], ...]
    level: int = 1
    shifted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple((int(i), int(e)) for i, e in self.coordinates))
        idx = [i for i, _ in self.coordinates]
        if len(set(idx)) != len(idx):
            raise ParameterError("coordinate indices must be distinct")
        if any(e < 1 for _, e in self.coordinates):
            raise ParameterError("exponents must be >= 1")
        if any(i < 0 for i in idx):
            raise ParameterError("indices must be non-negative")
        if self.level not in (0, 1):
            raise ParameterError(f"level must be 0 or 1, got {self.level}")


def _block_moment(exponents: list[int], L: int) -> Fraction:
    """E prod Y_k^{a_k} over distinct coordinates of one aligned level-1 block.

    Zero unless the odd exponents are either absent or cover the whole block;
    the covering case picks up the block's forced sign product -1.  The
    magnitude product 3^(sum/2) / prod(a+1) is rational in both surviving cases.
    """
    odd = sum(a % 2 for a in exponents)
    if odd not in (0, L):
        return Fraction(0)
    total = sum(exponents)
    value = Fraction(3 ** (total // 2), math.prod(a + 1 for a in exponents))
    return -value if odd == L else value


def _monomial_exact(counts: dict[int, int], L: int, shift: int) -> Fraction:
    blocks: dict[int, list[int]] = {}
    for idx, exp in counts.items():
        blocks.setdefault((idx + shift) // L, []).append(exp)
    out = Fraction(1)
    for exps in blocks.values():
        out *= _block_moment(exps, L)
        if not out:
            break
    return out


def parity_moment_level1_exact(query: MomentQuery, L: int = 6) -> Fraction:
    check_L(L)
    if query.level != 1:
        raise ParameterError("parity_moment_level1 needs a level-1 query")
    if query.shifted:
        raise ParameterError("parity_moment_level1 is defined on one aligned block")
    if any(i >= L for i, _ in query.coordinates):
        raise ParameterError(
            f"indices must lie in one aligned block [0, {L - 1}]; "
            "use exact_partial_sum_moment_level1 for windows spanning blocks"
        )
    return _block_moment([e for _, e in query.coordinates], L)


def parity_moment_level1(query: MomentQuery, L: int = 6) -> float:
    return float(parity_moment_level1_exact(query, L))


def exact_partial_sum_moment_level1_exact(h: int, power: int, shifted: bool, L: int = 6) -> Fraction:
    """E[Y_0 + ... + Y_{h-1}]^power at level 1, by multinomial enumeration.

    With ``shifted`` the window is averaged over the L offsets of the random
    shift, which gives the stationarized process's moment.
    """
    check_L(L)
    _check_int("h", h, 2)
    _check_int("power", power, 2)
    if h > 3 * L:
        raise ParameterError(f"h must be <= 3L = {3 * L}, got {h}")
    if power % 2 or power > L:
        raise ParameterError(f"power must be even and <= L = {L}, got {power}")
    shifts = range(L) if shifted else range(1)
    total = Fraction(0)
    fact = factorial(power)
    for multiset in combinations_with_replacement(range(h), power):
        counts = Counter(multiset)
        coef = fact // math.prod(factorial(a) for a in counts.values())
        term = sum((_monomial_exact(counts, L, s) for s in shifts), Fraction(0))
        total += coef * term
    return total / len(shifts)


def exact_partial_sum_moment_level1(h: int, power: int, shifted: bool, L: int = 6) -> float:
    return float(exact_partial_sum_moment_level1_exact(h, power, shifted, L))


# ---------------------------------------------------------------------------
# Deficit and gap constants


def deficit_bound(L: int, n: int) -> float:
    """L! 2^-L (L^n)^(L/2): the L-th moment shortfall below the Gaussian value."""
    return float(deficit_bound_exact(L, n))


def deficit_bound_exact(L: int, n: int) -> Fraction:
    check_L(L)
    _check_int("n", n, 0)
    return Fraction(factorial(L) * L ** (n * L // 2), 2**L)


def clt_gap_constant(L: int) -> float:
    """2^(-(5L+4)/2) L! L^-L, the normalized L-th moment gap in the limit."""
    return float(clt_gap_constant_exact(L))


def clt_gap_constant_exact(L: int) -> Fraction:
    check_L(L)
    # (5L+4)/2 is an integer for even L
    return Fraction(factorial(L), 2 ** ((5 * L + 4) // 2) * L**L)


def mixture_gap_constant(L: int) -> float:
    """2^(-(5L+2)/2) L! L^-L, the gap below the Gaussian-mixture moment for h >= 4L."""
    return float(2 * clt_gap_constant_exact(L))


# ---------------------------------------------------------------------------
# Binomial quantities


def _p_fraction(p) -> Fraction:
    fp = Fraction(p)
    if not 0 < fp < 1:
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")
    return fp


def _stirling2(k: int, r: int) -> int:
    return sum((-1) ** (r - i) * comb(r, i) * i**k for i in range(r + 1)) // factorial(r)


def gaussian_mixture_moment_exact(h: int, L: int, p=Fraction(1, 2)) -> Fraction:
    """h^(-L/2) sum_j C(h,j) p^j (1-p)^(h-j) j^(L/2) (L-1)!!.

    This is the normalized L-th moment of a thinned i.i.d. N(0,1) sequence.
    The binomial power moment is expanded in falling factorials,
    E j^k = sum_r S(k, r) h(h-1)...(h-r+1) p^r, so the cost does not grow with h.
    """
    _check_int("h", h, 1)
    ez = gaussian_even_moment(L)
    fp = _p_fraction(p)
    half = L // 2
    power_moment = sum(
        _stirling2(half, r) * math.perm(h, r) * fp**r for r in range(1, half + 1)
    )
    return power_moment * ez / Fraction(h) ** half


def gaussian_mixture_moment(h: int, L: int, p: float = 0.5) -> float:
    return float(gaussian_mixture_moment_exact(h, L, p))


def binomial_mod_distribution_exact(m: int, d: int) -> list[Fraction]:
    """Law of (Binomial(m, 1/2) mod d), by a residue-class recursion on integers."""
    _check_int("trials", m, 0)
    _check_int("modulus", d, 1)
    counts = [0] * d
    counts[0] = 1
    for _ in range(m):
        counts = [counts[r] + counts[r - 1] for r in range(d)] if d > 1 else [counts[0] * 2]
    den = 2**m
    return [Fraction(c, den) for c in counts]


def binomial_mod_distribution(m: int, d: int) -> list[float]:
    return [float(x) for x in binomial_mod_distribution_exact(m, d)]


def least_equidistributed_trials(d: int, tol: Fraction | float = Fraction(1, 10**6), limit: int = 10**4) -> int:
    """Smallest m with max_k |P(Binomial(m,1/2) = k mod d) - 1/d| <= tol."""
    _check_int("modulus", d, 1)
    tol = Fraction(tol)
    counts = [0] * d
    counts[0] = 1
    den = 1
    for m in range(limit + 1):
        if m:
            counts = [counts[r] + counts[r - 1] for r in range(d)] if d > 1 else [counts[0] * 2]
            den *= 2
        # |c/den - 1/d| <= tol  <=>  |d*c - den| <= tol*d*den
        bound = tol * d * den
        if all(abs(d * c - den) <= bound for c in counts):
            return m
    raise ParameterError(f"no m <= {limit} reaches tolerance {tol}")


def binomial_tail_half_exact(h: int) -> Fraction:
    """P(Binomial(h, 1/2) >= floor(h/2))."""
    _check_int("h", h, 1)
    return Fraction(sum(comb(h, k) for k in range(h // 2, h + 1)), 2**h)


def binomial_tail_half(h: int) -> float:
    return float(binomial_tail_half_exact(h))


def normalized_fourth_moment_exact(n: int) -> Fraction:
    """E(S_n / sqrt(n))^4 = (n * 9/10 + (3n^2 - 3n) / 4) / n^2 = 3/4 + 3/(20n)."""
    _check_int("n", n, 1)
    return Fraction(3, 4) + Fraction(3, 20 * n)


def normalized_fourth_moment(n: int) -> float:
    return float(normalized_fourth_moment_exact(n))
