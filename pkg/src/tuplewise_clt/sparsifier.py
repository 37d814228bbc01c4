"""The thinning operator: interleave a source sequence into the 1-slots of a
Bernoulli mark sequence, zeros elsewhere, plus its exact mixture laws."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np
from scipy.stats import binom

from .params import ParameterError


@dataclass(frozen=True)
class ThinnedPlacement:
    kappa: tuple[int, ...]
    source_count: int

    def __post_init__(self):
        if self.source_count != len(self.kappa):
            raise ParameterError("source_count must equal len(kappa)")
        if any(a >= b for a, b in zip(self.kappa, self.kappa[1:])):
            raise ParameterError("kappa must be strictly increasing")


def _as_marks(V) -> np.ndarray:
    marks = np.asarray(V)
    if marks.ndim != 1:
        raise ParameterError("marks must be a one-dimensional 0/1 vector")
    if marks.size and not np.isin(marks, (0, 1)).all():
        raise ParameterError("marks must contain only 0 and 1")
    return marks.astype(np.int8)


def kappa_positions(V) -> ThinnedPlacement:
    """1-based positions of the 1-marks; the j-th entry is kappa_j."""
    marks = _as_marks(V)
    kappa = tuple(int(k) + 1 for k in np.flatnonzero(marks))
    return ThinnedPlacement(kappa, len(kappa))


def sparsify(W, V) -> np.ndarray:
    marks = _as_marks(V)
    source = np.asarray(W, dtype=np.float64).reshape(-1)
    if source.size != int(marks.sum()):
        raise ParameterError(
            f"source has {source.size} values but marks contain {int(marks.sum())} ones"
        )
    out = np.zeros(marks.size, dtype=np.float64)
    out[marks == 1] = source
    return out


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")


def cdf_mixture(p: float, F_W_at_x: float, x: float) -> float:
    """P(thinned_0 <= x) given the source CDF value at x."""
    _check_p(p)
    if not 0.0 <= F_W_at_x <= 1.0:
        raise ParameterError(f"CDF value must lie in [0, 1], got {F_W_at_x!r}")
    return (1.0 - p) * (1.0 if x >= 0 else 0.0) + p * F_W_at_x


EXACT_WEIGHT_LIMIT = 1000


def binomial_weights(n: int, p: float) -> np.ndarray:
    """C(n, j) p^j (1-p)^(n-j) for j = 0..n.

    Exact rational arithmetic (correctly rounded) up to ``EXACT_WEIGHT_LIMIT``
    trials; beyond that scipy's binomial pmf, which stays within about 1e-12
    relative error and never overflows.
    """
    _check_p(p)
    if n < 0:
        raise ParameterError(f"trials must be non-negative, got {n}")
    return _weights(n, float(p)).copy()


@lru_cache(maxsize=64)
def _weights(n: int, p: float) -> np.ndarray:
    if n <= EXACT_WEIGHT_LIMIT:
        # p = a / d exactly (floats are dyadic); int / int is correctly rounded
        a, d = Fraction(p).as_integer_ratio()
        b = d - a
        den = d**n
        apow = [1] * (n + 1)
        for j in range(1, n + 1):
            apow[j] = apow[j - 1] * a
        out = np.empty(n + 1)
        bpow = 1
        for j in range(n, -1, -1):
            out[j] = comb(n, j) * apow[j] * bpow / den
            bpow *= b
        return out
    return binom.pmf(np.arange(n + 1), n, p)


def moment_mixture(p: float, n: int, r: int, base_moments: Sequence[float]) -> float:
    """E[S(thinned, n)]^r from the source moments E[S(W, j)]^r, j = 1..n.

    ``base_moments[j-1]`` holds the j-th source moment.
    """
    _check_p(p)
    if n < 1 or r < 1:
        raise ParameterError(f"need n >= 1 and r >= 1, got n={n}, r={r}")
    base = np.asarray(base_moments, dtype=np.float64)
    if base.shape != (n,):
        raise ParameterError(f"expected {n} base moments, got shape {base.shape}")
    w = binomial_weights(n, p)[1:]
    return float(np.dot(w, base))
