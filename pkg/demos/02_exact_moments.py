"""Exact moments of window sums, and how far they sit below the Gaussian value.

Run:  python3 demos/02_exact_moments.py
"""

from __future__ import annotations

from fractions import Fraction

from tuplewise_clt import oracle

L = 6
print("E S_h^2 (aligned) for h = 2..12:",
      [int(oracle.exact_partial_sum_moment_level1_exact(h, 2, False)) for h in range(2, 13)])

# Sixth moments: a Gaussian with variance h would give 15 h^3.
for h in (6, 12, 18):
    exact = oracle.exact_partial_sum_moment_level1_exact(h, 6, shifted=True)
    gauss = 15 * h**3
    print(f"h={h:2d}: E S^6 = {exact} = {float(exact):.4f}; Gaussian {gauss}; shortfall {float(gauss - exact):.2f}")

print("guaranteed shortfall at level 0:", oracle.deficit_bound(L, 0))
print("guaranteed shortfall at level 1:", oracle.deficit_bound(L, 1))
print("limit gap of the normalized sixth moment:", oracle.clt_gap_constant(L))

# A thinned Gaussian sequence converges to the mixture value 15/8 at rate 45/(8h).
for h in (10, 100, 5625):
    v = oracle.gaussian_mixture_moment_exact(h, L, Fraction(1, 2))
    print(f"Gaussian-mixture sixth moment at h={h}: {float(v):.6f} (excess {v - Fraction(15, 8)})")
