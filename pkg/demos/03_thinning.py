"""Thinning: place a source sequence into the 1-slots of Bernoulli marks.

Run:  python3 demos/03_thinning.py
"""

from __future__ import annotations

import numpy as np

from tuplewise_clt import ConstructionParams, cdf_mixture, kappa_positions, moment_mixture, sparsify
from tuplewise_clt.construction import sample_xtilde_window
from tuplewise_clt.rng import stream
from tuplewise_clt.sparsifier import binomial_weights
from tuplewise_clt.stats import empirical_cdf, estimate_moment, mixture_check

marks = [0, 1, 1, 0, 1, 0]
print("marks", marks, "-> kappa", kappa_positions(marks).kappa)
print("sparsify([a, b, c]) =", sparsify([1.5, -0.2, 0.7], marks))

params = ConstructionParams(L=6, n=1, p=0.5, seed=7)
w = sample_xtilde_window(params, 10, stream(7, "demo"))
print("a thinned window:", np.round(w.values, 3))

# Half the mass sits at zero, so P(X0 <= 0) = 1/2 + 1/2 * 1/2.
cdf0 = empirical_cdf("X-tilde", params, [0.0], 200_000)[0]
print(f"P(X0 <= 0) ~ {cdf0.estimate:.4f} +/- {cdf0.std_error:.4f}; exact {cdf_mixture(0.5, 0.5, 0.0)}")

print("binomial weights for h=4:", binomial_weights(4, 0.5))
print("mixing E S_j^2 = j gives", moment_mixture(0.5, 4, 2, [1, 2, 3, 4]), "= h p")

for chk in mixture_check(params, 8, (2, 4), 200_000):
    print(f"h=8 r={chk.power}: thinned {chk.thinned.estimate:.4f} vs mixture {chk.mixture.estimate:.4f} "
          f"(z {chk.z_score:+.2f})")

rep = estimate_moment("X-tilde", params, 1, 4, 200_000).against(0.9)
print(f"E X0^4 ~ {rep.estimate:.4f} (z {rep.z_score:+.2f} against 9/10)")
