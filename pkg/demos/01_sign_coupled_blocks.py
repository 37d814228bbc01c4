"""Build a few blocks and look at the sign coupling that drives everything.

Run:  python3 demos/01_sign_coupled_blocks.py
"""

from __future__ import annotations

import numpy as np

from tuplewise_clt import ConstructionParams, build_block, build_blocks, subblock_sums
from tuplewise_clt.rng import stream

params = ConstructionParams(L=6, n=2, seed=42)
rng = stream(params.seed, "demo-blocks")

block = build_block(params, 2, rng)
print("one level-2 block has", block.values.size, "coordinates")

# The six level-1 sub-block sums always multiply to a negative number.
t = subblock_sums(block, 1)
print("level-1 sub-block sums:", np.round(t, 3))
print("product of their signs:", int(np.prod(np.sign(t))))

# Same story one level down, inside each sub-block.
for i, chunk in enumerate(block.values.reshape(6, 6)):
    print(f"  sub-block {i}: sign product {int(np.prod(np.sign(chunk)))}")

# Any five coordinates of a level-1 block look like fair coins; all six never do.
many = build_blocks(6, 1, 100_000, stream(params.seed, "demo-many"))
signs = np.sign(many)
print("P(first five coordinates all positive) =", (signs[:, :5] > 0).all(axis=1).mean(), "(fair: 1/32 = 0.03125)")
print("P(all six positive) =", (signs > 0).all(axis=1).mean(), "(fair would be 1/64)")
