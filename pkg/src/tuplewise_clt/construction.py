"""Hierarchical sign-coupled block process and its stationarized, thinned variants.

A level-0 block is a single value ``eps * sqrt(3) * U``.  A level-(k+1) block is
the concatenation of ``L`` independent level-k blocks ``W_1..W_L``, each
multiplied by a sign ``s_i``.  The first ``L-1`` signs are fair coin flips;
the last is chosen so that

    s_L = -(s_1 ... s_{L-1}) * prod_i sgn(sum(W_i)),     sgn(0) := +1,

which forces ``prod_i s_i * sum(W_i) = -prod_i |sum(W_i)|`` on every draw while
any ``L-1`` of the signed sub-blocks stay independent.

The batch samplers (``*_windows``) are the workhorses used by the estimators;
the single-window functions wrap them for interactive use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ConstructionParams, ParameterError, check_L, check_level
from .rng import random_signs
from .sparsifier import sparsify

SQRT3 = math.sqrt(3.0)

PROCESS_TAGS = ("Y", "X", "X-tilde")
_ALIASES = {
    "y": "Y",
    "x": "X",
    "x-tilde": "X-tilde",
    "xtilde": "X-tilde",
    "x_tilde": "X-tilde",
}


def canonical_process(tag: str) -> str:
    try:
        return _ALIASES[tag.lower()]
    except (KeyError, AttributeError):
        raise ParameterError(f"unknown process {tag!r}; expected one of {PROCESS_TAGS}") from None


@dataclass(frozen=True)
class BlockSample:
    level: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 1:
            raise ParameterError("block values must be one-dimensional")


@dataclass(frozen=True)
class PathWindow:
    start: int
    values: np.ndarray
    process_tag: str
    marks: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.values)


def build_blocks(L: int, level: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` independent level-``level`` blocks, shape ``(count, L**level)``.

    Draw order is fixed: magnitudes, level-0 signs, then the free signs of
    each level from the bottom up.
    """
    check_L(L)
    check_level(L, level)
    size = L**level
    # 1 - U lies in (0, 1], so no occupied slot is ever exactly zero
    values = SQRT3 * (1.0 - rng.random((count, size)))
    values *= random_signs(rng, (count, size))
    for k in range(1, level + 1):
        sub = L ** (k - 1)
        groups = values.reshape(count, size // (sub * L), L, sub)
        t = groups.sum(axis=3)
        sgn_prod = np.where(t >= 0.0, 1.0, -1.0).prod(axis=2)
        eps = random_signs(rng, (count, size // (sub * L), L - 1))
        last = -eps.prod(axis=2) * sgn_prod
        signs = np.concatenate([eps, last[..., None]], axis=2)
        groups *= signs[..., None]
    return values


def build_block(params: ConstructionParams, level: int, rng: np.random.Generator) -> BlockSample:
    return BlockSample(level, build_blocks(params.L, level, 1, rng)[0])


def subblock_sums(block: BlockSample, k: int) -> np.ndarray:
    """Sums of the consecutive length-``L**k`` slices of ``block``."""
    if not isinstance(k, int) or not 0 <= k <= block.level:
        raise ParameterError(f"sublevel must lie in [0, {block.level}], got {k!r}")
    if block.level == 0:
        return block.values.copy()
    L = round(len(block.values) ** (1.0 / block.level))
    return subblock_sums_array(block.values, L, k)


def subblock_sums_array(values: np.ndarray, L: int, k: int) -> np.ndarray:
    """Batched ``subblock_sums`` over the last axis."""
    width = L**k
    if values.shape[-1] % width:
        raise ParameterError(f"last axis of length {values.shape[-1]} is not a multiple of {width}")
    return values.reshape(*values.shape[:-1], -1, width).sum(axis=-1)


def _check_h(h: int) -> None:
    if not isinstance(h, (int, np.integer)) or h <= 0:
        raise ParameterError(f"window length must be a positive integer, got {h!r}")


def sample_y_windows(params: ConstructionParams, h: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """``reps`` independent block-aligned windows ``Y[0, h-1]``."""
    _check_h(h)
    size = params.block_length
    nblocks = -(-h // size)
    y = build_blocks(params.L, params.n, reps * nblocks, rng)
    return y.reshape(reps, nblocks * size)[:, :h]


def sample_x_windows(params: ConstructionParams, h: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """``reps`` windows ``Y[tau, tau+h-1]`` with ``tau`` uniform on one block."""
    _check_h(h)
    size = params.block_length
    tau = rng.integers(0, size, size=reps)
    if size == 1:
        return sample_y_windows(params, h, reps, rng)
    nblocks = -(-(size - 1 + h) // size)
    y = build_blocks(params.L, params.n, reps * nblocks, rng).reshape(reps, nblocks * size)
    return np.take_along_axis(y, tau[:, None] + np.arange(h), axis=1)


def sample_xtilde_windows(
    params: ConstructionParams, h: int, reps: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Thinned windows and their 0/1 marks, both shape ``(reps, h)``.

    Every row draws a full length-``h`` X window but only its first
    ``sum(marks)`` entries are placed, which is a length-J X window in law.
    """
    _check_h(h)
    marks = (rng.random((reps, h)) < params.p).astype(np.int8)
    x = sample_x_windows(params, h, reps, rng)
    src = np.maximum(np.cumsum(marks, axis=1) - 1, 0)
    values = np.where(marks == 1, np.take_along_axis(x, src, axis=1), 0.0)
    return values, marks


def sample_windows(
    process: str, params: ConstructionParams, h: int, reps: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray | None]:
    process = canonical_process(process)
    if process == "Y":
        return sample_y_windows(params, h, reps, rng), None
    if process == "X":
        return sample_x_windows(params, h, reps, rng), None
    return sample_xtilde_windows(params, h, reps, rng)


def sample_y_window(params: ConstructionParams, h: int, rng: np.random.Generator) -> PathWindow:
    return PathWindow(0, sample_y_windows(params, h, 1, rng)[0], "Y")


def sample_x_window(params: ConstructionParams, h: int, rng: np.random.Generator) -> PathWindow:
    return PathWindow(0, sample_x_windows(params, h, 1, rng)[0], "X")


def sample_xtilde_window(params: ConstructionParams, h: int, rng: np.random.Generator) -> PathWindow:
    _check_h(h)
    marks = (rng.random(h) < params.p).astype(np.int8)
    j = int(marks.sum())
    source = sample_x_window(params, j, rng).values if j else np.empty(0)
    return PathWindow(1, sparsify(source, marks), "X-tilde", marks)
