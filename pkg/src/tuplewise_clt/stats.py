"""Monte Carlo estimators with standard errors.

Every estimator splits its repetitions into fixed-size shards.  Shard ``i``
draws from the stream keyed by ``(seed, <estimator key>, i)`` and returns
plain accumulators, which are merged in shard order.  The result is therefore
identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .construction import (
    build_blocks,
    canonical_process,
    sample_windows,
    sample_xtilde_windows,
    subblock_sums_array,
)
from .cylinder import CylinderSpec
from .params import ConstructionParams, NumericError, ParameterError
from .rng import stream
from .sparsifier import binomial_weights, moment_mixture

SHARD_REPS = 1 << 15
Z_LIMIT = 4.0


@dataclass(frozen=True)
class MomentReport:
    estimate: float
    std_error: float
    reps: int
    exact_ref: float | None = None
    z_score: float | None = None

    def against(self, reference: float) -> "MomentReport":
        """Copy with ``exact_ref`` set and the z-score filled in."""
        diff = self.estimate - reference
        if self.std_error > 0:
            z = diff / self.std_error
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return replace(self, exact_ref=float(reference), z_score=z)

    @property
    def passed(self) -> bool:
        return self.z_score is not None and abs(self.z_score) <= Z_LIMIT


# ---------------------------------------------------------------------------
# shard engine


def _shard_sizes(reps: int) -> list[int]:
    full, rest = divmod(reps, SHARD_REPS)
    return [SHARD_REPS] * full + ([rest] if rest else [])


def run_sharded(
    task: Callable[[np.random.Generator, int], object],
    reps: int,
    seed: int,
    key: tuple,
    merge: Callable[[object, object], object],
    workers: int = 1,
):
    sizes = _shard_sizes(reps)

    def one(i: int):
        return task(stream(seed, *key, i), sizes[i])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    acc = parts[0]
    for part in parts[1:]:
        acc = merge(acc, part)
    return acc


def _welford(x: np.ndarray) -> tuple[int, float, float]:
    mean = float(x.mean())
    return x.size, mean, float(((x - mean) ** 2).sum())


def _merge_welford(a, b):
    na, ma, qa = a
    nb, mb, qb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, qa + qb + delta * delta * na * nb / n


def _add(a, b):
    return a + b


def _report(acc, reps: int) -> MomentReport:
    n, mean, m2 = acc
    if not (math.isfinite(mean) and math.isfinite(m2)):
        raise NumericError("non-finite Monte Carlo accumulation")
    sd = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return MomentReport(mean, sd / math.sqrt(n), reps)


def _check_reps(reps: int, minimum: int) -> None:
    if not isinstance(reps, int) or reps < minimum:
        raise ParameterError(f"reps must be an integer >= {minimum}, got {reps!r}")


def mean_of(
    statistic: Callable[[np.random.Generator, int], np.ndarray],
    reps: int,
    seed: int,
    key: tuple,
    workers: int = 1,
) -> MomentReport:
    """Sample mean and standard error of a per-rep statistic."""
    acc = run_sharded(lambda rng, k: _welford(statistic(rng, k)), reps, seed, key, _merge_welford, workers)
    return _report(acc, reps)


# ---------------------------------------------------------------------------
# moments and distribution distances


def estimate_moment(
    process: str,
    params: ConstructionParams,
    h: int,
    power: int,
    reps: int,
    workers: int = 1,
    tag: str = "",
) -> MomentReport:
    """Mean of (sum of a length-h window)^power over independent windows."""
    _check_reps(reps, 1000)
    if power < 1 or h < 1:
        raise ParameterError(f"need h >= 1 and power >= 1, got h={h}, power={power}")
    process = canonical_process(process)

    def stat(rng, k):
        values, _ = sample_windows(process, params, h, k, rng)
        return values.sum(axis=1) ** power

    key = ("moment", process, params.L, params.n, h, power, tag)
    return mean_of(stat, reps, params.seed, key, workers)


def window_sums(process: str, params: ConstructionParams, h: int, reps: int, tag: str = "") -> np.ndarray:
    """Raw window sums (for distributional diagnostics)."""
    process = canonical_process(process)
    out = []
    for i, size in enumerate(_shard_sizes(reps)):
        values, _ = sample_windows(process, params, h, size, stream(params.seed, "sums", process, params.n, h, tag, i))
        out.append(values.sum(axis=1))
    return np.concatenate(out)


def ks_distance(samples, target_mean: float, target_variance: float) -> float:
    """Sup distance between the empirical CDF and the N(mean, variance) CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size < 100:
        raise ParameterError(f"need at least 100 samples, got {x.size}")
    if not target_variance > 0:
        raise ParameterError(f"target variance must be positive, got {target_variance}")
    cdf = ndtr((x - target_mean) / math.sqrt(target_variance))
    n = x.size
    i = np.arange(1, n + 1)
    return float(max((i / n - cdf).max(), (cdf - (i - 1) / n).max()))


# ---------------------------------------------------------------------------
# cylinder events and mixing


def _check_marks_allowed(process: str, spec: CylinderSpec) -> None:
    if spec.marks is not None and process != "X-tilde":
        raise ParameterError("marks constraints only apply to the thinned process")


def cylinder_probability(
    process: str,
    params: ConstructionParams,
    spec: CylinderSpec,
    reps: int,
    workers: int = 1,
    tag: str = "",
) -> MomentReport:
    _check_reps(reps, 1000)
    process = canonical_process(process)
    _check_marks_allowed(process, spec)

    def task(rng, k):
        values, marks = sample_windows(process, params, spec.window_length, k, rng)
        return np.int64(spec.hits(values, marks).sum())

    key = ("cylinder", process, params.L, params.n, spec.window_length, tag)
    hits = int(run_sharded(task, reps, params.seed, key, _add, workers))
    prob = hits / reps
    return MomentReport(prob, math.sqrt(prob * (1.0 - prob) / reps), reps)


def empirical_cdf(
    process: str,
    params: ConstructionParams,
    xs: Sequence[float],
    reps: int,
    workers: int = 1,
    tag: str = "",
) -> list[MomentReport]:
    """Monte Carlo P(W_0 <= x) for every x, all from one sample set."""
    _check_reps(reps, 1000)
    process = canonical_process(process)
    grid = np.asarray(xs, dtype=np.float64)

    def task(rng, k):
        values, _ = sample_windows(process, params, 1, k, rng)
        return (values[:, :1] <= grid).sum(axis=0).astype(np.int64)

    key = ("cdf", process, params.L, params.n, tag)
    counts = run_sharded(task, reps, params.seed, key, _add, workers)
    out = []
    for c in counts:
        prob = int(c) / reps
        out.append(MomentReport(prob, math.sqrt(prob * (1.0 - prob) / reps), reps))
    return out


@dataclass(frozen=True)
class MixtureCheck:
    """Thinned moment versus the binomial mixture of source moments."""

    h: int
    power: int
    thinned: MomentReport
    mixture: MomentReport
    base_moments: tuple[float, ...]
    z_score: float

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= Z_LIMIT


def mixture_check(
    params: ConstructionParams,
    h: int,
    powers: Sequence[int],
    reps: int,
    workers: int = 1,
) -> list[MixtureCheck]:
    """Compare E[S(X-tilde, h)]^r with the mixture of E[S(X, j)]^r, j = 1..h.

    The source moments for every j come from the prefix sums of one set of
    length-h X windows, so the mixture's standard error is that of the
    per-window statistic sum_j w_j S_j^r, which accounts for the correlation
    between the j's.
    """
    _check_reps(reps, 1000)
    powers = [int(r) for r in powers]
    w = binomial_weights(h, params.p)[1:]

    def thinned(rng, k):
        values, _ = sample_xtilde_windows(params, h, k, rng)
        s = values.sum(axis=1)
        return [_welford(s**r) for r in powers]

    def source(rng, k):
        values, _ = sample_windows("X", params, h, k, rng)
        prefix = np.cumsum(values, axis=1)
        out = []
        for r in powers:
            pr = prefix**r
            out.append((pr.sum(axis=0), _welford(pr @ w)))
        return out

    def merge_thinned(a, b):
        return [_merge_welford(x, y) for x, y in zip(a, b)]

    def merge_source(a, b):
        return [(x[0] + y[0], _merge_welford(x[1], y[1])) for x, y in zip(a, b)]

    t_acc = run_sharded(thinned, reps, params.seed, ("mix-thin", params.L, params.n, h), merge_thinned, workers)
    s_acc = run_sharded(source, reps, params.seed, ("mix-src", params.L, params.n, h), merge_source, workers)
    out = []
    for r, t, (sums, comb_acc) in zip(powers, t_acc, s_acc):
        base = tuple(float(x) for x in sums / reps)
        t_rep = _report(t, reps)
        mix = _report(comb_acc, reps)
        mix = MomentReport(moment_mixture(params.p, h, r, base), mix.std_error, reps)
        se = math.hypot(t_rep.std_error, mix.std_error)
        z = (t_rep.estimate - mix.estimate) / se if se > 0 else 0.0
        out.append(MixtureCheck(h, r, t_rep, mix, base, z))
    return out


@dataclass(frozen=True)
class GapReport:
    """Signed dependence gap P(A and B) - P(A) P(B) with a delta-method error."""

    N: int
    gap: MomentReport
    p_a: float
    p_b: float
    p_ab: float


def mixing_gap(
    params: ConstructionParams,
    specA: CylinderSpec,
    specB: CylinderSpec,
    N: int,
    reps: int,
    workers: int = 1,
) -> GapReport:
    """Gap between the joint probability of a head event and a tail event at
    lag ``N`` and the product of their probabilities, for the thinned process.

    The head occupies window coordinates ``[0, a)``; the tail starts ``N``
    places after the last head coordinate.  Both are cut from one sample.
    """
    _check_reps(reps, 1000)
    if N <= 2 * params.block_length:
        raise ParameterError(f"N must exceed 2 L^n = {2 * params.block_length}, got {N}")
    a, b = specA.window_length, specB.window_length
    start = a - 1 + N
    length = start + b

    def task(rng, k):
        values, marks = sample_xtilde_windows(params, length, k, rng)
        hit_a = specA.hits(values[:, :a], marks[:, :a])
        hit_b = specB.hits(values[:, start:], marks[:, start:])
        return np.array([hit_a.sum(), hit_b.sum(), (hit_a & hit_b).sum()], dtype=np.int64)

    key = ("mixing", params.L, params.n, a, b, N)
    ca, cb, cab = (int(c) for c in run_sharded(task, reps, params.seed, key, _add, workers))
    pa, pb, pab = ca / reps, cb / reps, cab / reps
    gap = pab - pa * pb
    # influence function of the plug-in gap: 1_AB - pB 1_A - pA 1_B
    second = pab + pb * pb * pa + pa * pa * pb - 2 * pb * pab - 2 * pa * pab + 2 * pa * pb * pab
    var = max(second - (pab - 2 * pa * pb) ** 2, 0.0)
    report = MomentReport(gap, math.sqrt(var / reps), reps).against(0.0)
    return GapReport(N, report, pa, pb, pab)


def mixing_gap_table(
    params: ConstructionParams,
    specA: CylinderSpec,
    specB: CylinderSpec,
    N_list: Sequence[int],
    reps: int,
    workers: int = 1,
) -> list[GapReport]:
    return [mixing_gap(params, specA, specB, N, reps, workers) for N in N_list]


def level_consistency_gap(
    params: ConstructionParams,
    m: int,
    spec: CylinderSpec,
    reps: int,
    workers: int = 1,
) -> MomentReport:
    """P_m(event) - P_n(event) for the thinned process at levels m > n."""
    if m <= params.n:
        raise ParameterError(f"need m > n = {params.n}, got m={m}")
    if spec.window_length > params.block_length:
        raise ParameterError(
            f"spec window {spec.window_length} is longer than L^n = {params.block_length}"
        )
    low = cylinder_probability("X-tilde", params, spec, reps, workers, tag="consistency")
    high = cylinder_probability("X-tilde", params.at_level(m), spec, reps, workers, tag="consistency")
    se = math.hypot(low.std_error, high.std_error)
    return MomentReport(high.estimate - low.estimate, se, reps).against(0.0)


# ---------------------------------------------------------------------------
# tuplewise independence


def grid_z_limit(cells: int, base: float = Z_LIMIT) -> float:
    """Per-cell |z| bar that keeps the whole grid at the single-test 4-sigma
    false-alarm rate (Bonferroni over ``cells`` two-sided tests)."""
    if cells < 1:
        raise ParameterError("cells must be >= 1")
    return float(-ndtri(ndtr(-base) / cells))


@dataclass(frozen=True)
class DiscrepancyReport:
    max_discrepancy: float
    threshold: float
    max_z: float
    cells: int
    reps: int

    @property
    def z_limit(self) -> float:
        return grid_z_limit(self.cells)

    @property
    def passed(self) -> bool:
        return self.max_z <= self.z_limit


def tuple_independence_discrepancy(
    params: ConstructionParams,
    coordinates: Sequence[int],
    cuts: Sequence[float],
    reps: int,
    process: str = "X",
    workers: int = 1,
    tag: str = "",
) -> DiscrepancyReport:
    """Largest gap between a joint cell frequency and the product of its
    marginal frequencies, over the product grid cut at ``cuts``.

    Each cell's error is estimated by the delta method using the observed
    pairwise frequencies; ``max_z`` is the largest standardized gap.  The
    per-cell bar is :func:`grid_z_limit` of the cell count, and ``threshold``
    is that many standard errors at the cell with the largest raw gap.
    """
    return tuple_discrepancies(params, [coordinates], cuts, reps, process, workers, tag)[0]


def tuple_discrepancies(
    params: ConstructionParams,
    tuples: Sequence[Sequence[int]],
    cuts: Sequence[float],
    reps: int,
    process: str = "X",
    workers: int = 1,
    tag: str = "",
) -> list[DiscrepancyReport]:
    """``tuple_independence_discrepancy`` for several tuples over one sample set."""
    tuples = [[int(c) for c in t] for t in tuples]
    if not tuples:
        raise ParameterError("need at least one coordinate tuple")
    for coords in tuples:
        if not 2 <= len(coords) <= params.L:
            raise ParameterError(f"tuple size must lie in [2, L={params.L}], got {len(coords)}")
        if len(set(coords)) != len(coords) or min(coords) < 0:
            raise ParameterError("coordinates must be distinct and non-negative")
    edges = np.asarray(sorted(cuts), dtype=np.float64)
    if edges.size == 0:
        raise ParameterError("grid needs at least one cut point")
    _check_reps(reps, 1000)
    process = canonical_process(process)
    g = edges.size + 1
    h = max(max(t) for t in tuples) + 1
    pair_lists = [[(i, j) for i in range(len(t)) for j in range(i + 1, len(t))] for t in tuples]

    def task(rng, count):
        values, _ = sample_windows(process, params, h, count, rng)
        allbins = np.searchsorted(edges, values, side="right")
        out = []
        for coords, pairs in zip(tuples, pair_lists):
            bins = allbins[:, coords]
            k = len(coords)
            flat = np.ravel_multi_index(bins.T, (g,) * k)
            joint = np.bincount(flat, minlength=g**k)
            marg = np.stack([np.bincount(bins[:, i], minlength=g) for i in range(k)])
            pair = np.stack([np.bincount(bins[:, i] * g + bins[:, j], minlength=g * g) for i, j in pairs])
            out.append((joint, marg, pair))
        return out

    def merge(a, b):
        return [tuple(x + y for x, y in zip(ta, tb)) for ta, tb in zip(a, b)]

    key = ("tuple", process, params.L, params.n, tuple(map(tuple, tuples)), tuple(edges.tolist()), tag)
    acc = run_sharded(task, reps, params.seed, key, merge, workers)
    return [_discrepancy(joint, marg, pair, pairs, g, reps) for (joint, marg, pair), pairs in zip(acc, pair_lists)]


def _discrepancy(joint, marg, pair, pairs, g: int, reps: int) -> DiscrepancyReport:
    k = marg.shape[0]
    pi_joint = joint / reps
    p = marg / reps
    pp = pair / reps
    cell_bins = np.array(np.unravel_index(np.arange(g**k), (g,) * k))  # (k, cells)
    p_cell = p[np.arange(k)[:, None], cell_bins]  # (k, cells)
    prod_all = p_cell.prod(axis=0)
    gap = pi_joint - prod_all
    # influence function of the plug-in gap: 1_C - sum_i c_i 1_{A_i}
    c = np.stack([np.prod(np.delete(p_cell, i, axis=0), axis=0) for i in range(k)])
    mean_if = pi_joint - k * prod_all
    second = pi_joint - 2 * pi_joint * c.sum(axis=0) + (c * c * p_cell).sum(axis=0)
    for r, (i, j) in enumerate(pairs):
        second += 2 * c[i] * c[j] * pp[r, cell_bins[i] * g + cell_bins[j]]
    se = np.sqrt(np.maximum(second - mean_if**2, 0.0) / reps)
    absgap = np.abs(gap)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, absgap / se, np.where(absgap == 0, 0.0, np.inf))
    worst = int(np.argmax(absgap))
    return DiscrepancyReport(
        float(absgap.max()), float(grid_z_limit(g**k) * se[worst]), float(z.max()), g**k, reps
    )


def sign_product_draws(params: ConstructionParams, reps: int, tag: str = "") -> np.ndarray:
    """Product of coordinate signs over one aligned level-1 block, per draw."""
    out = []
    for i, size in enumerate(_shard_sizes(reps)):
        block = build_blocks(params.L, 1, size, stream(params.seed, "signprod", params.L, tag, i))
        out.append(np.sign(block).prod(axis=1))
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# sub-block product diagnostic


@dataclass(frozen=True)
class SubblockReport:
    level: int
    product: MomentReport  # E[prod_i T_i] over the L top sub-block sums
    abs_sum: MomentReport  # E|t| for one independent level-(k-1) block
    check_value: float  # -(E|t|)^L
    identity_z: float

    @property
    def identity_holds(self) -> bool:
        return abs(self.identity_z) <= Z_LIMIT


def subblock_product_check(
    params: ConstructionParams, k: int, reps: int, workers: int = 1
) -> SubblockReport:
    if not isinstance(k, int) or k < 1:
        raise ParameterError(f"level must be >= 1, got {k!r}")
    _check_reps(reps, 10_000)
    L = params.L

    def product(rng, count):
        blocks = build_blocks(L, k, count, rng)
        return subblock_sums_array(blocks, L, k - 1).prod(axis=1)

    def abs_sum(rng, count):
        return np.abs(build_blocks(L, k - 1, count, rng).sum(axis=1))

    prod_rep = mean_of(product, reps, params.seed, ("subprod", L, k), workers)
    abs_rep = mean_of(abs_sum, reps, params.seed, ("subabs", L, k), workers)
    check = -(abs_rep.estimate**L)
    se_check = L * abs_rep.estimate ** (L - 1) * abs_rep.std_error
    se = math.hypot(prod_rep.std_error, se_check)
    z = (prod_rep.estimate - check) / se if se > 0 else 0.0
    return SubblockReport(k, prod_rep.against(check), abs_rep, check, z)
