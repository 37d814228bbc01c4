from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats as sps

from tuplewise_clt import ConstructionParams, CylinderSpec, NumericError, ParameterError
from tuplewise_clt.stats import (
    SHARD_REPS,
    MomentReport,
    cylinder_probability,
    empirical_cdf,
    estimate_moment,
    grid_z_limit,
    ks_distance,
    level_consistency_gap,
    mean_of,
    mixing_gap,
    mixture_check,
    run_sharded,
    sign_product_draws,
    subblock_product_check,
    tuple_discrepancies,
    window_sums,
)

P = ConstructionParams(L=6, n=1, p=0.5, seed=2024)


def test_moment_report_against():
    r = MomentReport(1.1, 0.05, 100).against(1.0)
    assert r.exact_ref == 1.0 and r.z_score == pytest.approx(2.0)
    assert r.passed
    assert not MomentReport(1.5, 0.05, 100).against(1.0).passed
    assert MomentReport(1.0, 0.0, 10).against(1.0).z_score == 0.0
    assert MomentReport(1.1, 0.0, 10).against(1.0).z_score == math.inf


def test_worker_count_does_not_change_results():
    reps = 3 * SHARD_REPS + 17
    one = estimate_moment("X-tilde", P, 4, 2, reps, workers=1)
    many = estimate_moment("X-tilde", P, 4, 2, reps, workers=5)
    assert one == many
    assert one.reps == reps


def test_shards_merge_in_order():
    seen = run_sharded(lambda rng, k: [k], 2 * SHARD_REPS + 5, 0, ("order",), lambda a, b: a + b, 3)
    assert seen == [SHARD_REPS, SHARD_REPS, 5]


def test_marginal_second_moment():
    rep = estimate_moment("X-tilde", P, 1, 2, 200_000).against(0.5)
    assert rep.passed


def test_level_one_window_moment_matches_exact():
    from tuplewise_clt import oracle

    exact = oracle.exact_partial_sum_moment_level1(6, 4, shifted=True)
    assert estimate_moment("X", P, 6, 4, 200_000).against(exact).passed
    exact = oracle.exact_partial_sum_moment_level1(6, 6, shifted=False)
    assert estimate_moment("Y", P, 6, 6, 200_000).against(exact).passed


def test_tags_give_independent_streams():
    a = estimate_moment("X", P, 2, 2, 5000, tag="a")
    b = estimate_moment("X", P, 2, 2, 5000, tag="b")
    assert a.estimate != b.estimate


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_error_on_non_finite():
    with pytest.raises(NumericError):
        mean_of(lambda rng, k: np.full(k, np.inf), 2000, 0, ("inf",))


def test_reps_validation():
    with pytest.raises(ParameterError):
        estimate_moment("X", P, 2, 2, 10)
    with pytest.raises(ParameterError):
        estimate_moment("X", P, 0, 2, 5000)


def test_ks_distance_matches_scipy():
    x = np.random.default_rng(0).normal(0.1, 0.8, size=5000)
    want = sps.kstest(x, "norm", args=(0.0, math.sqrt(0.5))).statistic
    assert ks_distance(x, 0.0, 0.5) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ParameterError):
        ks_distance(x, 0.0, 0.0)


def test_cylinder_probability_single_coordinate():
    spec = CylinderSpec.parse("0:(0.5,inf)")
    want = 0.5 * (math.sqrt(3) - 0.5) / (2 * math.sqrt(3))
    assert cylinder_probability("X-tilde", P, spec, 100_000).against(want).passed


def test_cylinder_marks_only_for_thinned():
    spec = CylinderSpec.parse("0:(0,inf);marks=1")
    cylinder_probability("X-tilde", P, spec, 2000)
    with pytest.raises(ParameterError):
        cylinder_probability("X", P, spec, 2000)


def test_empirical_cdf_at_zero():
    reports = empirical_cdf("X-tilde", P, [0.0, -0.5], 100_000)
    assert reports[0].against(0.75).passed
    f = (math.sqrt(3) - 0.5) / (2 * math.sqrt(3))
    assert reports[1].against(0.5 * f).passed


def test_window_sums_shape():
    s = window_sums("X-tilde", P, 8, 3000)
    assert s.shape == (3000,)


def test_mixture_check_small():
    for chk in mixture_check(P, 6, (2, 4), 60_000):
        assert chk.passed, chk
        assert len(chk.base_moments) == 6
    # second moments of X windows are exactly j
    chk = mixture_check(P, 4, (2,), 60_000)[0]
    assert chk.base_moments[0] == pytest.approx(1.0, abs=0.03)


def test_mixing_gap_requires_long_lag():
    A, B = CylinderSpec.parse("0:(0.5,inf)"), CylinderSpec.parse("0:(-inf,-0.3)")
    with pytest.raises(ParameterError):
        mixing_gap(P, A, B, 12, 5000)
    gap = mixing_gap(P.at_level(0), A, B, 4, 50_000)
    assert gap.gap.passed and gap.N == 4
    assert gap.p_ab <= min(gap.p_a, gap.p_b)


def test_mixing_gap_lag_bound_uses_block_length():
    full = "0:(0,inf);1:(0,inf);2:(0,inf);3:(0,inf);4:(0,inf)"
    A = CylinderSpec.parse(full + ";marks=11111")
    B = CylinderSpec.parse("0:(0,inf);marks=1")
    with pytest.raises(ParameterError):
        mixing_gap(P, A, B, 2, 5000)


def test_level_consistency_single_coordinate():
    spec = CylinderSpec.parse("0:(-inf,0.4]")
    assert level_consistency_gap(P.at_level(0), 1, spec, 50_000).against(0.0).passed


def test_grid_z_limit():
    assert grid_z_limit(1) == pytest.approx(4.0)
    assert 5.3 < grid_z_limit(1024) < 5.5
    assert grid_z_limit(4096) > grid_z_limit(1024)
    with pytest.raises(ParameterError):
        grid_z_limit(0)


def test_five_tuples_look_independent_full_block_does_not():
    reports = tuple_discrepancies(P, [[0, 1, 2, 3, 4], [0, 1, 2, 3, 4, 5]], (0.0,), 100_000, process="Y")
    five, six = reports
    assert five.passed and five.cells == 32
    # the full block's sign pattern is constrained: half the sign cells are empty
    assert not six.passed and six.max_discrepancy == pytest.approx(1 / 64, abs=2e-3)


def test_tuple_validation():
    with pytest.raises(ParameterError):
        tuple_discrepancies(P, [[0, 0]], (0.0,), 5000)
    with pytest.raises(ParameterError):
        tuple_discrepancies(P, [[0]], (0.0,), 5000)
    with pytest.raises(ParameterError):
        tuple_discrepancies(P, [[0, 1]], (), 5000)
    with pytest.raises(ParameterError):
        tuple_discrepancies(P, [], (0.0,), 5000)


def test_sign_product_always_minus_one():
    draws = sign_product_draws(P, 10_000)
    assert draws.shape == (10_000,) and np.all(draws == -1)


def test_subblock_product_identity():
    chk = subblock_product_check(P, 2, 20_000)
    assert chk.identity_holds
    assert chk.abs_sum.estimate >= math.sqrt(6) / 2
    assert chk.product.estimate < 0
    with pytest.raises(ParameterError):
        subblock_product_check(P, 0, 20_000)
    with pytest.raises(ParameterError):
        subblock_product_check(P, 2, 100)
