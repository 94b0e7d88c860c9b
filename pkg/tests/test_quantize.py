from itertools import combinations

import numpy as np
import pytest

from nnbid.data import synth_prices
from nnbid.envs import VecMarketEnv
from nnbid.ess import EssParams
from nnbid.policy import PolicyNetwork, PriceScale, ReferenceLevels
from nnbid.quantize import collect_actions, derive_levels, kmeans_1d, kmeans_sse

PARAMS = EssParams(capacity_mwh=4.0, p_max=1.0)
SCALE = PriceScale(-50.0, 350.0)


def partition_sse(x, bounds):
    """SSE of sorted x split at the given contiguous boundaries."""
    total = 0.0
    for lo, hi in bounds:
        c = x[lo:hi]
        if len(c):
            total += float(((c - c.mean()) ** 2).sum())
    return total


def exhaustive_best_sse(x, k):
    """Minimum SSE over all contiguous partitions of sorted x into k parts."""
    x = np.sort(x)
    n = len(x)
    best = np.inf
    for cuts in combinations(range(1, n), k - 1):
        edges = [0, *cuts, n]
        sse = partition_sse(x, list(zip(edges[:-1], edges[1:])))
        best = min(best, sse)
    return best


def test_two_obvious_clusters():
    lv = kmeans_1d(np.array([-1.0, -1.0, 1.0, 1.0]), k=2)
    assert lv.levels == (-1.0, 1.0)


def test_weighted_pairs():
    lv = kmeans_1d(np.array([0.0, 0.1, 0.9, 1.0]), k=2)
    assert lv.levels == pytest.approx((0.05, 0.95))


def test_k_equals_distinct_gives_zero_sse():
    # dyadic values so the per-cluster means are exact in floating point
    x = np.array([-0.75, -0.25, 0.0, 0.5, 0.875])
    lv = kmeans_1d(np.repeat(x, 3), k=5)
    assert lv.levels == tuple(x)
    assert kmeans_sse(np.repeat(x, 3), lv) == 0.0


def test_multiplicity_weights_the_mean():
    # 9 copies of -0.1 and one 0.9 in one cluster pull the centroid to 0
    x = np.array([-0.1] * 9 + [0.9] + [-0.9, -0.9])
    lv = kmeans_1d(x, k=2)
    assert lv.levels[0] == pytest.approx(-0.9)
    assert lv.levels[1] == pytest.approx(0.0)


def test_matches_exhaustive_partition_search():
    rng = np.random.default_rng(0)
    for trial in range(60):
        n = int(rng.integers(6, 13))
        k = int(rng.integers(2, 5))
        x = np.round(rng.uniform(-1, 1, n), 3)
        if len(np.unique(x)) < k:
            continue
        lv = kmeans_1d(x, k=k)
        got = kmeans_sse(x, lv)
        best = exhaustive_best_sse(x, k)
        assert got == pytest.approx(best, abs=1e-12)


def test_permutation_invariant():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 200)
    lv1 = kmeans_1d(x, k=6)
    lv2 = kmeans_1d(rng.permutation(x), k=6)
    assert lv1.levels == lv2.levels


def test_not_worse_than_lloyd():
    rng = np.random.default_rng(2)
    for trial in range(10):
        x = np.concatenate([rng.normal(c, 0.05, 50) for c in (-0.7, -0.1, 0.4, 0.8)])
        x = np.clip(x, -1, 1)
        lv = kmeans_1d(x, k=4)
        exact = kmeans_sse(x, lv)
        # Lloyd from random starts never beats the exact optimum
        for start in range(5):
            srng = np.random.default_rng(100 + start)
            centers = np.sort(srng.choice(x, 4, replace=False))
            for _ in range(50):
                idx = np.abs(x[:, None] - centers[None, :]).argmin(axis=1)
                new = np.array([x[idx == j].mean() if np.any(idx == j) else centers[j]
                                for j in range(4)])
                if np.allclose(new, centers):
                    break
                centers = np.sort(new)
            lloyd = float(((x - centers[np.abs(x[:, None] - centers[None, :]).argmin(axis=1)]) ** 2).sum())
            assert exact <= lloyd + 1e-9


def test_centroids_strictly_increasing():
    rng = np.random.default_rng(3)
    for trial in range(20):
        x = rng.uniform(-1, 1, 300)
        lv = kmeans_1d(x, k=10)
        assert np.all(np.diff(lv.levels) > 0)


def test_too_few_distinct_values_errors():
    with pytest.raises(ValueError, match="distinct"):
        kmeans_1d(np.array([0.0, 0.0, 1.0]), k=3)
    with pytest.raises(ValueError):
        kmeans_1d(np.array([]), k=1)


def test_kmeans_sse_lower_tie_break():
    lv = ReferenceLevels((-1.0, 1.0))
    # 0.0 is the exact midpoint: assigned to the lower level
    assert kmeans_sse(np.array([0.0]), lv) == pytest.approx(1.0)
    assert kmeans_sse(np.array([-1.0, 1.0]), lv) == 0.0


def test_collect_actions_stub_like_policy():
    values = synth_prices(41, 5).values
    pol = PolicyNetwork("nneb", PARAMS, PriceScale.from_prices(values),
                        np.random.default_rng(0), hidden=(8, 8))
    envs = VecMarketEnv(values, PARAMS, 4)
    powers = collect_actions(pol, envs, 250, np.random.default_rng(1))
    assert powers.shape == (250,)
    assert np.all(np.abs(powers) <= PARAMS.p_max + 1e-12)
    envs2 = VecMarketEnv(values, PARAMS, 4)
    again = collect_actions(pol, envs2, 250, np.random.default_rng(1))
    assert np.array_equal(powers, again)


def test_derive_levels_end_to_end():
    values = synth_prices(42, 5).values
    pol = PolicyNetwork("nneb", PARAMS, PriceScale.from_prices(values),
                        np.random.default_rng(0), hidden=(8, 8))
    lv = derive_levels(pol, values, n_envs=4, n_samples=400,
                       rng=np.random.default_rng(2), k=6)
    assert len(lv.levels) == 6
    assert all(-1.0 <= v <= 1.0 for v in lv.levels)
