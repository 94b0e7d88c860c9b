"""Reference-level derivation: action collection plus exact 1-D k-means.

The clustering is the dynamic program over sorted distinct values (with
multiplicities), globally optimal and deterministic; Lloyd-style iteration
would introduce initialization noise the pipeline does not need.
"""

import numpy as np

from .envs import VecMarketEnv
from .policy import PolicyNetwork, ReferenceLevels
from .training import requested_powers


def collect_actions(policy: PolicyNetwork, envs: VecMarketEnv, n_samples: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Continuous signed powers (MW) from on-policy rollouts.

    Powers are recorded before level snapping and before the feasibility
    clamp: these are the network outputs the levels should summarize.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    obs = envs.reset()
    chunks = []
    filled = 0
    while filled < n_samples:
        prices = envs.current_prices()
        raw, _ = policy.sample_actions(obs, prices, rng)
        powers = requested_powers(policy, raw, prices)
        take = min(len(powers), n_samples - filled)
        chunks.append(powers[:take])
        filled += take
        obs, _, _, _ = envs.step(powers)
    return np.concatenate(chunks)


def _interval_cost_tables(vals: np.ndarray, counts: np.ndarray):
    w = np.concatenate([[0.0], np.cumsum(counts)])
    s = np.concatenate([[0.0], np.cumsum(counts * vals)])
    q = np.concatenate([[0.0], np.cumsum(counts * vals * vals)])
    return w, s, q


def kmeans_1d(samples, k: int = 10) -> ReferenceLevels:
    """Globally optimal 1-D k-means centroids, sorted ascending.

    Exact dynamic program over sorted distinct values: clusters of an
    optimal 1-D solution are contiguous in sorted order, and the per-layer
    optimal split index is monotone in the right endpoint, which the
    divide-and-conquer recursion exploits. Samples are fractions of p_max.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("samples must be a non-empty 1-d array")
    vals, counts = np.unique(x, return_counts=True)
    m = len(vals)
    if m < k:
        raise ValueError(f"need at least {k} distinct samples, got {m}")
    counts = counts.astype(float)
    w, s, q = _interval_cost_tables(vals, counts)

    def cost(i: int, j: int) -> float:
        # weighted SSE of vals[i..j]; tiny negatives from cancellation clamp to 0
        cw = w[j + 1] - w[i]
        cs = s[j + 1] - s[i]
        return max(q[j + 1] - q[i] - cs * cs / cw, 0.0)

    d_prev = np.array([cost(0, j) for j in range(m)])
    splits = np.zeros((k, m), dtype=np.int64)

    for layer in range(1, k):
        d_cur = np.full(m, np.inf)

        def solve(lo, hi, opt_lo, opt_hi):
            if lo > hi:
                return
            mid = (lo + hi) // 2
            best = np.inf
            best_i = opt_lo
            for i in range(max(opt_lo, layer), min(mid, opt_hi) + 1):
                c = d_prev[i - 1] + cost(i, mid)
                if c < best:
                    best = c
                    best_i = i
            d_cur[mid] = best
            splits[layer, mid] = best_i
            solve(lo, mid - 1, opt_lo, best_i)
            solve(mid + 1, hi, best_i, opt_hi)

        solve(layer, m - 1, layer, m - 1)
        d_prev = d_cur

    # recover partition boundaries right to left
    bounds = []
    j = m - 1
    for layer in range(k - 1, 0, -1):
        i = int(splits[layer, j])
        bounds.append((i, j))
        j = i - 1
    bounds.append((0, j))
    centroids = [(s[j + 1] - s[i]) / (w[j + 1] - w[i]) for i, j in reversed(bounds)]
    return ReferenceLevels(tuple(centroids))


def kmeans_sse(samples, levels: ReferenceLevels) -> float:
    """Nearest-assignment SSE of samples against the levels.

    Uses the lower tie-break, matching discretize; clusters are sliced out
    and summed directly so the value is the canonical per-cluster sum of
    squared deviations.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    cand = np.asarray(levels.levels)
    mids = 0.5 * (cand[:-1] + cand[1:])
    idx = np.searchsorted(mids, x, side="left")
    total = 0.0
    for j in range(len(cand)):
        c = x[idx == j]
        if len(c):
            total += float(((c - cand[j]) ** 2).sum())
    return total


def derive_levels(policy: PolicyNetwork, values: np.ndarray, n_envs: int,
                  n_samples: int, rng: np.random.Generator, k: int = 10) -> ReferenceLevels:
    """Collect on-policy powers and cluster them into k reference levels."""
    envs = VecMarketEnv(np.asarray(values, dtype=float), policy.params, n_envs)
    powers = collect_actions(policy, envs, n_samples, rng)
    return kmeans_1d(powers / policy.params.p_max, k=k)
