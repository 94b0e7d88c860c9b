"""Hindsight-optimal profit benchmarks.

`hindsight_dp` runs backward induction over a uniform SoC grid and a
signed power grid with perfect price foresight; it upper-bounds any
price-taker bidding policy up to grid resolution. `brute_force_optimal`
exhaustively enumerates tiny instances and certifies the DP exactly when
both share the action set and every reachable SoC sits on the grid.
"""

from functools import lru_cache

import numpy as np

from .ess import EssParams, feasible_range_arr

BRUTE_FORCE_GUARD = 7 ** 6


def _transition_tables(params: EssParams, soc_nodes: np.ndarray, powers: np.ndarray):
    """Clamped power, reward coefficients, and next-node index per (node, power).

    Rewards at price lam are income_coef * lam - cost_term, elementwise.
    """
    p_lo, p_hi = feasible_range_arr(soc_nodes, params)
    pc = np.clip(powers[None, :], p_lo[:, None], p_hi[:, None])
    income_coef = params.tau * pc
    cost_term = params.tau * params.lambda_dep * np.abs(pc)
    charge = np.maximum(-pc, 0.0)
    discharge = np.maximum(pc, 0.0)
    nxt = soc_nodes[:, None] + params.tau * (params.eta_c * charge - discharge / params.eta_d)
    nxt = np.clip(nxt, 0.0, params.capacity_mwh)
    delta = soc_nodes[1] - soc_nodes[0]
    k = np.clip(np.rint(nxt / delta).astype(np.int64), 0, len(soc_nodes) - 1)
    round_err = np.abs(nxt - soc_nodes[k])
    return pc, income_coef, cost_term, k, float(round_err.max())


def hindsight_dp(prices: np.ndarray, params: EssParams, soc_levels: int = 401,
                 power_levels: int = 21, soc0: float | None = None):
    """Maximal cumulative net income with perfect foresight.

    Returns (profit, schedule) where schedule holds the clamped signed
    power per interval along an optimal grid trajectory. The start SoC
    (default half capacity) snaps to the nearest grid node.
    """
    prices = np.asarray(prices, dtype=float)
    if len(prices) == 0:
        raise ValueError("price series is empty")
    if soc_levels < 2:
        raise ValueError("need at least 2 SoC levels")
    if power_levels < 3 or power_levels % 2 == 0:
        raise ValueError("power_levels must be odd and >= 3 so the grid includes 0")
    T = len(prices)
    N = soc_levels
    soc_nodes = np.linspace(0.0, params.capacity_mwh, N)
    powers = np.linspace(params.p_min, params.p_max, power_levels)
    pc, income_coef, cost_term, k, _ = _transition_tables(params, soc_nodes, powers)

    value = np.zeros(N)
    best_j = np.empty((T, N), dtype=np.int32)
    rows = np.arange(N)
    for t in range(T - 1, -1, -1):
        cand = income_coef * prices[t] - cost_term + value[k]
        best_j[t] = np.argmax(cand, axis=1)
        value = cand[rows, best_j[t]]

    delta = soc_nodes[1] - soc_nodes[0]
    start = params.capacity_mwh / 2.0 if soc0 is None else float(soc0)
    node = int(np.clip(np.rint(start / delta), 0, N - 1))
    profit = float(value[node])

    schedule = np.empty(T)
    for t in range(T):
        j = best_j[t, node]
        schedule[t] = pc[node, j]
        node = k[node, j]
    return profit, schedule


def dp_rounding_error(params: EssParams, soc_levels: int, power_levels: int) -> float:
    """Largest SoC snap distance across all grid transitions."""
    soc_nodes = np.linspace(0.0, params.capacity_mwh, soc_levels)
    powers = np.linspace(params.p_min, params.p_max, power_levels)
    return _transition_tables(params, soc_nodes, powers)[4]


def brute_force_optimal(prices: np.ndarray, params: EssParams,
                        action_powers: np.ndarray, soc0: float | None = None) -> float:
    """Exact optimum over all clamped action sequences of a tiny instance.

    Ground truth for the DP: same clamp, same reward arithmetic, exact SoC
    evolution (no grid rounding). Guarded against instances larger than
    7 actions x 6 steps.
    """
    prices = np.asarray(prices, dtype=float)
    action_powers = np.asarray(action_powers, dtype=float)
    T, M = len(prices), len(action_powers)
    if M ** T > BRUTE_FORCE_GUARD:
        raise ValueError(f"instance too large: {M}^{T} sequences exceed {BRUTE_FORCE_GUARD}")
    start = params.capacity_mwh / 2.0 if soc0 is None else float(soc0)
    tau, lam_dep = params.tau, params.lambda_dep
    eta_c, eta_d, cap = params.eta_c, params.eta_d, params.capacity_mwh

    @lru_cache(maxsize=None)
    def best(t: int, soc: float) -> float:
        if t == T:
            return 0.0
        p_lo = max(-params.p_max, -(cap - soc) / (tau * eta_c))
        p_hi = min(params.p_max, eta_d * soc / tau)
        out = -np.inf
        for p in action_powers:
            pc = min(max(p, p_lo), p_hi)
            reward = (tau * pc) * prices[t] - tau * lam_dep * abs(pc)
            nxt = soc + tau * (eta_c * max(-pc, 0.0) - max(pc, 0.0) / eta_d)
            nxt = min(max(nxt, 0.0), cap)
            out = max(out, reward + best(t + 1, nxt))
        return out

    return float(best(0, start))


def profit_ratio(policy_profit: float, oracle_profit: float) -> float:
    """Share of the hindsight-optimal profit a policy captured."""
    if oracle_profit <= 0.0:
        raise ValueError(f"ratio undefined for non-positive oracle profit {oracle_profit}")
    return policy_profit / oracle_profit
