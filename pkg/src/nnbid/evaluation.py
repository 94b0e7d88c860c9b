"""Market-faithful evaluation: hourly bid freeze, 5-minute clearing.

At the top of each hour the policy is frozen into its submitted form from
the submission-time observation (SoC at hour start, price history strictly
before the hour): NNEB policies become an extracted bid curve, the
two-threshold baseline freezes one zero-band action, and self-scheduling
fixes a signed quantity. Twelve 5-minute prices then clear against the
frozen object; delivered power is feasibility-clamped and settled.
"""

from dataclasses import dataclass, field

import numpy as np

from .ess import EssState, dispatch_from_signed, feasible_range, step_soc
from .extraction import extract_bid, price_grid, verify_equivalence
from .features import LOOKBACK, PriceHistory, build_observation
from .market import clear_bid_many, eval_zero_band_many, net_income_arr
from .policy import PolicyNetwork, decode_action, monotonicity_metric

CLEARINGS_PER_HOUR = 12


@dataclass
class EvalResult:
    mode: str
    total_profit: float
    prices: np.ndarray
    soc: np.ndarray               # SoC at each interval start
    powers: np.ndarray            # delivered signed MW
    incomes: np.ndarray
    hourly_obs: np.ndarray
    mono_metric: float | None = None
    max_equivalence_deviation: float | None = None
    bids: list = field(default_factory=list)

    def trace_rows(self):
        for i in range(len(self.prices)):
            yield (i, float(self.prices[i]), float(self.soc[i]),
                   float(self.powers[i]), float(self.incomes[i]))


def _frozen_hour_powers(policy: PolicyNetwork, obs: np.ndarray,
                        hour_prices: np.ndarray, grid):
    """Cleared (pre-clamp) power for each price under the frozen bid.

    Returns (powers, bid_or_none, equivalence_deviation_or_none).
    """
    if policy.mode == "nneb":
        bid = extract_bid(policy, obs, grid)
        dev = verify_equivalence(bid, policy, obs, grid)
        return clear_bid_many(bid, hour_prices), bid, dev
    means, _ = policy.action_stats(obs)
    if policy.mode == "two-pair":
        act = decode_action(means[0], policy.params, policy.price_scale)
        powers = eval_zero_band_many(act.lambda_c, act.p_c, act.lambda_d, act.p_d,
                                     hour_prices)
        return powers, None, None
    p = float(np.clip(means[0, 0], -1.0, 1.0)) * policy.params.p_max
    return np.full(len(hour_prices), p), None, None


def evaluate_policy(policy: PolicyNetwork, test_values: np.ndarray,
                    warm_values: np.ndarray, grid_size: int = 512,
                    soc0: float | None = None,
                    compute_mono: bool = True) -> EvalResult:
    """Run the full test window and return profit plus per-interval traces.

    `warm_values` seed the price history (the tail of the training split),
    so no test price is ever visible before it clears.
    """
    params = policy.params
    test_values = np.asarray(test_values, dtype=float)
    warm_values = np.asarray(warm_values, dtype=float)
    if len(test_values) % CLEARINGS_PER_HOUR != 0:
        raise ValueError("test window must cover whole hours")
    n = len(test_values)
    n_hours = n // CLEARINGS_PER_HOUR

    fill = float(warm_values.mean()) if len(warm_values) else 0.0
    history = PriceHistory(fill=fill, seed_values=warm_values[-LOOKBACK:])
    soc = params.capacity_mwh / 2.0 if soc0 is None else float(soc0)
    grid = price_grid(policy, grid_size) if policy.mode == "nneb" else None

    prices_out = np.empty(n)
    soc_out = np.empty(n)
    powers_out = np.empty(n)
    incomes_out = np.empty(n)
    hourly_obs = np.empty((n_hours, 15))
    bids = []
    max_dev = 0.0 if policy.mode == "nneb" else None

    for h in range(n_hours):
        i0 = h * CLEARINGS_PER_HOUR
        hour_of_day = (i0 % 288) / 12.0
        obs = build_observation(hour_of_day, history, soc, params)
        hourly_obs[h] = obs
        hour_prices = test_values[i0:i0 + CLEARINGS_PER_HOUR]
        cleared, bid, dev = _frozen_hour_powers(policy, obs, hour_prices, grid)
        if bid is not None:
            bids.append(bid)
            max_dev = max(max_dev, dev)
        for j in range(CLEARINGS_PER_HOUR):
            i = i0 + j
            lam = float(hour_prices[j])
            state = EssState(soc=soc)
            p_lo, p_hi = feasible_range(state, params)
            delivered = float(np.clip(cleared[j], p_lo, p_hi))
            dispatch = dispatch_from_signed(delivered, params)
            income = float(net_income_arr(np.array([lam]), np.array([delivered]), params)[0])
            prices_out[i] = lam
            soc_out[i] = soc
            powers_out[i] = delivered
            incomes_out[i] = income
            soc = step_soc(state, dispatch, params).soc
            history.append(lam)

    mono = None
    if compute_mono and policy.mode == "nneb":
        grid200 = np.linspace(policy.price_scale.lo, policy.price_scale.hi, 200)
        mono = monotonicity_metric(policy, hourly_obs, grid200)

    return EvalResult(
        mode=policy.mode,
        total_profit=float(incomes_out.sum()),
        prices=prices_out,
        soc=soc_out,
        powers=powers_out,
        incomes=incomes_out,
        hourly_obs=hourly_obs,
        mono_metric=mono,
        max_equivalence_deviation=max_dev,
        bids=bids,
    )


def write_trace_csv(path, result: EvalResult, extra_comment: str | None = None):
    """Per-interval (price, SoC, power, income) trace for plotting."""
    with open(path, "w") as f:
        f.write(f"# mode={result.mode} total_profit={result.total_profit!r}\n")
        if extra_comment:
            f.write(f"# {extra_comment}\n")
        f.write("interval,price,soc,power,income\n")
        for i, lam, soc, p, inc in result.trace_rows():
            f.write(f"{i},{lam!r},{soc!r},{p!r},{inc!r}\n")
