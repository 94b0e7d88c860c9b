"""The whole pipeline at toy scale: train, quantize, retrain, extract, evaluate.

Budgets here are a fraction of what a real run needs, so the profit numbers
are not meaningful; the point is every stage handing off to the next and
the invariants that hold at the end (valid 10-pair bids, bid/network
agreement, monotonicity fraction).
"""

import numpy as np

from nnbid import (EssParams, SynthSpec, TrainConfig, derive_levels,
                   evaluate_policy, hindsight_dp, split, synth_prices, train,
                   retrain, validate_bid)

params = EssParams(4.0, 1.0)
series = synth_prices(seed=4, days=12, spec=SynthSpec(daily_amplitude=70.0))
train_series, test_series = split(series, 8, 4)

# stage 1: PPO over the continuous supply function
config = TrainConfig(seed=0, n_envs=8, total_steps=150_000, minibatch_size=1024,
                     entropy_coef=0.02)
policy, rows = train(config, params, train_series, mode="nneb")
print(f"stage 1 done: {rows[-1]['env_steps']} env-steps, "
      f"day reward {rows[-1]['mean_reward']:.1f}")

# reference levels: cluster the powers the trained net actually requests
levels = derive_levels(policy, train_series.values, n_envs=8, n_samples=4000,
                       rng=np.random.default_rng(99), k=8)
print("levels (fractions of p_max):", [round(v, 3) for v in levels.levels])

# stage 2: discretized clearing + monotonicity phase after each update
config2 = TrainConfig(seed=1, n_envs=8, total_steps=80_000, minibatch_size=1024,
                      entropy_coef=0.02)
policy, rows2 = retrain(policy, levels, config2, train_series)
print(f"stage 2 done: mono loss {rows2[-1]['mono_loss']:.3e}, "
      f"mono metric {rows2[-1]['mono_metric']:.4f}")

# market-faithful evaluation: hourly extracted bids, 5-minute clearing
result = evaluate_policy(policy, test_series.values, train_series.values)
oracle, _ = hindsight_dp(test_series.values, params, soc_levels=201,
                         power_levels=21)
print(f"\ntest profit {result.total_profit:.1f} vs hindsight oracle {oracle:.1f}")
print(f"bid/network max deviation: {result.max_equivalence_deviation}")
print(f"monotonicity on held-out observations: {result.mono_metric:.4f}")

bad = [issues for bid in result.bids for issues in validate_bid(bid, params)]
sizes = [len(bid.prices) for bid in result.bids]
print(f"{len(result.bids)} hourly bids, all valid: {not bad}, "
      f"pairs per bid: min {min(sizes)} max {max(sizes)}")

one = result.bids[18]
print("\nhour 18 bid:")
for lam, q in zip(one.prices, one.quantities):
    print(f"  at {lam:8.2f} $/MWh -> {q:+.3f} MW")
print(f"  floor {one.p_floor:+.3f} MW below {one.prices[0]:.2f}")
