"""A small PPO run, start to finish, with the training curve printed.

Self-scheduling mode learns a clock strategy here: charge the overnight
trough, discharge the evening peak. Day-long episodes with gamma = 1 and
GAE lambda = 1 give unbiased within-day credit, which this mode needs
since charging pays off only hours later. Reward units are dollars per
day; the curve is the stochastic rollout reward, so it sits below what
the deterministic policy earns.
"""

import numpy as np

from nnbid import (EssParams, SynthSpec, TrainConfig, VecMarketEnv,
                   requested_powers, split, synth_prices, train)

params = EssParams(4.0, 1.0)
series = synth_prices(seed=11, days=16, spec=SynthSpec(daily_amplitude=70.0))
train_series, test_series = split(series, 12, 4)

config = TrainConfig(seed=0, n_envs=32, total_steps=500_000,
                     minibatch_size=2048, gae_lambda=1.0, gamma=1.0,
                     entropy_coef=0.03, lr_actor=6e-4)
print(f"{config.n_updates} updates of {config.n_envs * config.rollout_horizon} steps")

policy, rows = train(config, params, train_series, mode="self")

print("\n update  env_steps  day_reward  actor_loss  clip%")
for r in rows[:: max(1, len(rows) // 12)]:
    print(f" {r['update_index']:6d}  {r['env_steps']:9d}  {r['mean_reward']:10.1f}"
          f"  {r['actor_loss']:10.4f}  {100 * r['clip_fraction']:5.1f}")

# roll the trained policy deterministically over the held-out days
envs = VecMarketEnv(test_series.values, params, n_envs=1)
obs = envs.reset()
total = 0.0
for _ in range(len(test_series.values)):
    means, _ = policy.action_stats(obs)
    obs, reward, _, _ = envs.step(requested_powers(policy, means, envs.current_prices()))
    total += float(reward[0])
print(f"\nheld-out profit over {test_series.n_days} days: {total:.1f}")

# the learned daily rhythm: mean signed power by hour of day
hourly = np.zeros(24)
envs = VecMarketEnv(test_series.values, params, n_envs=1)
obs = envs.reset()
for i in range(len(test_series.values)):
    means, _ = policy.action_stats(obs)
    p = requested_powers(policy, means, envs.current_prices())
    hourly[(i % 288) // 12] += float(p[0])
    obs, _, _, _ = envs.step(p)
hourly /= test_series.n_days * 12
print("\nmean requested MW by hour (negative charges):")
for h in range(0, 24, 3):
    print(f"  {h:02d}:00 " + " ".join(f"{hourly[k]:+.2f}" for k in range(h, h + 3)))
