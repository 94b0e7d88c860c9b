"""What the policy actually sees: the 15-dimensional observation.

Two slots encode the clock, twelve summarize price history through DFT
amplitude/phase pairs (6-hour and 4-day windows), and the last slot is
normalized state of charge. No raw price enters the observation; the
clearing price reaches only the bid network, as its query point.
"""

import numpy as np

from nnbid import (EssParams, PriceHistory, SynthSpec, build_observation,
                   encode_time, synth_prices)

params = EssParams(4.0, 1.0)
series = synth_prices(seed=3, days=6, spec=SynthSpec(daily_amplitude=45.0))

print("clock encoding walks the unit circle:")
for h in (0.0, 6.0, 12.0, 18.0):
    s, c = encode_time(h)
    print(f"  {h:4.1f}h -> sin {s:+.3f} cos {c:+.3f}")

# seed the history with the first 4 days, then observe at day 5, 08:00
history = PriceHistory(fill=series.values.mean(), seed_values=series.values[:4 * 288])
obs = build_observation(8.0, history, soc=1.0, params=params)

labels = (["time sin", "time cos"]
          + [f"6h bin{k} {w}" for k in (1, 2, 3) for w in ("amp", "phase")]
          + [f"4d bin{k} {w}" for k in (1, 2, 3) for w in ("amp", "phase")]
          + ["soc"])
print("\nobservation at day 5, 08:00, soc 1.0 MWh:")
for name, val in zip(labels, obs):
    print(f"  {name:12s} {val:+.4f}")

# the 4d bins cover 96h/48h/32h periods: multi-day drift, not the daily
# cycle itself (that would be bin 4); intra-day movement rides the 6h window
amps_4d = obs[8:14:2]
print(f"\n4d amplitudes by bin: {np.round(amps_4d, 4)}")

# constant history carries zero amplitude by construction
flat = PriceHistory(fill=42.0)
obs_flat = build_observation(8.0, flat, soc=1.0, params=params)
print(f"\nflat-history amplitudes: {np.abs(obs_flat[2:14:2]).max():.2e}")
