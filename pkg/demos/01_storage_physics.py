"""Walk the storage model through a hand-made afternoon.

Shows the signed power convention (discharge positive), the feasibility
range shrinking as the battery empties, and how degradation eats into the
settled income.
"""

import numpy as np

from nnbid import (EssParams, EssState, dispatch_from_signed, feasible_range,
                   settle, step_soc)

params = EssParams(capacity_mwh=4.0, p_max=1.0)
print("battery:", params)
print("round-trip efficiency:", params.eta_c * params.eta_d)

state = EssState(soc=3.0)
prices = [42.0, 55.0, 110.0, 8.0, -21.0, 35.0]
plan = [0.5, 1.0, 1.0, 0.0, -1.0, 0.8]  # MW at the grid, + = discharge

print(f"\n{'price':>7} {'want':>6} {'can':>14} {'soc':>6} {'income':>8}")
total = 0.0
for lam, p in zip(prices, plan):
    lo, hi = feasible_range(state, params)
    p_ok = float(np.clip(p, lo, hi))
    s = settle(lam, p_ok, params)
    state = step_soc(state, dispatch_from_signed(p_ok, params), params)
    total += s.net_income
    print(f"{lam:7.1f} {p:6.2f} [{lo:5.2f},{hi:5.2f}] {state.soc:6.3f} "
          f"{s.net_income:8.3f}")
print(f"\nnet income over the half hour: {total:.3f}")

# the clamp is exactly what keeps SoC legal: try to discharge an empty battery
empty = EssState(soc=0.0)
lo, hi = feasible_range(empty, params)
print("\nempty battery feasible range:", (lo, hi))

# charging at a negative price is paid for consuming, but degradation still
# charges per MWh moved, so only prices below -lambda_dep are free money
s = settle(-21.0, -1.0, params)
print("charge 1 MW at -21 $/MWh for 5 min:", round(s.net_income, 4),
      "(market payment", round(s.market_payment, 4),
      "degradation", round(s.degradation, 4), ")")
