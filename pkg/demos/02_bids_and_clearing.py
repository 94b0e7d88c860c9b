"""Build a step-function bid by hand and watch it clear.

A bid is at most 10 (price, quantity) pairs forming a non-decreasing step
supply function: below the first price the market clears the floor quantity
(maximal charging), and each breakpoint is left-closed, so a price exactly
on a breakpoint clears that pair's quantity.
"""

import numpy as np

from nnbid import (BidCurve, EssParams, ZeroBandAction, clear_bid,
                   clear_bid_many, validate_bid, zero_band_to_bid)

params = EssParams(4.0, 1.0)

bid = BidCurve(prices=[15.0, 40.0, 90.0],
               quantities=[-0.2, 0.5, 1.0],
               p_floor=-1.0)
print("issues:", validate_bid(bid, params))

for lam in (-5.0, 14.999, 15.0, 39.0, 40.0, 200.0):
    print(f"price {lam:8.3f} -> clears {clear_bid(bid, lam, params):+.2f} MW")

# the vectorized form sweeps a whole price grid at once
grid = np.linspace(0.0, 100.0, 11)
print("\ngrid:   ", grid)
print("cleared:", clear_bid_many(bid, grid))

# a zero-band action is the simplest bid of all: charge below one threshold,
# discharge above another, do nothing in between
act = ZeroBandAction(lambda_c=12.0, p_c=1.0, lambda_d=60.0, p_d=1.0)
simple = zero_band_to_bid(act, params)
print("\ntwo-threshold action as a bid:")
print("  prices   ", simple.prices)
print("  quantities", simple.quantities, "floor", simple.p_floor)
for lam in (5.0, 12.0, 12.001, 59.0, 60.0):
    print(f"  price {lam:8.3f} -> {clear_bid(simple, lam, params):+.2f} MW")
