"""Turning a discrete supply function into a valid bid curve.

A price grid is swept through the policy's discretized supply function,
repaired to be non-decreasing by running maximum, and compressed into at
most 10 (price, quantity) pairs at the upward transitions. Clearing the
resulting bid reproduces the repaired curve at every grid point, exactly.
"""

import numpy as np

from .ess import EssParams
from .market import MAX_PAIRS, BidCurve, clear_bid_many
from .policy import PolicyNetwork, discretize

GRID_SIZE = 512


def price_grid(policy: PolicyNetwork, size: int = GRID_SIZE) -> np.ndarray:
    return np.linspace(policy.price_scale.lo, policy.price_scale.hi, size)


def sweep_supply(policy: PolicyNetwork, obs: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Discretized signed power at every grid price for one observation."""
    if policy.levels is None:
        raise ValueError("policy has no reference levels; retrain first")
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with >= 2 points")
    powers = policy.supply_grid(np.atleast_2d(obs), grid)[0]
    return discretize(powers, policy.levels, policy.params)


def monotone_repair(powers: np.ndarray) -> np.ndarray:
    """Smallest non-decreasing upper envelope: running maximum."""
    return np.maximum.accumulate(np.asarray(powers, dtype=float))


def to_bid_curve(grid: np.ndarray, repaired: np.ndarray, params: EssParams) -> BidCurve:
    """Compress a non-decreasing step curve into price-quantity pairs.

    One pair per upward transition at the leftmost grid price attaining the
    new quantity; below the first pair the bid clears p_min. If the curve
    starts above p_min, a leading pair at the grid's first price keeps the
    on-grid behavior identical.
    """
    grid = np.asarray(grid, dtype=float)
    repaired = np.asarray(repaired, dtype=float)
    if len(grid) != len(repaired):
        raise ValueError("grid and power arrays must align")
    if np.any(np.diff(repaired) < 0):
        raise ValueError("powers must be non-decreasing; repair first")
    prices = []
    quantities = []
    if repaired[0] != params.p_min:
        prices.append(float(grid[0]))
        quantities.append(float(repaired[0]))
    ups = np.nonzero(np.diff(repaired) > 0)[0] + 1
    for i in ups:
        prices.append(float(grid[i]))
        quantities.append(float(repaired[i]))
    if len(prices) > MAX_PAIRS:
        raise AssertionError(
            f"{len(prices)} transitions from {len(np.unique(repaired))} levels; "
            "the candidate set must be capped at 11")
    return BidCurve(prices=tuple(prices), quantities=tuple(quantities),
                    p_floor=params.p_min)


def extract_bid(policy: PolicyNetwork, obs: np.ndarray, grid: np.ndarray) -> BidCurve:
    """sweep -> repair -> compress for one observation."""
    return to_bid_curve(grid, monotone_repair(sweep_supply(policy, obs, grid)),
                        policy.params)


def verify_equivalence(bid: BidCurve, policy: PolicyNetwork, obs: np.ndarray,
                       grid: np.ndarray) -> float:
    """Max |bid clearing - repaired discretized supply| over the grid.

    Zero by construction for bids extracted on the same grid; asserted in
    the pipeline, measured here.
    """
    grid = np.asarray(grid, dtype=float)
    repaired = monotone_repair(sweep_supply(policy, obs, grid))
    cleared = clear_bid_many(bid, grid)
    return float(np.max(np.abs(cleared - repaired)))
