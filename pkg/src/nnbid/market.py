"""Bid curves, price-taker clearing, and settlement.

A bid is a monotone step supply function given by up to 10 price-quantity
pairs. Below the first price the market clears the floor quantity p_min
(maximal charging); at or above price i (and below price i+1) it clears
quantity i. Breakpoints are left-closed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ess import EssParams

MAX_PAIRS = 10


@dataclass(frozen=True)
class BidCurve:
    prices: np.ndarray
    quantities: np.ndarray
    p_floor: float

    def __post_init__(self):
        object.__setattr__(self, "prices", np.asarray(self.prices, dtype=float))
        object.__setattr__(self, "quantities", np.asarray(self.quantities, dtype=float))
        if self.prices.shape != self.quantities.shape or self.prices.ndim != 1:
            raise ValueError("prices and quantities must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return len(self.prices)

    def to_json_dict(self) -> dict:
        return {
            "pairs": [
                {"price": float(l), "quantity": float(p)}
                for l, p in zip(self.prices, self.quantities)
            ],
            "p_floor": float(self.p_floor),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "BidCurve":
        pairs = d["pairs"]
        return cls(
            prices=np.array([x["price"] for x in pairs], dtype=float),
            quantities=np.array([x["quantity"] for x in pairs], dtype=float),
            p_floor=float(d["p_floor"]),
        )


@dataclass(frozen=True)
class Settlement:
    cleared_power: float
    market_payment: float
    degradation: float

    @property
    def net_income(self) -> float:
        return self.market_payment - self.degradation


@dataclass(frozen=True)
class ZeroBandAction:
    """Charge/discharge threshold pairs with a zero band in between.

    Prices at or below lambda_c charge at p_c, prices at or above lambda_d
    discharge at p_d, anything in the open band is zero output.
    """

    lambda_c: float
    p_c: float
    lambda_d: float
    p_d: float

    def __post_init__(self):
        if self.lambda_c > self.lambda_d:
            raise ValueError("lambda_c must not exceed lambda_d")
        if self.p_c < 0 or self.p_d < 0:
            raise ValueError("quantities must be nonnegative")


def validate_bid(bid: BidCurve, params: EssParams) -> list[str]:
    """Check bid invariants; returns a list of violation messages (empty = OK)."""
    issues = []
    n = len(bid)
    if n > MAX_PAIRS:
        issues.append(f"too many pairs: {n} > {MAX_PAIRS}")
    if n > 1:
        dp = np.diff(bid.prices)
        if np.any(dp <= 0):
            i = int(np.argmax(dp <= 0))
            issues.append(f"prices not strictly increasing at pair {i + 1}")
        dq = np.diff(bid.quantities)
        if np.any(dq < 0):
            i = int(np.argmax(dq < 0))
            issues.append(f"quantities decrease at pair {i + 1}")
    if n > 0:
        if np.min(bid.quantities) < params.p_min - 1e-12 or np.max(bid.quantities) > params.p_max + 1e-12:
            issues.append("quantity outside [p_min, p_max]")
        if not np.all(np.isfinite(bid.prices)) or not np.all(np.isfinite(bid.quantities)):
            issues.append("non-finite entries")
    if not (params.p_min - 1e-12 <= bid.p_floor <= params.p_max + 1e-12):
        issues.append("p_floor outside [p_min, p_max]")
    return issues


def clear_bid(bid: BidCurve, price: float, params: EssParams) -> float:
    """Cleared power of a price-taker at the given clearing price."""
    issues = validate_bid(bid, params)
    if issues:
        raise ValueError("invalid bid: " + "; ".join(issues))
    return float(clear_bid_many(bid, np.asarray([price]))[0])


def clear_bid_many(bid: BidCurve, prices: np.ndarray) -> np.ndarray:
    """Vectorized clearing; assumes the bid is valid."""
    prices = np.asarray(prices, dtype=float)
    if len(bid) == 0:
        return np.full(prices.shape, bid.p_floor)
    idx = np.searchsorted(bid.prices, prices, side="right") - 1
    out = np.where(idx < 0, bid.p_floor, bid.quantities[np.maximum(idx, 0)])
    return out


def eval_zero_band(action: ZeroBandAction, price: float) -> float:
    """Signed power at a price: discharge branch checked first, then charge."""
    if price >= action.lambda_d:
        return action.p_d
    if price <= action.lambda_c:
        return -action.p_c
    return 0.0


def eval_zero_band_many(lam_c, p_c, lam_d, p_d, prices):
    """Array version of eval_zero_band; all inputs broadcast together."""
    out = np.where(prices >= lam_d, p_d, np.where(prices <= lam_c, -p_c, 0.0))
    return out


def zero_band_to_bid(action: ZeroBandAction, params: EssParams) -> BidCurve:
    """Convert a zero-band action to a bid clearing the same power at every price.

    The step out of the charging level happens just above lambda_c (the band
    is closed at lambda_c), so the breakpoint is the next float up.
    """
    prices, quants = [], []
    lam_zero = math.nextafter(action.lambda_c, math.inf)
    if lam_zero < action.lambda_d:
        prices.append(lam_zero)
        quants.append(0.0)
    prices.append(action.lambda_d)
    quants.append(action.p_d)
    return BidCurve(prices=np.array(prices), quantities=np.array(quants), p_floor=-action.p_c)


def settle(price: float, cleared: float, params: EssParams) -> Settlement:
    """Market payment minus degradation for one interval at the cleared power."""
    if abs(cleared) > params.p_max + 1e-9:
        raise ValueError(f"cleared power {cleared} exceeds rating {params.p_max}")
    return Settlement(
        cleared_power=cleared,
        market_payment=params.tau * price * cleared,
        degradation=params.tau * params.lambda_dep * abs(cleared),
    )


def net_income_arr(prices: np.ndarray, cleared: np.ndarray, params: EssParams) -> np.ndarray:
    """Vectorized net income, tau * (price * p - lambda_dep * |p|)."""
    return params.tau * (prices * cleared - params.lambda_dep * np.abs(cleared))
