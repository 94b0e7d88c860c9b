"""Energy storage physics: state of charge, feasibility limits, degradation cost.

Powers are signed at the grid side: discharging positive, charging negative.
One step covers tau hours (default 5 minutes).
"""

from dataclasses import dataclass

import numpy as np

SOC_TOL = 1e-12


class FeasibilityError(ValueError):
    """A dispatch would push the state of charge out of [0, capacity]."""


@dataclass(frozen=True)
class EssParams:
    capacity_mwh: float
    p_max: float
    eta_c: float = 0.95
    eta_d: float = 0.95
    lambda_dep: float = 10.0
    tau: float = 1.0 / 12.0

    def __post_init__(self):
        if self.capacity_mwh <= 0:
            raise ValueError("capacity_mwh must be positive")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        if not (0.0 < self.eta_c <= 1.0) or not (0.0 < self.eta_d <= 1.0):
            raise ValueError("efficiencies must lie in (0, 1]")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.lambda_dep < 0:
            raise ValueError("lambda_dep must be nonnegative")

    @property
    def p_min(self) -> float:
        return -self.p_max


@dataclass(frozen=True)
class EssState:
    soc: float

    def check(self, params: EssParams):
        if not (-SOC_TOL <= self.soc <= params.capacity_mwh + SOC_TOL):
            raise ValueError(f"soc {self.soc} outside [0, {params.capacity_mwh}]")


@dataclass(frozen=True)
class PowerDispatch:
    """Complementary charge/discharge pair; at most one side nonzero."""

    p_c: float = 0.0
    p_d: float = 0.0

    def __post_init__(self):
        if self.p_c < 0 or self.p_d < 0:
            raise ValueError("p_c and p_d must be nonnegative")
        if self.p_c * self.p_d != 0.0:
            raise ValueError("simultaneous charge and discharge is not allowed")

    @property
    def p(self) -> float:
        """Signed net power, discharging positive."""
        return self.p_d - self.p_c


def dispatch_from_signed(p: float, params: EssParams) -> PowerDispatch:
    """Split a signed power into the complementary (p_c, p_d) pair."""
    if abs(p) > params.p_max + SOC_TOL:
        raise ValueError(f"|p|={abs(p)} exceeds p_max={params.p_max}")
    if p >= 0:
        return PowerDispatch(p_c=0.0, p_d=p)
    return PowerDispatch(p_c=-p, p_d=0.0)


def feasible_range(state: EssState, params: EssParams) -> tuple[float, float]:
    """Signed power interval that keeps SoC inside [0, capacity] for one step.

    Any power in the returned (p_lo, p_hi) is also within the converter
    rating, and the interval always contains 0.
    """
    p_hi = min(params.p_max, params.eta_d * state.soc / params.tau)
    p_lo = max(-params.p_max, -(params.capacity_mwh - state.soc) / (params.tau * params.eta_c))
    return p_lo, p_hi


def step_soc(state: EssState, dispatch: PowerDispatch, params: EssParams) -> EssState:
    """Advance SoC by one step of the charge/discharge balance."""
    p_lo, p_hi = feasible_range(state, params)
    p = dispatch.p
    if p < p_lo - 1e-9 or p > p_hi + 1e-9:
        raise FeasibilityError(f"power {p} outside feasible range ({p_lo}, {p_hi}) at soc {state.soc}")
    soc = state.soc + params.tau * (params.eta_c * dispatch.p_c - dispatch.p_d / params.eta_d)
    # absorb rounding at the boundary only; larger violations were caught above
    soc = min(max(soc, 0.0), params.capacity_mwh)
    return EssState(soc=soc)


def degradation_cost(dispatch: PowerDispatch, params: EssParams) -> float:
    """Wear cost of moving |p| MW for one step, in $."""
    return params.tau * params.lambda_dep * abs(dispatch.p)


# Array versions used in the vectorized environment hot path.
# Semantics match the scalar functions above element by element.

def feasible_range_arr(soc: np.ndarray, params: EssParams) -> tuple[np.ndarray, np.ndarray]:
    p_hi = np.minimum(params.p_max, params.eta_d * soc / params.tau)
    p_lo = np.maximum(-params.p_max, -(params.capacity_mwh - soc) / (params.tau * params.eta_c))
    return p_lo, p_hi


def clamp_power_arr(p: np.ndarray, soc: np.ndarray, params: EssParams) -> np.ndarray:
    p_lo, p_hi = feasible_range_arr(soc, params)
    return np.clip(p, p_lo, p_hi)


def step_soc_arr(soc: np.ndarray, p: np.ndarray, params: EssParams) -> np.ndarray:
    p_c = np.maximum(-p, 0.0)
    p_d = np.maximum(p, 0.0)
    out = soc + params.tau * (params.eta_c * p_c - p_d / params.eta_d)
    return np.clip(out, 0.0, params.capacity_mwh)
