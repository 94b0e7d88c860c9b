"""Vectorized 5-minute market environments over a fixed price series.

Each environment tracks (position, SoC) and steps through the series with
wrap-around. Episodes are simulated days: the done flag rises at every day
boundary, and SoC carries across episodes so the fleet explores a realistic
range of states. Environments start offset by whole days to decorrelate.
"""

import numpy as np

from .data import INTERVALS_PER_DAY
from .ess import EssParams, clamp_power_arr, step_soc_arr
from .features import SeriesObservationBuilder
from .market import net_income_arr
from .policy import ReferenceLevels, discretize


class VecMarketEnv:
    """n_envs independent storage-arbitrage environments on one series.

    When `levels` is set, the requested power is snapped to the reference
    levels before the feasibility clamp; the reward always settles the
    delivered (clamped) power, so no shaping leaks in.
    """

    def __init__(self, values: np.ndarray, params: EssParams, n_envs: int,
                 levels: ReferenceLevels | None = None):
        values = np.asarray(values, dtype=float)
        if n_envs < 1:
            raise ValueError("need at least one environment")
        self.values = values
        self.params = params
        self.n_envs = n_envs
        self.levels = levels
        self.builder = SeriesObservationBuilder(values, params)
        self.n = len(values)
        self.n_days = self.n // INTERVALS_PER_DAY
        self.pos = None
        self.soc = None

    def reset(self) -> np.ndarray:
        """Day-offset starts, SoC at half capacity; returns observations."""
        start_days = (np.arange(self.n_envs) * self.n_days) // self.n_envs
        self.pos = start_days * INTERVALS_PER_DAY
        self.soc = np.full(self.n_envs, self.params.capacity_mwh / 2.0)
        return self._obs()

    def _obs(self) -> np.ndarray:
        return self.builder.observations(self.pos, self.soc)

    def current_prices(self) -> np.ndarray:
        return self.values[self.pos % self.n]

    def step(self, requested_power: np.ndarray):
        """Advance one 5-minute interval.

        Returns (next_obs, rewards, dones, delivered_power).
        """
        if self.pos is None:
            raise RuntimeError("reset() before step()")
        prices = self.current_prices()
        p = np.asarray(requested_power, dtype=float)
        if self.levels is not None:
            p = discretize(p, self.levels, self.params)
        delivered = clamp_power_arr(p, self.soc, self.params)
        rewards = net_income_arr(prices, delivered, self.params)
        self.soc = step_soc_arr(self.soc, delivered, self.params)
        self.pos = self.pos + 1
        dones = (self.pos % INTERVALS_PER_DAY) == 0
        return self._obs(), rewards, dones, delivered
