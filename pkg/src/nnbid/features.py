"""Observation encoding: clock, spectral price-history features, and SoC.

The observation is 15 reals: 2 for time of day on the unit circle, 6 for
the past 6 hours of 5-minute prices, 6 for the past 4 days of hourly mean
prices (amplitude and phase of the three lowest non-constant DFT bins per
window), and 1 for normalized SoC.
"""

from dataclasses import dataclass

import numpy as np

from .ess import EssParams

WINDOW_6H = 72            # 5-minute intervals in 6 hours
WINDOW_4D = 96            # hourly means in 4 days
LOOKBACK = 4 * 288        # raw intervals needed for the 4-day window
N_BINS = 3
OBS_DIM = 15
AMP_SCALE = 100.0         # $/MWh scale applied to amplitudes fed to the network

# index masks for the amplitude slots inside the 15-vector
_AMP_IDX = np.array([2, 4, 6, 8, 10, 12])


def _dft_basis(n: int) -> np.ndarray:
    k = np.arange(1, N_BINS + 1)
    t = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(t, k) / n)  # (n, N_BINS)

_BASIS_6H = _dft_basis(WINDOW_6H)
_BASIS_4D = _dft_basis(WINDOW_4D)


def encode_time(hour_of_day) -> np.ndarray:
    """Sinusoidal clock encoding on the unit circle; input in [0, 24)."""
    ang = 2.0 * np.pi * np.asarray(hour_of_day, dtype=float) / 24.0
    return np.stack([np.sin(ang), np.cos(ang)], axis=-1)


def _window_features(window: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Interleaved (amplitude_k / N, angle_k) for bins k = 1..3; batched."""
    window = np.asarray(window, dtype=float)
    x = window @ basis  # (..., N_BINS) complex
    amp = np.abs(x) / window.shape[-1]
    ang = np.where(amp == 0.0, 0.0, np.angle(x))
    out = np.empty(window.shape[:-1] + (2 * N_BINS,))
    out[..., 0::2] = amp
    out[..., 1::2] = ang
    return out


def encode_history(recent_6h: np.ndarray, recent_4d_hourly: np.ndarray) -> np.ndarray:
    """Spectral encoding of both history windows, 12 reals.

    Both windows are chronological (oldest first). Shapes must be (..., 72)
    and (..., 96); leading batch dimensions broadcast through.
    """
    recent_6h = np.asarray(recent_6h, dtype=float)
    recent_4d_hourly = np.asarray(recent_4d_hourly, dtype=float)
    if recent_6h.shape[-1] != WINDOW_6H:
        raise ValueError(f"6h window must have {WINDOW_6H} entries, got {recent_6h.shape[-1]}")
    if recent_4d_hourly.shape[-1] != WINDOW_4D:
        raise ValueError(f"4d window must have {WINDOW_4D} entries, got {recent_4d_hourly.shape[-1]}")
    return np.concatenate(
        [_window_features(recent_6h, _BASIS_6H), _window_features(recent_4d_hourly, _BASIS_4D)],
        axis=-1,
    )


class PriceHistory:
    """Ring buffer of the most recent 4 days of 5-minute prices.

    Starts filled with a constant prior so the windows are defined during
    warm-up; a constant window has zero amplitudes by construction.
    """

    def __init__(self, fill: float = 0.0, seed_values=None):
        self._buf = np.full(LOOKBACK, float(fill))
        if seed_values is not None:
            seed_values = np.asarray(seed_values, dtype=float)
            k = min(len(seed_values), LOOKBACK)
            if k > 0:
                self._buf[LOOKBACK - k:] = seed_values[len(seed_values) - k:]

    def append(self, price: float):
        self._buf[:-1] = self._buf[1:]
        self._buf[-1] = float(price)

    def window_6h(self) -> np.ndarray:
        return self._buf[-WINDOW_6H:].copy()

    def window_4d_hourly(self) -> np.ndarray:
        return self._buf.reshape(WINDOW_4D, 12).mean(axis=1)


def build_observation(hour_of_day: float, history: PriceHistory, soc: float,
                      params: EssParams, amp_scale: float = AMP_SCALE) -> np.ndarray:
    """Concatenate [time(2), history(12), soc_norm(1)]; amplitudes scaled."""
    obs = np.empty(OBS_DIM)
    obs[0:2] = encode_time(hour_of_day)
    obs[2:14] = encode_history(history.window_6h(), history.window_4d_hourly())
    obs[_AMP_IDX] /= amp_scale
    obs[14] = soc / params.capacity_mwh
    return obs


class SeriesObservationBuilder:
    """Batched observation builder over a fixed day-aligned price series.

    History is read by index arithmetic modulo the series length, which
    matches the training environments' wrap-around semantics. Hourly means
    come from prefix sums; they agree with PriceHistory to float tolerance.
    """

    def __init__(self, values: np.ndarray, params: EssParams, amp_scale: float = AMP_SCALE):
        values = np.asarray(values, dtype=float)
        if len(values) % 288 != 0 or len(values) == 0:
            raise ValueError("series length must be a positive multiple of 288")
        if len(values) < LOOKBACK:
            raise ValueError("series must cover at least 4 days")
        self.n = len(values)
        self.params = params
        self.amp_scale = amp_scale
        self._doubled = np.concatenate([values, values])
        self._prefix = np.concatenate([[0.0], np.cumsum(self._doubled)])
        self._hour_offsets = np.arange(0, LOOKBACK + 1, 12)  # 97 prefix taps

    def observations(self, positions: np.ndarray, soc: np.ndarray) -> np.ndarray:
        """Observations for interval indices `positions` with states `soc`."""
        t = np.asarray(positions) % self.n
        base = t + self.n  # index into the doubled series
        win6 = self._doubled[base[:, None] - WINDOW_6H + np.arange(WINDOW_6H)]
        taps = self._prefix[(base - LOOKBACK)[:, None] + self._hour_offsets]
        win4 = (taps[:, 1:] - taps[:, :-1]) / 12.0
        out = np.empty((len(t), OBS_DIM))
        out[:, 0:2] = encode_time((t % 288) / 12.0)
        out[:, 2:14] = encode_history(win6, win4)
        out[:, _AMP_IDX] /= self.amp_scale
        out[:, 14] = np.asarray(soc) / self.params.capacity_mwh
        return out
