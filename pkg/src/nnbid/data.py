"""Price series ingestion, synthetic generation, and chronological splitting.

All timestamps are UTC; a day is 288 consecutive 5-minute intervals.
"""

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

INTERVALS_PER_DAY = 288
INTERVAL_MINUTES = 5


@dataclass(frozen=True)
class PriceSeries:
    start: datetime
    values: np.ndarray
    interval_minutes: int = INTERVAL_MINUTES

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.start.tzinfo is None:
            object.__setattr__(self, "start", self.start.replace(tzinfo=timezone.utc))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("price series contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_days(self) -> int:
        return len(self.values) // INTERVALS_PER_DAY

    def timestamp(self, i: int) -> datetime:
        return self.start + timedelta(minutes=self.interval_minutes * i)

    def slice_days(self, first_day: int, n_days: int) -> "PriceSeries":
        a = first_day * INTERVALS_PER_DAY
        b = (first_day + n_days) * INTERVALS_PER_DAY
        if b > len(self.values):
            raise ValueError("slice exceeds series length")
        return PriceSeries(start=self.timestamp(a), values=self.values[a:b].copy())

    def to_json_dict(self) -> dict:
        return {
            "start": self.start.isoformat(),
            "interval_minutes": self.interval_minutes,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PriceSeries":
        return cls(
            start=datetime.fromisoformat(d["start"]),
            values=np.array(d["values"], dtype=float),
            interval_minutes=int(d.get("interval_minutes", INTERVAL_MINUTES)),
        )


def _parse_timestamp(text: str, line_no: int) -> datetime:
    try:
        ts = datetime.fromisoformat(text.strip())
    except ValueError as e:
        raise ValueError(f"line {line_no}: bad timestamp {text!r}: {e}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_csv(path) -> tuple[PriceSeries, list[dict]]:
    """Ingest a (timestamp, lmp) CSV into a day-aligned 5-minute series.

    Rows may arrive unsorted. Gaps up to one hour are filled by linear
    interpolation and reported; longer gaps and duplicate timestamps are
    errors. The result is trimmed to whole days starting at a UTC midnight.

    Returns (series, gap_report) where each report entry names the gap
    bounds and how many values were interpolated.
    """
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "timestamp" not in reader.fieldnames or "lmp" not in reader.fieldnames:
            raise ValueError(f"{path}: header must contain 'timestamp' and 'lmp' columns")
        for line_no, row in enumerate(reader, start=2):
            ts = _parse_timestamp(row["timestamp"], line_no)
            try:
                value = float(row["lmp"])
            except (TypeError, ValueError):
                raise ValueError(f"line {line_no}: bad lmp value {row['lmp']!r}") from None
            if not math.isfinite(value):
                raise ValueError(f"line {line_no}: non-finite lmp value")
            rows.append((ts, value))
    if not rows:
        raise ValueError(f"{path}: no data rows")

    rows.sort(key=lambda r: r[0])
    step = timedelta(minutes=INTERVAL_MINUTES)
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if a == b:
            raise ValueError(f"duplicate timestamp {a.isoformat()}")
        if (b - a) % step != timedelta(0):
            raise ValueError(f"timestamp {b.isoformat()} not on the 5-minute grid from {a.isoformat()}")

    values, gaps = [rows[0][1]], []
    for (a, va), (b, vb) in zip(rows, rows[1:]):
        missing = (b - a) // step - 1
        if missing > 0:
            if b - a > timedelta(hours=1):
                raise ValueError(
                    f"gap of {b - a} between {a.isoformat()} and {b.isoformat()} exceeds 1 hour"
                )
            for j in range(1, missing + 1):
                values.append(va + (vb - va) * j / (missing + 1))
            gaps.append({"after": a.isoformat(), "before": b.isoformat(), "filled": int(missing)})
        values.append(vb)

    start = rows[0][0]
    values = np.asarray(values)
    # trim the head to the first UTC midnight, then the tail to whole days
    minutes_into_day = start.hour * 60 + start.minute
    lead = 0 if minutes_into_day == 0 else (24 * 60 - minutes_into_day) // INTERVAL_MINUTES
    if lead >= len(values):
        raise ValueError("series shorter than one aligned day")
    values = values[lead:]
    values = values[: (len(values) // INTERVALS_PER_DAY) * INTERVALS_PER_DAY]
    if len(values) == 0:
        raise ValueError("series shorter than one aligned day")
    return PriceSeries(start=start + lead * step, values=values), gaps


def save_csv(series: PriceSeries, path):
    """Write a series in the same (timestamp, lmp) format load_csv ingests."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["timestamp", "lmp"])
        for i, v in enumerate(series.values):
            writer.writerow([series.timestamp(i).isoformat(), repr(float(v))])


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic 5-minute price generator."""

    base: float = 35.0
    daily_amplitude: float = 30.0
    noise_sigma: float = 12.0
    noise_rho: float = 0.9
    spike_rate_per_day: float = 1.5
    spike_mag_mean: float = 150.0

    def to_json_dict(self) -> dict:
        return {
            "base": self.base,
            "daily_amplitude": self.daily_amplitude,
            "noise_sigma": self.noise_sigma,
            "noise_rho": self.noise_rho,
            "spike_rate_per_day": self.spike_rate_per_day,
            "spike_mag_mean": self.spike_mag_mean,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthSpec":
        return cls(**d)


def daily_profile(hours: np.ndarray) -> np.ndarray:
    """Two-peak daily shape, zero mean, unit maximum."""
    def bump(center, width):
        d = np.abs(hours - center)
        d = np.minimum(d, 24.0 - d)
        return np.exp(-0.5 * (d / width) ** 2)

    raw = 0.55 * bump(8.5, 2.0) + 1.0 * bump(18.5, 2.5)
    centered = raw - raw.mean()
    return centered / centered.max()


def synth_components(seed: int, days: int, spec: SynthSpec) -> dict:
    """Deterministic pieces of the synthetic series: shape, noise, spikes."""
    n = days * INTERVALS_PER_DAY
    rng = np.random.default_rng(seed)
    hours = (np.arange(n) % INTERVALS_PER_DAY) * (INTERVAL_MINUTES / 60.0)
    shape = spec.base + spec.daily_amplitude * daily_profile(hours)

    noise = np.zeros(n)
    if spec.noise_sigma > 0:
        innov = rng.normal(0.0, spec.noise_sigma * math.sqrt(1.0 - spec.noise_rho**2), size=n)
        noise[0] = rng.normal(0.0, spec.noise_sigma)
        for t in range(1, n):
            noise[t] = spec.noise_rho * noise[t - 1] + innov[t]

    spike_mask = rng.random(n) < spec.spike_rate_per_day / INTERVALS_PER_DAY
    spikes = np.where(spike_mask, rng.exponential(spec.spike_mag_mean, size=n), 0.0)
    return {"shape": shape, "noise": noise, "spikes": spikes, "spike_mask": spike_mask}


def synth_prices(seed: int, days: int, spec: SynthSpec | None = None,
                 start: datetime | None = None) -> PriceSeries:
    """Generate a synthetic 5-minute price series, reproducible under seed."""
    spec = spec or SynthSpec()
    parts = synth_components(seed, days, spec)
    values = parts["shape"] + parts["noise"] + parts["spikes"]
    if start is None:
        start = datetime(2024, 1, 1, tzinfo=timezone.utc)
    return PriceSeries(start=start, values=values)


def split(series: PriceSeries, train_days: int, test_days: int) -> tuple[PriceSeries, PriceSeries]:
    """Chronological train/test split on day boundaries; no shuffling."""
    if train_days <= 0 or test_days <= 0:
        raise ValueError("train_days and test_days must be positive")
    if train_days + test_days > series.n_days:
        raise ValueError(
            f"requested {train_days}+{test_days} days but series has {series.n_days}"
        )
    return series.slice_days(0, train_days), series.slice_days(train_days, test_days)
