from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from nnbid.data import (INTERVALS_PER_DAY, PriceSeries, SynthSpec, daily_profile,
                        load_csv, save_csv, split, synth_components, synth_prices)

UTC = timezone.utc


def write_rows(path, rows):
    with open(path, "w") as f:
        f.write("timestamp,lmp\n")
        for ts, v in rows:
            f.write(f"{ts.isoformat()},{v}\n")


def grid(start, n):
    return [start + timedelta(minutes=5 * i) for i in range(n)]


def test_series_basics():
    s = PriceSeries(start=datetime(2024, 1, 1, tzinfo=UTC), values=np.arange(576.0))
    assert len(s) == 576 and s.n_days == 2
    assert s.timestamp(12).minute == 0 and s.timestamp(12).hour == 1
    b = s.slice_days(1, 1)
    assert b.values[0] == 288.0 and b.start.day == 2


def test_series_rejects_nonfinite():
    with pytest.raises(ValueError):
        PriceSeries(start=datetime(2024, 1, 1, tzinfo=UTC),
                    values=np.array([1.0, np.nan]))


def test_load_csv_round_trip(tmp_path):
    s = synth_prices(11, 2)
    p = tmp_path / "prices.csv"
    save_csv(s, p)
    loaded, gaps = load_csv(p)
    assert gaps == []
    assert loaded.start == s.start
    assert np.array_equal(loaded.values, s.values)


def test_load_csv_requires_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,price\n2024-01-01T00:00:00+00:00,10\n")
    with pytest.raises(ValueError, match="timestamp"):
        load_csv(p)


def test_load_csv_malformed_row_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    ts = grid(datetime(2024, 1, 1, tzinfo=UTC), 3)
    p.write_text("timestamp,lmp\n"
                 f"{ts[0].isoformat()},10\n"
                 f"{ts[1].isoformat()},oops\n"
                 f"{ts[2].isoformat()},12\n")
    with pytest.raises(ValueError, match="line 3"):
        load_csv(p)


def test_load_csv_sorts_unsorted_rows(tmp_path):
    start = datetime(2024, 1, 1, tzinfo=UTC)
    rows = [(t, float(i)) for i, t in enumerate(grid(start, 2 * INTERVALS_PER_DAY))]
    shuffled = rows[::2] + rows[1::2]
    p = tmp_path / "u.csv"
    write_rows(p, shuffled)
    loaded, _ = load_csv(p)
    assert np.array_equal(loaded.values, np.arange(2 * INTERVALS_PER_DAY, dtype=float))


def test_load_csv_duplicate_timestamp_errors(tmp_path):
    start = datetime(2024, 1, 1, tzinfo=UTC)
    rows = [(t, 1.0) for t in grid(start, INTERVALS_PER_DAY)]
    rows.append((rows[5][0], 2.0))
    p = tmp_path / "d.csv"
    write_rows(p, rows)
    with pytest.raises(ValueError, match="duplicate"):
        load_csv(p)


def test_load_csv_interpolates_short_gap(tmp_path):
    start = datetime(2024, 1, 1, tzinfo=UTC)
    rows = [(t, float(i)) for i, t in enumerate(grid(start, INTERVALS_PER_DAY))]
    removed = rows[10:13]          # 15-minute hole
    del rows[10:13]
    p = tmp_path / "g.csv"
    write_rows(p, rows)
    loaded, gaps = load_csv(p)
    assert len(loaded) == INTERVALS_PER_DAY
    assert len(gaps) == 1 and gaps[0]["filled"] == 3
    # linear fill reproduces the deleted ramp exactly here
    assert loaded.values[10] == pytest.approx(removed[0][1])
    assert loaded.values[12] == pytest.approx(removed[2][1])


def test_load_csv_long_gap_errors(tmp_path):
    start = datetime(2024, 1, 1, tzinfo=UTC)
    rows = [(t, 1.0) for t in grid(start, 2 * INTERVALS_PER_DAY)]
    del rows[20:40]                # 100-minute hole
    p = tmp_path / "g.csv"
    write_rows(p, rows)
    with pytest.raises(ValueError, match="exceeds 1 hour"):
        load_csv(p)


def test_load_csv_off_grid_timestamp_errors(tmp_path):
    start = datetime(2024, 1, 1, tzinfo=UTC)
    rows = [(start, 1.0), (start + timedelta(minutes=7), 2.0)]
    p = tmp_path / "o.csv"
    write_rows(p, rows)
    with pytest.raises(ValueError, match="grid"):
        load_csv(p)


def test_load_csv_trims_to_whole_utc_days(tmp_path):
    # starts at 23:00, runs one day + 2 hours: keep exactly the middle day
    start = datetime(2024, 1, 1, 23, 0, tzinfo=UTC)
    n = 12 + INTERVALS_PER_DAY + 24
    rows = [(t, float(i)) for i, t in enumerate(grid(start, n))]
    p = tmp_path / "t.csv"
    write_rows(p, rows)
    loaded, _ = load_csv(p)
    assert len(loaded) == INTERVALS_PER_DAY
    assert loaded.start == datetime(2024, 1, 2, tzinfo=UTC)
    assert loaded.values[0] == 12.0


def test_daily_profile_shape():
    hours = np.arange(0, 24, 1 / 12)
    prof = daily_profile(hours)
    assert prof.mean() == pytest.approx(0.0, abs=1e-12)
    assert prof.max() == pytest.approx(1.0)
    # evening peak dominates, morning bump present, night is the trough
    evening = prof[(hours > 17) & (hours < 20)].max()
    morning = prof[(hours > 7) & (hours < 10)].max()
    night = prof[(hours > 1) & (hours < 5)].max()
    assert evening > morning > night


def test_synth_deterministic():
    a = synth_prices(42, 5)
    b = synth_prices(42, 5)
    assert np.array_equal(a.values, b.values)
    c = synth_prices(43, 5)
    assert not np.array_equal(a.values, c.values)


def test_synth_components_structure():
    spec = SynthSpec()
    parts = synth_components(9, 100, spec)
    n = 100 * INTERVALS_PER_DAY
    assert all(len(parts[k]) == n for k in ("shape", "noise", "spikes"))
    # spike count is binomial around rate*days
    count = parts["spike_mask"].sum()
    expect = spec.spike_rate_per_day * 100
    assert abs(count - expect) < 4 * np.sqrt(expect)
    assert np.all(parts["spikes"][parts["spike_mask"]] > 0)
    assert np.all(parts["spikes"][~parts["spike_mask"]] == 0)
    # AR(1) noise is stationary-ish around its configured scale
    sd = parts["noise"].std()
    assert 0.5 * spec.noise_sigma < sd < 1.5 * spec.noise_sigma


def test_synth_no_noise_is_pure_shape():
    spec = SynthSpec(noise_sigma=0.0, spike_rate_per_day=0.0)
    s = synth_prices(1, 2, spec)
    first, second = s.values[:INTERVALS_PER_DAY], s.values[INTERVALS_PER_DAY:]
    assert np.array_equal(first, second)
    assert s.values.mean() == pytest.approx(spec.base)


def test_split_chronological():
    s = synth_prices(3, 10)
    tr, te = split(s, 7, 3)
    assert tr.n_days == 7 and te.n_days == 3
    assert np.array_equal(np.concatenate([tr.values, te.values]), s.values)
    assert te.start == tr.timestamp(len(tr))
    with pytest.raises(ValueError):
        split(s, 8, 3)


def test_save_csv_bit_identical(tmp_path):
    s = synth_prices(12, 3)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_csv(s, p1)
    save_csv(synth_prices(12, 3), p2)
    assert p1.read_bytes() == p2.read_bytes()
