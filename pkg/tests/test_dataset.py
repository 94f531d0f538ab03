import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_weather import dataset
from isac_weather.dataset import ClassBins, WeatherRow, build_batches, epoch_batches, pair_labels
from isac_weather.tensorio import DatasetManifest, ManifestEntry, WeatherLabel

T0 = 1704067200.0  # 2024-01-01T00:00:00Z


def _entry(fid, ts, precip=None, wind=0.0, scenario=None):
    label = None if precip is None else WeatherLabel(precip, wind)
    if scenario is None:
        scenario = "rain" if (precip or 0) > 0 else "no_rain"
    return ManifestEntry(fid, ts, f"frames/{fid}.tns", label, scenario)


def _pools(n_rain, n_dry):
    m = DatasetManifest()
    for i in range(n_dry):
        m.append(_entry(i, T0 + i, 0.0, 5.0))
    for i in range(n_rain):
        m.append(_entry(1000 + i, T0 + 1000 + i, 5.0, 5.0))
    return m


# ----------------------------------------------------------------------------
# weather CSV and pairing
# ----------------------------------------------------------------------------
def test_parse_timestamp_variants():
    assert dataset.parse_timestamp("2024-01-01T00:00:00Z") == T0
    assert dataset.parse_timestamp("2024-01-01T00:00:00") == T0
    assert dataset.parse_timestamp("2024-01-01T01:00:00+01:00") == T0
    assert dataset.parse_timestamp("2024-01-01T00:00:00.250000+00:00") == T0 + 0.25


def test_read_weather_csv(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("timestamp,precipitation_mmh,wind_kmh\n2024-01-01T00:00:00Z,1.5,12\n\n2024-01-01T00:10:00Z,0,3\n")
    rows = dataset.read_weather_csv(p)
    assert rows == [WeatherRow(T0, 1.5, 12.0), WeatherRow(T0 + 600, 0.0, 3.0)]
    p.write_text("timestamp,p,w\n2024-01-01T00:00:00Z,1,1\nyesterday,1,1\n")
    with pytest.raises(ValueError, match="bad timestamp"):
        dataset.read_weather_csv(p)


def test_pairing_nearest_tie_earlier_and_gap():
    rows = [WeatherRow(T0, 0.0, 1.0), WeatherRow(T0 + 100, 4.0, 2.0)]
    m = DatasetManifest([_entry(0, T0 + 30), _entry(1, T0 + 50), _entry(2, T0 + 80), _entry(3, T0 + 2000)])
    res = pair_labels(m, rows, max_gap=600)
    got = {e.frame_id: e for e in res.manifest}
    assert got[0].label == WeatherLabel(0.0, 1.0) and got[0].scenario == "no_rain"
    assert got[1].label == WeatherLabel(0.0, 1.0)  # tie -> earlier row
    assert got[2].label == WeatherLabel(4.0, 2.0) and got[2].scenario == "rain"
    assert got[2].extra["pairing_gap"] == pytest.approx(20.0)
    assert [fid for fid, _ in res.excluded] == [3]
    assert "1900.0 s" in res.excluded[0][1]
    with pytest.raises(ValueError):
        pair_labels(m, [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e5), min_size=1, max_size=20), st.floats(0, 1e5))
def test_pairing_picks_a_closest_row(row_times, t):
    rows = [WeatherRow(T0 + x, float(i), 0.0) for i, x in enumerate(row_times)]
    res = pair_labels(DatasetManifest([_entry(0, T0 + t)]), rows, max_gap=1e9)
    gap = res.manifest[0].extra["pairing_gap"]
    assert math.isclose(gap, min(abs((T0 + x) - (T0 + t)) for x in row_times), abs_tol=1e-6)


# ----------------------------------------------------------------------------
# calibration day
# ----------------------------------------------------------------------------
def test_calibration_day_is_clearest_prior_day():
    D = dataset.DAY
    m = DatasetManifest(
        [
            _entry(0, T0, 2.0, 5.0),
            _entry(1, T0 + D, 0.0, 9.0),
            _entry(2, T0 + D + 5, 0.0, 9.0),
            _entry(3, T0 + 2 * D, 0.0, 4.0),
            _entry(4, T0 + 3 * D, 0.0, 1.0),  # target day itself: never chosen
        ]
    )
    assert dataset.select_calibration_day(m) == [3]
    target = dataset.day_of(T0 + 2 * D)
    assert dataset.select_calibration_day(m, target) == [1, 2]
    with pytest.raises(LookupError):
        dataset.select_calibration_day(m, dataset.day_of(T0))


def test_calibration_tie_goes_to_latest_day():
    D = dataset.DAY
    m = DatasetManifest([_entry(0, T0, 0.0, 3.0), _entry(1, T0 + D, 0.0, 3.0), _entry(2, T0 + 2 * D, 1.0, 3.0)])
    assert dataset.select_calibration_day(m) == [1]


def test_calibration_requires_labels():
    with pytest.raises(LookupError):
        dataset.select_calibration_day(DatasetManifest([_entry(0, T0)]))


# ----------------------------------------------------------------------------
# class bins and weights
# ----------------------------------------------------------------------------
def test_class_bins_edges():
    b = ClassBins()
    assert b.to_class("precipitation", [0.0, 0.05, 9.99, 10.0, 22.0, 80.0]).tolist() == [0, 1, 1, 2, 3, 3]
    assert b.to_class("wind", [0, 9.9, 10, 25, 30]).tolist() == [0, 0, 1, 2, 3]
    assert b.n_classes("wind") == 4
    assert ClassBins.from_dict(b.to_dict()) == b
    with pytest.raises(ValueError):
        ClassBins(wind=(10.0, 5.0))


def test_class_weights_inverse_frequency():
    y = {"precipitation": np.array([0, 0, 0, 1]), "wind": np.array([0, 1, 2, 3])}
    w = dataset.class_weights(y, ClassBins())
    np.testing.assert_allclose(w["precipitation"], [0.5, 1.5, 0.0, 0.0])
    np.testing.assert_allclose(w["wind"], [1, 1, 1, 1])


# ----------------------------------------------------------------------------
# balanced batches
# ----------------------------------------------------------------------------
def test_batches_exact_composition_and_disjoint_split():
    m = _pools(n_rain=260, n_dry=330)
    plan = build_batches(m, seed=4)
    scen = {e.frame_id: e.scenario for e in m}
    assert len(plan.train_rain) == 208 and len(plan.train_no_rain) == 264
    assert len(plan.train_batches) == 4 and len(plan.test_batches) == 1
    for b in plan.train_batches + plan.test_batches + epoch_batches(plan, 3):
        assert len(b) == 100
        assert sum(scen[i] == "rain" for i in b) == 50
        assert len(set(b)) == 100
    assert not set(plan.train_ids) & set(plan.test_ids)
    assert set(plan.train_ids) | set(plan.test_ids) == set(scen)
    for b in plan.train_batches:
        assert set(b) <= set(plan.train_ids)
    for b in plan.test_batches:
        assert set(b) <= set(plan.test_ids)


def test_batches_are_seeded():
    m = _pools(120, 120)
    assert build_batches(m, 1) == build_batches(m, 1)
    assert build_batches(m, 1).train_batches != build_batches(m, 2).train_batches
    plan = build_batches(m, 1)
    assert epoch_batches(plan, 0) == epoch_batches(plan, 0)
    assert epoch_batches(plan, 0) != epoch_batches(plan, 1)


def test_batch_errors():
    with pytest.raises(ValueError, match="non-empty"):
        build_batches(_pools(0, 100), 0)
    with pytest.raises(ValueError, match="smaller than one batch"):
        build_batches(_pools(40, 200), 0)
    m = _pools(80, 80)
    plan = build_batches(m, 0, n_rain=10, n_no_rain=10, exclude=range(0, 30))
    assert not set(plan.train_ids + plan.test_ids) & set(range(30))


@settings(max_examples=25, deadline=None)
@given(st.integers(12, 200), st.integers(12, 200), st.integers(0, 2**31), st.integers(2, 6), st.integers(2, 6))
def test_batch_properties(n_rain, n_dry, seed, br, bd):
    m = _pools(n_rain, n_dry)
    try:
        plan = build_batches(m, seed, n_rain=br, n_no_rain=bd)
    except ValueError:
        assert math.floor(0.8 * n_rain) < br or math.floor(0.8 * n_dry) < bd
        return
    scen = {e.frame_id: e.scenario for e in m}
    for b in plan.train_batches + plan.test_batches:
        assert [scen[i] for i in b] == ["no_rain"] * bd + ["rain"] * br
    used = [i for b in plan.train_batches for i in b]
    assert len(used) == len(set(used))
    assert len(plan.train_batches) == min(len(plan.train_rain) // br, len(plan.train_no_rain) // bd)
