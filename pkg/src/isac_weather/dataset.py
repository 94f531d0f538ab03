"""Manifest-level dataset assembly: weather-station pairing, calibration day, split and batches."""

import bisect
import csv
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .tensorio import DatasetManifest, WeatherLabel

log = logging.getLogger(__name__)

DAY = 86400.0
METRICS = ("precipitation", "wind")


# ----------------------------------------------------------------------------
# weather station pairing
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class WeatherRow:
    timestamp: float
    precipitation_rate: float
    wind_speed: float


def parse_timestamp(text: str) -> float:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def read_weather_csv(path) -> list:
    """Rows of (ISO-8601 timestamp, precipitation mm/h, wind km/h, ...); a header line is skipped."""
    rows = []
    with open(path, newline="") as fh:
        for i, rec in enumerate(csv.reader(fh)):
            if not rec or not rec[0].strip() or rec[0].lstrip().startswith("#"):
                continue
            try:
                ts = parse_timestamp(rec[0])
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"{path}:{i + 1}: bad timestamp {rec[0]!r}") from None
            rows.append(WeatherRow(ts, float(rec[1]), float(rec[2])))
    return rows


@dataclass
class PairingResult:
    manifest: DatasetManifest
    excluded: list = field(default_factory=list)  # (frame_id, reason)


def pair_labels(manifest, weather_rows, max_gap: float = 600.0) -> PairingResult:
    """Attach the temporally nearest station row to every sample.

    Ties go to the earlier row. Samples farther than ``max_gap`` seconds from
    any row are excluded and reported, never silently dropped.
    """
    rows = sorted(weather_rows, key=lambda r: r.timestamp)
    if not rows:
        raise ValueError("weather CSV has no rows")
    times = [r.timestamp for r in rows]
    out = DatasetManifest()
    excluded = []
    for e in manifest:
        i = bisect.bisect_left(times, e.timestamp)
        cands = [j for j in (i - 1, i) if 0 <= j < len(rows)]
        j = min(cands, key=lambda j: (abs(times[j] - e.timestamp), times[j]))
        gap = abs(times[j] - e.timestamp)
        if gap > max_gap:
            reason = f"nearest weather row is {gap:.1f} s away (max {max_gap:.1f} s)"
            log.warning("frame %d excluded: %s", e.frame_id, reason)
            excluded.append((e.frame_id, reason))
            continue
        r = rows[j]
        extra = dict(e.extra)
        extra["pairing_gap"] = gap
        out.append(
            replace(
                e,
                label=WeatherLabel(r.precipitation_rate, r.wind_speed),
                scenario="rain" if r.precipitation_rate > 0 else "no_rain",
                extra=extra,
            )
        )
    return PairingResult(out, excluded)


# ----------------------------------------------------------------------------
# calibration day
# ----------------------------------------------------------------------------
def day_of(timestamp: float) -> int:
    return int(math.floor(timestamp / DAY))


def select_calibration_day(manifest, target_day: int | None = None) -> list:
    """Frame ids of the clearest day strictly before ``target_day``.

    Days are ranked by mean precipitation, then mean wind; remaining ties go
    to the latest day. ``target_day`` defaults to the last day in the manifest.
    """
    by_day = {}
    for e in manifest:
        if e.label is None:
            continue
        by_day.setdefault(day_of(e.timestamp), []).append(e)
    if not by_day:
        raise LookupError("manifest has no labelled samples")
    if target_day is None:
        target_day = max(by_day)
    prior = [d for d in by_day if d < target_day]
    if not prior:
        raise LookupError(f"no calibration day available before day {target_day}")

    def key(d):
        ents = by_day[d]
        return (
            float(np.mean([e.label.precipitation_rate for e in ents])),
            float(np.mean([e.label.wind_speed for e in ents])),
            -d,
        )

    best = min(prior, key=key)
    return sorted(e.frame_id for e in by_day[best])


# ----------------------------------------------------------------------------
# class bins
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class ClassBins:
    """Upper-exclusive class edges per metric: class = number of edges <= value."""

    precipitation: tuple = (0.05, 10.0, 22.0)
    wind: tuple = (10.0, 20.0, 30.0)

    def __post_init__(self):
        for name in METRICS:
            e = list(getattr(self, name))
            if e != sorted(e) or len(set(e)) != len(e):
                raise ValueError(f"{name} bin edges must be strictly increasing")

    def n_classes(self, metric: str) -> int:
        return len(getattr(self, metric)) + 1

    def to_class(self, metric: str, value) -> np.ndarray:
        return np.searchsorted(np.asarray(getattr(self, metric)), np.asarray(value, dtype=float), side="right")

    def labels(self, entries) -> dict:
        return {
            "precipitation": self.to_class("precipitation", [e.label.precipitation_rate for e in entries]),
            "wind": self.to_class("wind", [e.label.wind_speed for e in entries]),
        }

    def to_dict(self) -> dict:
        return {m: list(getattr(self, m)) for m in METRICS}

    @classmethod
    def from_dict(cls, d) -> "ClassBins":
        return cls(**{m: tuple(float(x) for x in d[m]) for m in METRICS if m in d})


def label_values(entries) -> dict:
    return {
        "precipitation": np.array([e.label.precipitation_rate for e in entries], dtype=float),
        "wind": np.array([e.label.wind_speed for e in entries], dtype=float),
    }


def class_weights(class_labels: dict, bins: ClassBins) -> dict:
    """Inverse class frequency per metric, normalised to mean 1 over the classes present."""
    out = {}
    for m, y in class_labels.items():
        counts = np.bincount(np.asarray(y), minlength=bins.n_classes(m)).astype(float)
        w = np.zeros_like(counts)
        present = counts > 0
        w[present] = 1.0 / counts[present]
        w[present] /= w[present].mean()
        out[m] = w
    return out


# ----------------------------------------------------------------------------
# split and batches
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class BatchPlan:
    train_rain: tuple
    train_no_rain: tuple
    test_rain: tuple
    test_no_rain: tuple
    train_batches: tuple
    test_batches: tuple
    n_rain: int = 50
    n_no_rain: int = 50
    train_fraction: float = 0.8
    seed: int = 0

    @property
    def batch_size(self) -> int:
        return self.n_rain + self.n_no_rain

    @property
    def train_ids(self) -> tuple:
        return tuple(sorted(self.train_rain + self.train_no_rain))

    @property
    def test_ids(self) -> tuple:
        return tuple(sorted(self.test_rain + self.test_no_rain))


def _rng(*key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def _batches(rain, dry, n_rain, n_dry):
    n = min(len(rain) // n_rain, len(dry) // n_dry)
    return tuple(
        tuple(dry[i * n_dry : (i + 1) * n_dry]) + tuple(rain[i * n_rain : (i + 1) * n_rain]) for i in range(n)
    )


def build_batches(
    manifest,
    seed: int,
    n_rain: int = 50,
    n_no_rain: int = 50,
    train_fraction: float = 0.8,
    exclude=(),
) -> BatchPlan:
    """Seeded 80/20 split of each scenario pool and balanced batches.

    Each batch holds ``n_no_rain`` rain-free samples followed by ``n_rain``
    rain samples. Trailing partial batches are dropped.
    """
    skip = set(exclude)
    rain = sorted(e.frame_id for e in manifest if e.scenario == "rain" and e.frame_id not in skip)
    dry = sorted(e.frame_id for e in manifest if e.scenario == "no_rain" and e.frame_id not in skip)
    if not rain or not dry:
        raise ValueError(f"both pools must be non-empty (rain={len(rain)}, no_rain={len(dry)})")
    rain = [int(x) for x in _rng(seed, 11).permutation(rain)]
    dry = [int(x) for x in _rng(seed, 12).permutation(dry)]
    n_tr_rain = int(math.floor(train_fraction * len(rain)))
    n_tr_dry = int(math.floor(train_fraction * len(dry)))
    tr_rain, te_rain = rain[:n_tr_rain], rain[n_tr_rain:]
    tr_dry, te_dry = dry[:n_tr_dry], dry[n_tr_dry:]
    if len(tr_rain) < n_rain or len(tr_dry) < n_no_rain:
        raise ValueError(
            f"training pools (rain={len(tr_rain)}, no_rain={len(tr_dry)}) smaller than one batch "
            f"({n_rain} + {n_no_rain})"
        )
    return BatchPlan(
        train_rain=tuple(tr_rain),
        train_no_rain=tuple(tr_dry),
        test_rain=tuple(te_rain),
        test_no_rain=tuple(te_dry),
        train_batches=_batches(tr_rain, tr_dry, n_rain, n_no_rain),
        test_batches=_batches(te_rain, te_dry, n_rain, n_no_rain),
        n_rain=n_rain,
        n_no_rain=n_no_rain,
        train_fraction=train_fraction,
        seed=int(seed),
    )


def epoch_batches(plan: BatchPlan, epoch: int) -> tuple:
    """Training batches for ``epoch``; pools reshuffled from (seed, epoch)."""
    rng = _rng(plan.seed, 13, epoch)
    rain = [int(x) for x in rng.permutation(plan.train_rain)]
    dry = [int(x) for x in rng.permutation(plan.train_no_rain)]
    return _batches(rain, dry, plan.n_rain, plan.n_no_rain)


def entries_for(manifest: DatasetManifest, ids) -> list:
    idx = manifest.by_id()
    return [idx[i] for i in ids]
