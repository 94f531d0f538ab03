"""Synthetic ISAC weather channel.

The received frame on polarization ``rho`` is

    RX[k, l] = sum_p a_p * exp(-j 2 pi k df tau_p) * exp(+j 2 pi f_D,p l T_sym) * TX[k, l] + noise[k, l]

with ``tau = 2 r / c`` and ``f_D = 2 v f_c / c`` (monostatic round trip) and
circular white Gaussian noise of power ``noise_floor * (1 + kappa * rain)``.

Modelling choices (not measured physics): rain adds ``weather_scatterer_count``
drops whose total mean power grows linearly with the rain rate; wind sets the
spread of radial speeds of both drops and airborne particulates; the
cross-polar return is the co-polar one scaled by a fixed leakage.
"""

import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import tensorio
from .ofdm import C0, POLARIZATIONS, OfdmFrame, RadioConfig, generate_test_frame


@dataclass(frozen=True)
class Scatterer:
    range: float  # m
    radial_speed: float  # m/s, positive = approaching (positive Doppler)
    amplitude_rho1: complex = 1.0
    amplitude_rho2: complex = 0.0


@dataclass(frozen=True)
class ChannelModel:
    """Calibration knobs of the weather signature; defaults documented in the README."""

    noise_lift_per_mmh: float = 0.5  # kappa
    rain_power_per_mmh: float = 1e-3  # total mean drop power per mm/h
    particulate_power: float = 1.6e-2  # total mean particulate power
    doppler_spread_slope: float = 1.0 / 3.6  # radial speed std (m/s) per km/h of wind
    cross_pol_leakage_db: float = -10.0
    window_range: float = 450.0  # weather scatterers are uniform over [0, window_range)

    @property
    def cross_pol_gain(self) -> float:
        return 10.0 ** (self.cross_pol_leakage_db / 20.0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelModel":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown channel model keys: {sorted(unknown)}")
        return cls(**d)


DEFAULT_MODEL = ChannelModel()


@dataclass(frozen=True)
class WeatherScene:
    precipitation_rate: float = 0.0  # mm/h
    wind_speed: float = 0.0  # km/h
    static_clutter: tuple = ()
    weather_scatterer_count: int = 64
    particulate_count: int = 0
    noise_floor_power: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.precipitation_rate < 0 or self.wind_speed < 0 or self.noise_floor_power < 0:
            raise ValueError("precipitation_rate, wind_speed and noise_floor_power must be >= 0")
        if self.weather_scatterer_count < 0 or self.particulate_count < 0:
            raise ValueError("scatterer counts must be >= 0")


def _check_bounds(ranges, speeds, config: RadioConfig):
    rmax = config.max_unambiguous_range
    vmax = config.max_unambiguous_speed
    if np.any(ranges < 0) or np.any(ranges >= rmax):
        raise ValueError(f"scatterer range outside the unambiguous interval [0, {rmax:.1f}) m")
    if np.any(np.abs(speeds) >= vmax):
        raise ValueError(f"scatterer speed outside the unambiguous interval (+-{vmax:.1f} m/s)")


def scene_scatterers(scene: WeatherScene, config: RadioConfig, model: ChannelModel = DEFAULT_MODEL):
    """Materialise every scatterer of ``scene`` as arrays ``(range, speed, amp_rho1, amp_rho2)``.

    Depends only on ``scene.seed``, so both polarizations see the same drops.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(scene.seed), 0])))
    ranges, speeds, a1, a2 = [], [], [], []
    for s in scene.static_clutter:
        ranges.append(s.range)
        speeds.append(s.radial_speed)
        a1.append(s.amplitude_rho1)
        a2.append(s.amplitude_rho2)
    r = np.asarray(ranges, dtype=float)
    v = np.asarray(speeds, dtype=float)
    amp1 = np.asarray(a1, dtype=complex)
    amp2 = np.asarray(a2, dtype=complex)

    sigma_v = model.doppler_spread_slope * scene.wind_speed
    leak = model.cross_pol_gain
    parts = [(r, v, amp1, amp2)]
    groups = []
    if scene.precipitation_rate > 0 and scene.weather_scatterer_count > 0:
        groups.append((scene.weather_scatterer_count, model.rain_power_per_mmh * scene.precipitation_rate))
    if scene.particulate_count > 0:
        groups.append((scene.particulate_count, model.particulate_power))
    for count, power in groups:
        gr = rng.uniform(0.0, model.window_range, count)
        gv = rng.normal(0.0, 1.0, count) * sigma_v
        ga = (rng.normal(size=count) + 1j * rng.normal(size=count)) * math.sqrt(power / (2.0 * count))
        parts.append((gr, gv, ga, ga * leak))
    r, v, amp1, amp2 = (np.concatenate(x) for x in zip(*parts))
    _check_bounds(r, v, config)
    return r, v, amp1, amp2


def channel_matrix(ranges, speeds, amps, config: RadioConfig) -> np.ndarray:
    """Noise-free multiplicative channel H[k, l] (N x M) of a scatterer set."""
    k = np.arange(config.n_subcarriers)
    l = np.arange(config.n_symbols)
    tau = 2.0 * np.asarray(ranges, dtype=float) / C0
    f_d = 2.0 * np.asarray(speeds, dtype=float) * config.carrier_frequency / C0
    delay = np.exp(-2j * np.pi * np.outer(k * config.subcarrier_spacing, tau))  # (N, P)
    doppler = np.exp(2j * np.pi * np.outer(f_d, l * config.symbol_duration))  # (P, M)
    return delay @ (np.asarray(amps, dtype=complex)[:, None] * doppler)


def simulate_rx(
    tx: OfdmFrame,
    scene: WeatherScene,
    config: RadioConfig,
    rx_polarization: str = "rho1",
    model: ChannelModel = DEFAULT_MODEL,
) -> OfdmFrame:
    if tx.shape != (config.n_subcarriers, config.n_symbols):
        raise ValueError(f"tx frame {tx.shape} does not match config {(config.n_subcarriers, config.n_symbols)}")
    if rx_polarization not in POLARIZATIONS:
        raise ValueError(f"rx_polarization must be one of {POLARIZATIONS}")
    r, v, a1, a2 = scene_scatterers(scene, config, model)
    amps = a1 if rx_polarization == "rho1" else a2
    if len(r):
        rx = channel_matrix(r, v, amps, config) * tx.samples
    else:
        rx = np.zeros(tx.shape, dtype=np.complex128)
    power = scene.noise_floor_power * (1.0 + model.noise_lift_per_mmh * scene.precipitation_rate)
    if power > 0:
        pol = POLARIZATIONS.index(rx_polarization)
        nrng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(scene.seed), 1, pol])))
        noise = nrng.standard_normal(tx.shape) + 1j * nrng.standard_normal(tx.shape)
        rx = rx + noise * math.sqrt(power / 2.0)
    return OfdmFrame(rx, rx_polarization)


# ----------------------------------------------------------------------------
# campaigns
# ----------------------------------------------------------------------------
PAPER_NO_RAIN_SAMPLES = 9786
PAPER_RAIN_SAMPLES = 9780


@dataclass(frozen=True)
class Stratum:
    precipitation_rate: float  # mm/h, stratum centre
    wind_speed: float  # km/h, stratum centre
    count: int
    precipitation_jitter: float = 0.0  # labels uniform in centre +- jitter
    wind_jitter: float = 0.0


@dataclass(frozen=True)
class CampaignSpec:
    strata: tuple
    calibration_count: int = 32  # clear-sky frames on day 0
    calibration_wind: float = 0.0
    static_clutter: tuple = ()
    noise_floor_power: float = 1e-2
    weather_scatterer_count: int = 128
    particulate_count: int = 256
    frames_per_measurement: int = 100
    frame_interval: float = 0.01  # s between frames of one measurement
    rain_interval: float = 120.0  # s between rain measurements
    no_rain_interval: float = 600.0
    start_time: float = 1704067200.0  # 2024-01-01T00:00:00Z, start of the calibration day
    tx_seed: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["strata"] = [asdict(s) for s in self.strata]
        d["static_clutter"] = [
            {
                "range": s.range,
                "radial_speed": s.radial_speed,
                "amplitude_rho1": [complex(s.amplitude_rho1).real, complex(s.amplitude_rho1).imag],
                "amplitude_rho2": [complex(s.amplitude_rho2).real, complex(s.amplitude_rho2).imag],
            }
            for s in self.static_clutter
        ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignSpec":
        d = dict(d)
        d["strata"] = tuple(Stratum(**s) for s in d["strata"])
        clutter = []
        for s in d.get("static_clutter", ()):
            a1 = s.get("amplitude_rho1", 1.0)
            a2 = s.get("amplitude_rho2", 0.0)
            clutter.append(
                Scatterer(
                    float(s["range"]),
                    float(s.get("radial_speed", 0.0)),
                    complex(*a1) if isinstance(a1, (list, tuple)) else complex(a1),
                    complex(*a2) if isinstance(a2, (list, tuple)) else complex(a2),
                )
            )
        d["static_clutter"] = tuple(clutter)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown campaign keys: {sorted(unknown)}")
        return cls(**d)

    @property
    def n_samples(self) -> int:
        return sum(s.count for s in self.strata)


def default_static_clutter(leakage_db: float = -10.0) -> tuple:
    g = 10.0 ** (leakage_db / 20.0)
    pts = [(0.0, 0.8), (35.0, 0.3 - 0.2j), (120.0, 1.0 + 0.5j), (260.0, 0.4j), (410.0, 0.25)]
    return tuple(Scatterer(r, 0.0, complex(a), complex(a) * g) for r, a in pts)


def default_campaign(per_stratum: int = 60) -> CampaignSpec:
    """4 rain classes x 4 wind classes, half of the samples rain free.

    Rain strata (three non-zero rates x four winds) hold ``per_stratum`` samples
    each; the four rain-free strata hold three times that, which balances the
    rain / no-rain pools.
    """
    winds = (5.0, 15.0, 25.0, 35.0)
    strata = [Stratum(0.0, w, 3 * per_stratum, 0.0, 3.0) for w in winds]
    for p in (5.0, 15.0, 30.0):
        strata += [Stratum(p, w, per_stratum, 2.0, 3.0) for w in winds]
    return CampaignSpec(strata=tuple(strata), static_clutter=default_static_clutter())


def large_campaign(scale: float = 1.0, rain_rates=(5.0, 15.0, 30.0), winds=(5.0, 15.0, 25.0, 35.0)) -> CampaignSpec:
    """Rain / no-rain totals of the measurement campaign (9786 / 9780) times ``scale``."""
    n_dry = int(round(PAPER_NO_RAIN_SAMPLES * scale))
    n_wet = int(round(PAPER_RAIN_SAMPLES * scale))
    strata = []
    for i, w in enumerate(winds):
        strata.append(Stratum(0.0, w, _share(n_dry, len(winds), i), 0.0, 3.0))
    cells = [(p, w) for p in rain_rates for w in winds]
    for i, (p, w) in enumerate(cells):
        strata.append(Stratum(p, w, _share(n_wet, len(cells), i), 2.0, 3.0))
    return CampaignSpec(strata=tuple(s for s in strata if s.count > 0), static_clutter=default_static_clutter())


def _share(total, parts, i):
    return total // parts + (1 if i < total % parts else 0)


def _iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat(timespec="microseconds")


def _campaign_plan(spec: CampaignSpec, seed: int):
    """Yield (timestamp, precipitation, wind, stratum index or None) for every sample.

    Times are integral microseconds so they survive an ISO-8601 round trip exactly.
    """
    lab_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 2])))
    ord_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 3])))
    fpm = spec.frames_per_measurement
    us = 1_000_000
    dt = int(round(spec.frame_interval * us))

    t = int(round(spec.start_time * us))
    for i in range(spec.calibration_count):
        if i and i % fpm == 0:
            t += int(round(spec.no_rain_interval * us))
        yield (t + (i % fpm) * dt) / us, 0.0, spec.calibration_wind, None

    measurements = []
    for si, s in enumerate(spec.strata):
        for start in range(0, s.count, fpm):
            measurements.append((si, min(fpm, s.count - start)))
    order = ord_rng.permutation(len(measurements))
    t = int(round((spec.start_time + 86400.0) * us))
    for mi in order:
        si, n = measurements[mi]
        s = spec.strata[si]
        for j in range(n):
            p = s.precipitation_rate
            if p > 0 and s.precipitation_jitter > 0:
                p = max(p + lab_rng.uniform(-s.precipitation_jitter, s.precipitation_jitter), 1e-3)
            w = s.wind_speed
            if s.wind_jitter > 0:
                w = max(w + lab_rng.uniform(-s.wind_jitter, s.wind_jitter), 0.0)
            yield (t + j * dt) / us, float(p), float(w), si
        t += int(round((spec.rain_interval if s.precipitation_rate > 0 else spec.no_rain_interval) * us))


def sample_scene(spec: CampaignSpec, precipitation: float, wind: float, seed: int, frame_id: int) -> WeatherScene:
    scene_seed = int(np.random.SeedSequence([int(seed), 4, int(frame_id)]).generate_state(1, np.uint64)[0])
    return WeatherScene(
        precipitation_rate=precipitation,
        wind_speed=wind,
        static_clutter=spec.static_clutter,
        weather_scatterer_count=spec.weather_scatterer_count,
        particulate_count=spec.particulate_count,
        noise_floor_power=spec.noise_floor_power,
        seed=scene_seed,
    )


def sample_campaign(
    config: RadioConfig,
    campaign_spec: CampaignSpec,
    seed: int,
    out_dir,
    model: ChannelModel = DEFAULT_MODEL,
    progress=None,
) -> tensorio.DatasetManifest:
    """Simulate a labelled campaign into ``out_dir``.

    Writes ``tx.tns`` (the shared test frame), ``frames/<id>.tns`` holding
    RX on (rho1, rho2) stacked as a (2, N, M) complex64 tensor,
    ``manifest.jsonl``, ``weather.csv`` and ``campaign.json``.
    """
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    tx = generate_test_frame(config, campaign_spec.tx_seed)
    tensorio.write_tensor(out / "tx.tns", tx.samples.astype(np.complex128))

    manifest = tensorio.DatasetManifest()
    rows = []
    plan = list(_campaign_plan(campaign_spec, seed))
    for fid, (ts, p, w, stratum) in enumerate(plan):
        scene = sample_scene(campaign_spec, p, w, seed, fid)
        rx = np.stack([simulate_rx(tx, scene, config, pol, model).samples for pol in POLARIZATIONS])
        rel = f"frames/{fid:06d}.tns"
        tensorio.write_tensor(out / rel, rx.astype(np.complex64))
        extra = {"tx_path": "tx.tns", "calibration": stratum is None}
        if stratum is not None:
            extra["stratum"] = int(stratum)
        manifest.append(
            tensorio.ManifestEntry(
                frame_id=fid,
                timestamp=ts,
                tensor_path=rel,
                label=tensorio.WeatherLabel(p, w),
                scenario="rain" if p > 0 else "no_rain",
                extra=extra,
            )
        )
        rows.append(f"{_iso(ts)},{p!r},{w!r}")
        if progress is not None:
            progress(fid + 1, len(plan))
    tensorio.write_manifest(out / "manifest.jsonl", manifest)
    (out / "weather.csv").write_text("timestamp,precipitation_mmh,wind_kmh\n" + "".join(r + "\n" for r in rows))
    meta = {
        "radio": config.to_dict(),
        "channel": model.to_dict(),
        "campaign": campaign_spec.to_dict(),
        "seed": int(seed),
    }
    (out / "campaign.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return manifest

