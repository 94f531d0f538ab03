"""Pipeline configuration (JSON) and named random substreams.

A config file is a JSON object with any of the sections below; missing keys
fall back to :data:`DEFAULTS` (the reduced desk profile).
"""

import copy
import json
import zlib
from pathlib import Path

import numpy as np

from .chansim import CampaignSpec, ChannelModel, default_campaign, large_campaign
from .dataset import ClassBins
from .ofdm import DESK_PROFILE, POC_PROFILE, RadioConfig

DEFAULTS = {
    "radio": DESK_PROFILE.to_dict(),
    "channel": ChannelModel().to_dict(),
    # either a full campaign ("strata": [...]) or a preset
    "campaign": {"preset": "default", "per_stratum": 60},
    "crop": {"max_range_m": 450.0, "max_abs_speed_mps": 10.0, "n_prime": 128, "m_prime": 32},
    "clutter": {"energy_fraction": 0.99, "max_rank": 32, "max_snapshots": 32},
    "pairing": {"max_gap_s": 600.0},
    "classes": ClassBins().to_dict(),
    "train": {
        "epochs": 30,
        "lr": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "n_rain": 50,
        "n_no_rain": 50,
        "train_fraction": 0.8,
        "dtype": "float64",
        "class_weighting": "inverse_frequency",
    },
}

POC_OVERRIDES = {
    "radio": POC_PROFILE.to_dict(),
    "crop": {"n_prime": 746, "m_prime": 68},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        # a campaign naming its own preset or strata replaces the old one wholesale
        if isinstance(v, dict) and isinstance(out.get(k), dict) and "strata" not in v and "preset" not in v:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        user = json.loads(Path(path).read_text())
        if not isinstance(user, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        unknown = set(user) - set(DEFAULTS) - {"profile"}
        if unknown:
            raise ValueError(f"{path}: unknown config sections {sorted(unknown)}")
        if user.get("profile") == "poc":
            cfg = _merge(cfg, POC_OVERRIDES)
        cfg = _merge(cfg, {k: v for k, v in user.items() if k != "profile"})
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def radio_config(cfg: dict) -> RadioConfig:
    return RadioConfig.from_dict(cfg["radio"])


def channel_model(cfg: dict) -> ChannelModel:
    return ChannelModel.from_dict(cfg["channel"])


def campaign_spec(cfg: dict) -> CampaignSpec:
    c = dict(cfg["campaign"])
    if "strata" in c:
        return CampaignSpec.from_dict(c)
    preset = c.pop("preset", "default")
    if preset == "default":
        spec = default_campaign(int(c.pop("per_stratum", 60)))
    elif preset == "large":
        spec = large_campaign(float(c.pop("scale", 1.0)))
    else:
        raise ValueError(f"unknown campaign preset {preset!r}")
    if c:
        d = spec.to_dict()
        d.update(c)
        spec = CampaignSpec.from_dict(d)
    return spec


def class_bins(cfg: dict) -> ClassBins:
    return ClassBins.from_dict(cfg["classes"])


def substream(seed: int, name: str) -> int:
    """Stable 64-bit seed for the named consumer of the global ``--seed``."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, np.uint64)[0])
