"""Model checkpoints: one tensor file per array plus ``checkpoint.json``.

Layout::

    <dir>/checkpoint.json          metadata (task, heads, shapes, Adam step, norm stats, bins, ...)
    <dir>/params/<name>.tns        parameters
    <dir>/adam/m.<name>.tns        first moments
    <dir>/adam/v.<name>.tns        second moments
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensorio
from .dataset import ClassBins
from .features import NormStats
from .nn import AdamState, CnnModel

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    task: str
    model: CnnModel
    adam: AdamState
    norm_stats: NormStats
    class_bins: ClassBins
    target_stats: dict = field(default_factory=dict)  # regression: head -> {"mean", "std"}
    class_weights: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    root = Path(path)
    (root / "params").mkdir(parents=True, exist_ok=True)
    (root / "adam").mkdir(parents=True, exist_ok=True)
    m = ckpt.model
    for name, arr in m.params.items():
        tensorio.write_tensor(root / "params" / f"{name}.tns", arr)
        tensorio.write_tensor(root / "adam" / f"m.{name}.tns", ckpt.adam.m[name])
        tensorio.write_tensor(root / "adam" / f"v.{name}.tns", ckpt.adam.v[name])
    meta = {
        "format_version": FORMAT_VERSION,
        "task": ckpt.task,
        "model": {
            "n_prime": m.n_prime,
            "m_prime": m.m_prime,
            "in_channels": m.in_channels,
            "heads": [[h, c] for h, c in m.heads],
            "dtype": m.dtype.name,
            "params": list(m.params),
        },
        "adam": dict(ckpt.adam.hyperparameters(), step=ckpt.adam.step),
        "norm_stats": ckpt.norm_stats.to_dict(),
        "class_bins": ckpt.class_bins.to_dict(),
        "target_stats": ckpt.target_stats,
        "class_weights": {k: [float(x) for x in v] for k, v in ckpt.class_weights.items()},
        "extra": ckpt.extra,
    }
    (root / "checkpoint.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_checkpoint(path) -> Checkpoint:
    root = Path(path)
    meta = json.loads((root / "checkpoint.json").read_text())
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{root}: unsupported checkpoint format {meta.get('format_version')}")
    mm = meta["model"]
    model = CnnModel(mm["n_prime"], mm["m_prime"], [tuple(h) for h in mm["heads"]], mm["in_channels"], mm["dtype"])
    for name in mm["params"]:
        arr = tensorio.read_tensor(root / "params" / f"{name}.tns")
        if arr.shape != model.params[name].shape:
            raise ValueError(f"{root}: parameter {name} has shape {arr.shape}, expected {model.params[name].shape}")
        model.params[name] = arr
    a = meta["adam"]
    adam = AdamState(lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], eps=a["eps"], step=a["step"])
    for name in mm["params"]:
        adam.m[name] = tensorio.read_tensor(root / "adam" / f"m.{name}.tns")
        adam.v[name] = tensorio.read_tensor(root / "adam" / f"v.{name}.tns")
    return Checkpoint(
        task=meta["task"],
        model=model,
        adam=adam,
        norm_stats=NormStats.from_dict(meta["norm_stats"]),
        class_bins=ClassBins.from_dict(meta["class_bins"]),
        target_stats=meta.get("target_stats", {}),
        class_weights={k: np.asarray(v) for k, v in meta.get("class_weights", {}).items()},
        extra=meta.get("extra", {}),
    )
