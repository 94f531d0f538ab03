"""Four-channel real features from the co- and cross-polar periodograms.

Channel order is fixed: Re(P_11), Im(P_11), Re(P_12), Im(P_12).
"""

from dataclasses import dataclass

import numpy as np

from .radar import Periodogram

N_CHANNELS = 4


@dataclass(frozen=True)
class FeatureTensor:
    values: np.ndarray  # real (n_prime, m_prime, 4)
    normalized: bool = False

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray  # (4,)
    std: np.ndarray  # (4,), population std
    sample_count: int

    def __post_init__(self):
        if np.any(~(np.asarray(self.std) > 0)):
            raise ValueError(f"degenerate feature channel, std = {self.std}")

    def to_dict(self) -> dict:
        return {
            "mean": [float(x) for x in self.mean],
            "std": [float(x) for x in self.std],
            "sample_count": int(self.sample_count),
        }

    @classmethod
    def from_dict(cls, d) -> "NormStats":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float), int(d["sample_count"]))


def assemble_features(p_copol: Periodogram, p_crosspol: Periodogram, dtype=np.float64) -> FeatureTensor:
    a = p_copol.values
    b = p_crosspol.values
    if a.shape != b.shape:
        raise ValueError(f"co-pol {a.shape} and cross-pol {b.shape} periodograms differ in shape")
    vals = np.stack([a.real, a.imag, b.real, b.imag], axis=-1).astype(dtype)
    return FeatureTensor(vals, normalized=False)


class ChannelMoments:
    """Per-channel count / mean / sum of squared deviations, mergeable (Chan et al.)."""

    def __init__(self, n_channels: int = N_CHANNELS):
        self.count = 0
        self.tensors = 0
        self.mean = np.zeros(n_channels)
        self.m2 = np.zeros(n_channels)

    def update(self, values: np.ndarray) -> "ChannelMoments":
        x = np.asarray(values, dtype=np.float64).reshape(-1, values.shape[-1])
        part = ChannelMoments(x.shape[1])
        part.count = x.shape[0]
        part.tensors = 1
        part.mean = x.mean(axis=0)
        part.m2 = ((x - part.mean) ** 2).sum(axis=0)
        return self.merge(part)

    def merge(self, other: "ChannelMoments") -> "ChannelMoments":
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.count / n)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        self.count = n
        self.tensors += other.tensors
        return self


def fit_norm_stats(features) -> NormStats:
    acc = ChannelMoments()
    for f in features:
        if f.normalized:
            raise ValueError("fit_norm_stats expects unnormalized features")
        if acc.count and f.values.shape[-1] != acc.mean.shape[0]:
            raise ValueError("feature tensors have different channel counts")
        acc.update(f.values)
    if acc.count == 0:
        raise ValueError("no feature tensors to fit")
    std = np.sqrt(acc.m2 / acc.count)
    scale = np.maximum(np.abs(acc.mean), 1.0)
    if np.any(std <= 1e-12 * scale):
        raise ValueError(f"zero-variance feature channel(s): {np.flatnonzero(std <= 1e-12 * scale).tolist()}")
    return NormStats(acc.mean.copy(), std, acc.tensors)


def apply_norm(f: FeatureTensor, stats: NormStats) -> FeatureTensor:
    if f.normalized:
        raise ValueError("feature tensor is already normalized")
    out = (np.asarray(f.values, dtype=np.float64) - stats.mean) / stats.std
    return FeatureTensor(out.astype(f.values.dtype, copy=False), normalized=True)
