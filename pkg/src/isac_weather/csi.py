"""Channel estimate from a TX/RX frame pair, and power-of-two zero padding."""

from dataclasses import dataclass

import numpy as np

from .ofdm import OfdmFrame, next_pow2

STAGES = ("raw", "padded", "cleaned")
POLARIZATION_PAIRS = ("rho1_rho1", "rho1_rho2")


@dataclass(frozen=True)
class CsiMatrix:
    values: np.ndarray
    stage: str = "raw"
    source_frame_id: int = -1
    polarization_pair: str = "rho1_rho1"
    support: tuple | None = None  # (N, M) of the unpadded estimate

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.polarization_pair not in POLARIZATION_PAIRS:
            raise ValueError(f"unknown polarization pair {self.polarization_pair!r}")
        if self.support is None:
            object.__setattr__(self, "support", tuple(self.values.shape))

    @property
    def shape(self):
        return self.values.shape


def estimate_csi(rx: OfdmFrame, tx: OfdmFrame, frame_id: int = -1) -> CsiMatrix:
    r = np.asarray(rx.samples, dtype=np.complex128)
    t = np.asarray(tx.samples, dtype=np.complex128)
    if r.shape != t.shape:
        raise ValueError(f"rx {r.shape} and tx {t.shape} frames differ in shape")
    if not np.all(np.abs(t) > 0):
        raise ZeroDivisionError("tx frame has zero-valued elements")
    pair = f"{tx.polarization}_{rx.polarization}"
    return CsiMatrix(r / t, "raw", frame_id, pair)


def zero_pad(csi: CsiMatrix) -> CsiMatrix:
    if csi.stage != "raw":
        raise ValueError(f"zero_pad expects a raw CSI matrix, got stage {csi.stage!r}")
    n, m = csi.shape
    out = np.zeros((next_pow2(n), next_pow2(m)), dtype=np.complex128)
    out[:n, :m] = csi.values
    return CsiMatrix(out, "padded", csi.source_frame_id, csi.polarization_pair, (n, m))
