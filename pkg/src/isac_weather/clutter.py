"""Static-clutter suppression by subspace projection.

Calibration snapshots (clear-weather padded CSI) are vectorised row-major into
the columns of a snapshot matrix. Its leading left singular vectors span the
clutter subspace; a frame is cleaned by projecting onto the orthogonal
complement of that subspace::

    vec(H_clean) = vec(H) - B (B^H vec(H))

This is a plain SVD subspace projector. It does not perform the phase-noise
alignment of dedicated clutter-removal algorithms for OFDM radar.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensorio
from .csi import CsiMatrix


@dataclass(frozen=True)
class ClutterBasis:
    basis_vectors: np.ndarray  # (N_pad * M_pad, rank), orthonormal columns
    shape: tuple  # (N_pad, M_pad)
    metadata: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.basis_vectors.shape[1]


def select_rank(singular_values, energy_fraction: float, max_rank: int | None = None) -> int:
    """Smallest r with sum_{i<r} s_i^2 >= energy_fraction * sum s_i^2, capped by ``max_rank``."""
    if not 0 < energy_fraction <= 1:
        raise ValueError("energy_fraction must be in (0, 1]")
    e = np.asarray(singular_values, dtype=float) ** 2
    total = e.sum()
    if total == 0:
        raise ValueError("calibration snapshots are all zero")
    cum = np.cumsum(e)
    # relative slack so that energy_fraction=1.0 is reachable despite rounding
    r = int(np.searchsorted(cum, energy_fraction * total * (1 - 1e-12), side="left")) + 1
    r = min(r, len(e))
    # drop numerically null directions
    r = min(r, max(1, int(np.sum(e > e[0] * 1e-24))))
    if max_rank is not None:
        r = min(r, int(max_rank))
    return max(r, 1)


def fit_clutter_basis(
    calibration_csi,
    energy_fraction: float = 0.99,
    max_rank: int | None = None,
    source: str = "",
) -> ClutterBasis:
    snaps = list(calibration_csi)
    if not snaps:
        raise ValueError("empty calibration set")
    shape = snaps[0].shape
    for s in snaps:
        if s.shape != shape:
            raise ValueError(f"calibration snapshot shape {s.shape} != {shape}")
    X = np.stack([np.asarray(s.values, dtype=np.complex128).reshape(-1) for s in snaps], axis=1)
    U, sv, _ = np.linalg.svd(X, full_matrices=False)
    r = select_rank(sv, energy_fraction, max_rank)
    captured = float(np.sum(sv[:r] ** 2) / np.sum(sv**2))
    meta = {
        "source": source,
        "sample_count": len(snaps),
        "energy_fraction": float(energy_fraction),
        "captured_energy": captured,
        "rank": r,
    }
    return ClutterBasis(np.ascontiguousarray(U[:, :r]), tuple(shape), meta)


def remove_clutter(csi: CsiMatrix, basis: ClutterBasis) -> CsiMatrix:
    if tuple(csi.shape) != tuple(basis.shape):
        raise ValueError(f"CSI shape {csi.shape} does not match clutter basis {basis.shape}")
    v = np.asarray(csi.values, dtype=np.complex128).reshape(-1)
    B = basis.basis_vectors
    cleaned = v - B @ (B.conj().T @ v)
    return CsiMatrix(cleaned.reshape(csi.shape), "cleaned", csi.source_frame_id, csi.polarization_pair, csi.support)


def save_basis(basis: ClutterBasis, path) -> None:
    """Write ``<path>.tns`` (basis matrix) and ``<path>.json`` (shape and metadata)."""
    path = Path(path)
    tensorio.write_tensor(path.with_suffix(".tns"), basis.basis_vectors)
    side = {"shape": list(basis.shape), "metadata": basis.metadata}
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def load_basis(path) -> ClutterBasis:
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    vecs = tensorio.read_tensor(path.with_suffix(".tns"))
    shape = tuple(side["shape"])
    if vecs.ndim != 2 or vecs.shape[0] != shape[0] * shape[1]:
        raise ValueError(f"{path}: basis matrix {vecs.shape} inconsistent with shape {shape}")
    return ClutterBasis(vecs, shape, side["metadata"])
