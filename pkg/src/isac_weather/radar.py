"""Complex range-Doppler periodogram of a (padded or cleaned) CSI matrix.

Normalisation: both DFT sums are unnormalised and the map carries a single
``1 / (N M)`` prefactor, N x M being the unpadded CSI support::

    P[n, m] = 1/(N M) * sum_k sum_l H[k, l] exp(-j 2 pi l m / M_pad) exp(+j 2 pi k n / N_pad)

so that ``sum |P|^2 = ||H||_F^2 * N_pad * M_pad / (N M)^2``. The Doppler axis
is then circularly shifted by ``M_pad // 2`` (zero Doppler at column
``M_pad // 2``) before cropping.
"""

import math
from dataclasses import dataclass

import numpy as np

from .csi import CsiMatrix
from .ofdm import RadioConfig, doppler_resolution, range_resolution


@dataclass(frozen=True)
class Periodogram:
    values: np.ndarray  # complex (n_prime, m_prime): rows range bins from 0, columns centred speed bins
    range_bin_width: float
    speed_bin_width: float
    polarization_pair: str = "rho1_rho1"
    zero_doppler_col: int = 0

    @property
    def shape(self):
        return self.values.shape

    def power_db(self, floor: float = 1e-30) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(np.abs(self.values) ** 2, floor))

    def speed_axis(self) -> np.ndarray:
        return (np.arange(self.shape[1]) - self.zero_doppler_col) * self.speed_bin_width

    def range_axis(self) -> np.ndarray:
        return np.arange(self.shape[0]) * self.range_bin_width


def full_periodogram(values: np.ndarray, support) -> np.ndarray:
    """Uncropped, Doppler-centred map of a padded matrix with unpadded extent ``support``."""
    n_pad, m_pad = values.shape
    n, m = support
    dop = np.fft.fft(values, axis=1)
    # numpy's ifft carries 1/n_pad; undo it to keep the plain sum
    rd = np.fft.ifft(dop, axis=0) * (n_pad / (n * m))
    return np.fft.fftshift(rd, axes=1)


def crop_columns(m_pad: int, m_prime: int) -> int:
    """First retained Doppler column of the centred map."""
    return (m_pad - m_prime) // 2


def periodogram(csi: CsiMatrix, n_prime: int, m_prime: int, config: RadioConfig | None = None) -> Periodogram:
    if csi.stage == "raw":
        raise ValueError("periodogram expects a zero-padded CSI matrix (stage 'padded' or 'cleaned')")
    n_pad, m_pad = csi.shape
    if n_pad & (n_pad - 1) or m_pad & (m_pad - 1):
        raise ValueError(f"CSI dims {csi.shape} are not powers of two")
    if not (1 <= n_prime <= n_pad and 1 <= m_prime <= m_pad):
        raise ValueError(f"crop ({n_prime}, {m_prime}) outside the padded map {csi.shape}")
    full = full_periodogram(csi.values, csi.support)
    c0 = crop_columns(m_pad, m_prime)
    vals = np.ascontiguousarray(full[:n_prime, c0 : c0 + m_prime])
    if config is not None:
        rbin = range_resolution(config, n_pad)
        vbin = doppler_resolution(config, m_pad)
    else:
        rbin = vbin = float("nan")
    return Periodogram(vals, rbin, vbin, csi.polarization_pair, m_pad // 2 - c0)


def crop_window(
    config: RadioConfig,
    max_range_m: float = 450.0,
    max_abs_speed_mps: float = 10.0,
    n_prime: int | None = None,
    m_prime: int | None = None,
):
    """Number of retained (range, speed) bins for a [0, max_range] x [-v, v] window.

    Explicit ``n_prime`` / ``m_prime`` overrides win over the derived counts.
    """
    if max_range_m <= 0 or max_abs_speed_mps <= 0:
        raise ValueError("window extents must be positive")
    if max_range_m > config.max_unambiguous_range:
        raise ValueError(f"max range {max_range_m} m exceeds the unambiguous {config.max_unambiguous_range:.1f} m")
    if max_abs_speed_mps > config.max_unambiguous_speed:
        raise ValueError(
            f"max speed {max_abs_speed_mps} m/s exceeds the unambiguous {config.max_unambiguous_speed:.1f} m/s"
        )
    n_pad, m_pad = config.n_pad, config.m_pad
    if n_prime is None:
        n_prime = math.ceil(max_range_m / range_resolution(config, n_pad))
    if m_prime is None:
        m_prime = 2 * math.ceil(max_abs_speed_mps / doppler_resolution(config, m_pad))
    n_prime, m_prime = int(n_prime), int(m_prime)
    if not (1 <= n_prime <= n_pad and 1 <= m_prime <= m_pad):
        raise ValueError(f"crop ({n_prime}, {m_prime}) outside the padded map ({n_pad}, {m_pad})")
    return n_prime, m_prime


def expected_bin(config: RadioConfig, range_m: float, speed_mps: float, m_prime: int):
    """(row, column) of a point scatterer in the cropped map."""
    c0 = crop_columns(config.m_pad, m_prime)
    row = int(round(range_m / range_resolution(config)))
    col = config.m_pad // 2 - c0 + int(round(speed_mps / doppler_resolution(config)))
    return row, col
