"""Radio parameters, QPSK test frame and range/speed bin widths."""

import math
from dataclasses import asdict, dataclass

import numpy as np

C0 = 299_792_458.0  # speed of light (m/s), exact

POLARIZATIONS = ("rho1", "rho2")

# (+-1 +-1j) / sqrt(2), index = 2*bit_im + bit_re
QPSK_ALPHABET = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True)
class RadioConfig:
    """OFDM frame geometry.

    Keys in config files use the field names below.

    Attributes
    ----------
    n_subcarriers : int
        Rows of a frame (N).
    n_symbols : int
        Columns of a frame (M).
    subcarrier_spacing : float
        Hz.
    carrier_frequency : float
        Hz.
    frame_duration : float
        Seconds; the symbol duration is ``frame_duration / n_symbols``.
    """

    n_subcarriers: int = 1584
    n_symbols: int = 1120
    subcarrier_spacing: float = 120e3
    carrier_frequency: float = 27.6e9
    frame_duration: float = 0.01

    def __post_init__(self):
        if self.n_subcarriers < 1 or self.n_symbols < 1:
            raise ValueError("n_subcarriers and n_symbols must be >= 1")
        if not (self.subcarrier_spacing > 0 and self.carrier_frequency > 0 and self.frame_duration > 0):
            raise ValueError("subcarrier_spacing, carrier_frequency and frame_duration must be > 0")

    @property
    def symbol_duration(self) -> float:
        return self.frame_duration / self.n_symbols

    @property
    def wavelength(self) -> float:
        return C0 / self.carrier_frequency

    @property
    def n_pad(self) -> int:
        return next_pow2(self.n_subcarriers)

    @property
    def m_pad(self) -> int:
        return next_pow2(self.n_symbols)

    @property
    def max_unambiguous_range(self) -> float:
        return C0 / (2.0 * self.subcarrier_spacing)

    @property
    def max_unambiguous_speed(self) -> float:
        # |f_D| < 1 / (2 T_sym)
        return self.wavelength / (4.0 * self.symbol_duration)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RadioConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown radio config keys: {sorted(unknown)}")
        return cls(**known)


POC_PROFILE = RadioConfig()
# Reduced desk profile: same numerology (symbol duration 10 ms / 1120), 256 x 256 frame.
DESK_PROFILE = RadioConfig(n_subcarriers=256, n_symbols=256, frame_duration=256 * 0.01 / 1120)


def next_pow2(n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1 << (int(n) - 1).bit_length()


@dataclass(frozen=True)
class OfdmFrame:
    samples: np.ndarray  # complex (N, M): rows subcarriers, columns symbols
    polarization: str = "rho1"

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}")
        if self.samples.ndim != 2:
            raise ValueError("frame samples must be a 2-D matrix")

    @property
    def shape(self):
        return self.samples.shape


def generate_test_frame(config: RadioConfig, seed: int, polarization: str = "rho1") -> OfdmFrame:
    """Random QPSK symbol on every (subcarrier, symbol) cell, drawn from PCG64(seed)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0x7E57])))
    idx = rng.integers(0, 4, size=(config.n_subcarriers, config.n_symbols), dtype=np.int64)
    samples = QPSK_ALPHABET[idx]
    samples.setflags(write=False)
    return OfdmFrame(samples, polarization)


def doppler_resolution(config: RadioConfig, m_pad: int | None = None) -> float:
    """Width of one speed bin in m/s for a length-``m_pad`` Doppler FFT."""
    m_pad = config.m_pad if m_pad is None else m_pad
    if m_pad <= 0:
        raise ValueError("m_pad must be > 0")
    return (config.wavelength / 2.0) / (m_pad * config.symbol_duration)


def range_resolution(config: RadioConfig, n_pad: int | None = None) -> float:
    """Width of one range bin in meters for a length-``n_pad`` delay IFFT."""
    n_pad = config.n_pad if n_pad is None else n_pad
    if n_pad <= 0:
        raise ValueError("n_pad must be > 0")
    return C0 / (2.0 * n_pad * config.subcarrier_spacing)
