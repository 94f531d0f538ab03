"""Minimal binary tensor container and the line-delimited dataset manifest.

Tensor file layout (all integers little-endian)::

    offset  size      field
    0       8         magic  b"ISACTNS1"
    8       4         dtype code (uint32): 1=f32 2=f64 3=c64 4=c128
    12      4         ndim (uint32)
    16      8*ndim    dims (uint64 each), row-major order
    ...     payload   elements, row-major, little-endian; complex as (re, im)

See ``docs/FORMATS.md`` for the manifest record layout.
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"ISACTNS1"

DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<c8"), 4: np.dtype("<c16")}
_CODE_OF = {dt.newbyteorder("="): code for code, dt in DTYPE_CODES.items()}
_Header = struct.Struct("<8sII")
_U64_MAX = 2**64 - 1


class TensorFormatError(ValueError):
    """Base class for malformed tensor files."""


class BadMagicError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    def __init__(self, path, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{path}: truncated payload, expected {expected} bytes, got {actual}")


class UnknownDtypeError(TensorFormatError):
    pass


def _dtype_code(dtype: np.dtype) -> int:
    try:
        return _CODE_OF[np.dtype(dtype).newbyteorder("=")]
    except KeyError:
        raise UnknownDtypeError(f"unsupported dtype {dtype}; use float32/64 or complex64/128") from None


def encode_tensor(tensor) -> bytes:
    arr = np.asarray(tensor)
    code = _dtype_code(arr.dtype)
    if arr.ndim == 0:
        raise ValueError("scalars are not supported; reshape to (1,)")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"all dims must be >= 1, got {arr.shape}")
    nbytes = 1
    for d in arr.shape:
        nbytes *= int(d)
    nbytes *= DTYPE_CODES[code].itemsize
    if nbytes > _U64_MAX:
        raise OverflowError("tensor size overflows 64 bits")
    head = _Header.pack(MAGIC, code, arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype=DTYPE_CODES[code]).tobytes(order="C")
    return head + payload


def decode_tensor(buf: bytes, path="<bytes>") -> np.ndarray:
    if bytes(buf[:8]) != MAGIC:
        raise BadMagicError(f"{path}: bad magic {bytes(buf[:8])!r}")
    if len(buf) < _Header.size:
        raise TruncatedPayloadError(path, _Header.size, len(buf))
    _, code, ndim = _Header.unpack_from(buf, 0)
    if code not in DTYPE_CODES:
        raise UnknownDtypeError(f"{path}: unknown dtype code {code}")
    dims_end = _Header.size + 8 * ndim
    if len(buf) < dims_end:
        raise TruncatedPayloadError(path, dims_end, len(buf))
    dims = struct.unpack_from(f"<{ndim}Q", buf, _Header.size)
    if ndim == 0 or any(d < 1 for d in dims):
        raise TensorFormatError(f"{path}: invalid dims {dims}")
    dtype = DTYPE_CODES[code]
    count = 1
    for d in dims:
        count *= d
    expected = count * dtype.itemsize
    actual = len(buf) - dims_end
    if actual < expected:
        raise TruncatedPayloadError(path, expected, actual)
    if actual > expected:
        raise TensorFormatError(f"{path}: {actual - expected} trailing bytes after payload")
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=dims_end).reshape(dims)
    return arr.astype(dtype.newbyteorder("="), copy=True)


def write_tensor(path, tensor) -> None:
    data = encode_tensor(tensor)
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    return decode_tensor(buf, path)


def read_header(path):
    """Return ``(dtype, dims)`` without loading the payload."""
    with open(path, "rb") as fh:
        head = fh.read(_Header.size)
        if len(head) < 8 or head[:8] != MAGIC:
            raise BadMagicError(f"{path}: bad magic")
        if len(head) < _Header.size:
            raise TruncatedPayloadError(path, _Header.size, len(head))
        _, code, ndim = _Header.unpack(head)
        if code not in DTYPE_CODES:
            raise UnknownDtypeError(f"{path}: unknown dtype code {code}")
        raw = fh.read(8 * ndim)
        if len(raw) < 8 * ndim:
            raise TruncatedPayloadError(path, _Header.size + 8 * ndim, _Header.size + len(raw))
    return DTYPE_CODES[code], struct.unpack(f"<{ndim}Q", raw)


# ----------------------------------------------------------------------------
# manifest
# ----------------------------------------------------------------------------
SCENARIOS = ("rain", "no_rain")


@dataclass(frozen=True)
class WeatherLabel:
    precipitation_rate: float  # mm/h
    wind_speed: float  # km/h


@dataclass(frozen=True)
class ManifestEntry:
    frame_id: int
    timestamp: float  # seconds since the Unix epoch, UTC
    tensor_path: str
    label: WeatherLabel | None
    scenario: str
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")

    def to_record(self) -> dict:
        rec = {
            "frame_id": int(self.frame_id),
            "timestamp": float(self.timestamp),
            "tensor_path": self.tensor_path,
            "label": None
            if self.label is None
            else {
                "precipitation_rate": float(self.label.precipitation_rate),
                "wind_speed": float(self.label.wind_speed),
            },
            "scenario": self.scenario,
        }
        for k in sorted(self.extra):
            rec[k] = self.extra[k]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "ManifestEntry":
        rec = dict(rec)
        lab = rec.pop("label")
        return cls(
            frame_id=int(rec.pop("frame_id")),
            timestamp=float(rec.pop("timestamp")),
            tensor_path=rec.pop("tensor_path"),
            label=None if lab is None else WeatherLabel(float(lab["precipitation_rate"]), float(lab["wind_speed"])),
            scenario=rec.pop("scenario"),
            extra=rec,
        )


class DatasetManifest(list):
    """List of :class:`ManifestEntry`; one JSON object per line on disk."""

    def by_id(self) -> dict:
        return {e.frame_id: e for e in self}

    def validate(self, root=None, expected_dims=None) -> None:
        ids = [e.frame_id for e in self]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate frame ids in manifest")
        if root is None:
            return
        for e in self:
            p = Path(root) / e.tensor_path
            if not p.is_file():
                raise FileNotFoundError(f"frame {e.frame_id}: missing tensor {p}")
            if expected_dims is not None:
                _, dims = read_header(p)
                if tuple(dims) != tuple(expected_dims):
                    raise ValueError(f"frame {e.frame_id}: dims {dims} != {tuple(expected_dims)}")


def write_manifest(path, entries) -> None:
    lines = [json.dumps(e.to_record(), separators=(",", ":")) for e in entries]
    Path(path).write_text("".join(line + "\n" for line in lines))


def append_manifest(path, entry: ManifestEntry) -> None:
    with open(path, "a") as fh:
        fh.write(json.dumps(entry.to_record(), separators=(",", ":")) + "\n")


def read_manifest(path) -> DatasetManifest:
    out = DatasetManifest()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(ManifestEntry.from_record(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad manifest record ({exc})") from exc
    out.validate()
    return out
