import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_weather import tensorio
from isac_weather.tensorio import (
    BadMagicError,
    ManifestEntry,
    TruncatedPayloadError,
    UnknownDtypeError,
    WeatherLabel,
    read_manifest,
    read_tensor,
    write_manifest,
    write_tensor,
)

HEADER = 16  # magic + dtype + ndim


def test_identity_c64_roundtrip(tmp_path):
    t = np.array([[1 + 0j, 0], [0, 1 + 0j]], dtype=np.complex64)
    p = tmp_path / "eye.tns"
    write_tensor(p, t)
    assert p.stat().st_size == HEADER + 2 * 8 + 32
    back = read_tensor(p)
    assert back.dtype == np.complex64
    assert back.tobytes() == t.tobytes()


def test_smallest_file(tmp_path):
    p = tmp_path / "one.tns"
    write_tensor(p, np.zeros((1,), dtype=np.float32))
    assert p.stat().st_size == HEADER + 8 + 4
    assert read_tensor(p).tolist() == [0.0]


def test_feature_sized_payload(tmp_path):
    rng = np.random.default_rng(3)
    t = rng.standard_normal((746, 68, 4)).astype(np.float32)
    p = tmp_path / "feat.tns"
    write_tensor(p, t)
    payload = p.stat().st_size - HEADER - 3 * 8
    assert payload == 746 * 68 * 4 * 4 == 811_648
    np.testing.assert_array_equal(read_tensor(p), t)


def test_header_layout_is_little_endian(tmp_path):
    p = tmp_path / "h.tns"
    write_tensor(p, np.arange(6, dtype=np.float64).reshape(2, 3))
    raw = p.read_bytes()
    assert raw[:8] == tensorio.MAGIC
    assert struct.unpack("<II", raw[8:16]) == (2, 2)
    assert struct.unpack("<2Q", raw[16:32]) == (2, 3)
    assert struct.unpack("<d", raw[32 + 8 : 32 + 16]) == (1.0,)


def test_complex_interleaved(tmp_path):
    p = tmp_path / "c.tns"
    write_tensor(p, np.array([1.5 - 2.0j], dtype=np.complex128))
    re, im = struct.unpack("<2d", p.read_bytes()[24:])
    assert (re, im) == (1.5, -2.0)


def test_big_endian_input_is_stored_little_endian(tmp_path):
    p = tmp_path / "be.tns"
    write_tensor(p, np.array([1.0, 2.0], dtype=">f8"))
    assert struct.unpack("<2d", p.read_bytes()[24:]) == (1.0, 2.0)


def test_bad_magic(tmp_path):
    p = tmp_path / "x.tns"
    write_tensor(p, np.ones((2, 2), np.float32))
    raw = bytearray(p.read_bytes())
    raw[0] ^= 0xFF
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        read_tensor(p)


def test_truncated_payload_reports_lengths(tmp_path):
    p = tmp_path / "x.tns"
    write_tensor(p, np.ones((2, 2), np.float32))
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(TruncatedPayloadError) as info:
        read_tensor(p)
    assert info.value.expected == 16 and info.value.actual == 12
    assert "16" in str(info.value) and "12" in str(info.value)


def test_unknown_dtype_code(tmp_path):
    p = tmp_path / "x.tns"
    write_tensor(p, np.ones((2,), np.float32))
    raw = bytearray(p.read_bytes())
    raw[8:12] = struct.pack("<I", 99)
    p.write_bytes(bytes(raw))
    with pytest.raises(UnknownDtypeError):
        read_tensor(p)


def test_errors_are_distinct():
    assert len({BadMagicError, TruncatedPayloadError, UnknownDtypeError}) == 3
    assert not issubclass(BadMagicError, TruncatedPayloadError)


def test_rejects_unsupported_and_empty(tmp_path):
    with pytest.raises(UnknownDtypeError):
        write_tensor(tmp_path / "i.tns", np.ones(3, dtype=np.int32))
    with pytest.raises(ValueError):
        write_tensor(tmp_path / "e.tns", np.ones((0, 3), dtype=np.float32))


dtypes = st.sampled_from(["<f4", "<f8", "<c8", "<c16"])


@settings(max_examples=60, deadline=None)
@given(dtypes, st.lists(st.integers(1, 5), min_size=1, max_size=4), st.integers(0, 2**32 - 1))
def test_roundtrip_bit_exact(dtype, dims, seed):
    rng = np.random.default_rng(seed)
    n = int(np.prod(dims))
    dt = np.dtype(dtype)
    # random bit patterns, including NaN payloads and infinities
    raw = rng.integers(0, 256, size=n * dt.itemsize, dtype=np.uint8).tobytes()
    t = np.frombuffer(raw, dtype=dt).reshape(dims)
    back = tensorio.decode_tensor(tensorio.encode_tensor(t))
    assert back.shape == tuple(dims)
    assert back.tobytes() == t.tobytes()


def test_manifest_roundtrip(tmp_path):
    (tmp_path / "frames").mkdir()
    write_tensor(tmp_path / "frames" / "0.tns", np.zeros((2, 3), np.complex64))
    entries = [
        ManifestEntry(0, 1704067200.25, "frames/0.tns", WeatherLabel(1.5, 12.0), "rain", {"tx_path": "tx.tns"}),
        ManifestEntry(1, 1704067300.0, "frames/0.tns", None, "no_rain"),
    ]
    write_manifest(tmp_path / "m.jsonl", entries)
    lines = (tmp_path / "m.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith('{"frame_id":0,"timestamp":1704067200.25,"tensor_path":')
    back = read_manifest(tmp_path / "m.jsonl")
    assert list(back) == entries
    assert back[0].extra == {"tx_path": "tx.tns"}
    back.validate(tmp_path, expected_dims=(2, 3))
    with pytest.raises(ValueError):
        back.validate(tmp_path, expected_dims=(3, 3))


def test_manifest_duplicate_ids(tmp_path):
    e = ManifestEntry(0, 0.0, "a.tns", None, "no_rain")
    write_manifest(tmp_path / "m.jsonl", [e, e])
    with pytest.raises(ValueError, match="duplicate"):
        read_manifest(tmp_path / "m.jsonl")
