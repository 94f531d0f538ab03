import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_weather import chansim, clutter, csi, ofdm, radar
from isac_weather.ofdm import DESK_PROFILE


def _frame(scatterers, seed, noise=1e-4, cfg=DESK_PROFILE, tx_seed=1):
    tx = ofdm.generate_test_frame(cfg, tx_seed)
    scene = chansim.WeatherScene(static_clutter=tuple(scatterers), noise_floor_power=noise, seed=seed)
    rx = chansim.simulate_rx(tx, scene, cfg)
    return csi.zero_pad(csi.estimate_csi(rx, tx, seed))


def _bin_power_db(pg, rc):
    return 10 * np.log10(np.abs(pg.values[rc]) ** 2)


@pytest.fixture(scope="module")
def static_setup():
    cfg = DESK_PROFILE
    rbin = ofdm.range_resolution(cfg)
    vbin = ofdm.doppler_resolution(cfg)
    r0 = 40 * rbin
    static = chansim.Scatterer(r0, 0.0, 1.0, 0.0)
    calib = [_frame([static], seed=100 + i) for i in range(8)]
    basis = clutter.fit_clutter_basis(calib, energy_fraction=0.99)
    mover = chansim.Scatterer(r0, 3 * vbin, 0.5, 0.0)
    return cfg, static, mover, basis


def test_static_scatterer_suppressed(static_setup):
    cfg, static, _, basis = static_setup
    n_prime, m_prime = 64, 16
    h = _frame([static], seed=5)
    before = radar.periodogram(h, n_prime, m_prime, cfg)
    after = radar.periodogram(clutter.remove_clutter(h, basis), n_prime, m_prime, cfg)
    rc = radar.expected_bin(cfg, static.range, 0.0, m_prime)
    drop = _bin_power_db(before, rc) - _bin_power_db(after, rc)
    assert drop >= 20.0


def test_moving_scatterer_preserved(static_setup):
    cfg, static, mover, basis = static_setup
    n_prime, m_prime = 64, 16
    h = _frame([static, mover], seed=6)
    before = radar.periodogram(h, n_prime, m_prime, cfg)
    after = radar.periodogram(clutter.remove_clutter(h, basis), n_prime, m_prime, cfg)
    rc = radar.expected_bin(cfg, mover.range, mover.radial_speed, m_prime)
    loss = _bin_power_db(before, rc) - _bin_power_db(after, rc)
    assert abs(loss) < 1.0
    # and the static bin is still down
    rs = radar.expected_bin(cfg, static.range, 0.0, m_prime)
    assert _bin_power_db(before, rs) - _bin_power_db(after, rs) >= 20.0


def _random_basis(rng, n, m, k):
    X = rng.standard_normal((n * m, k)) + 1j * rng.standard_normal((n * m, k))
    snaps = [csi.CsiMatrix(X[:, i].reshape(n, m), "padded") for i in range(k)]
    return clutter.fit_clutter_basis(snaps, energy_fraction=1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 4, 8]), st.sampled_from([2, 4, 8]), st.integers(1, 4))
def test_projector_idempotent_and_non_expansive(seed, n, m, k):
    rng = np.random.default_rng(seed)
    basis = _random_basis(rng, n, m, k)
    assert basis.rank == min(k, n * m)
    B = basis.basis_vectors
    np.testing.assert_allclose(B.conj().T @ B, np.eye(basis.rank), atol=1e-10)
    h = csi.CsiMatrix(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)), "padded")
    once = clutter.remove_clutter(h, basis)
    twice = clutter.remove_clutter(csi.CsiMatrix(once.values, "padded"), basis)
    assert once.stage == "cleaned"
    np.testing.assert_allclose(twice.values, once.values, atol=1e-10)
    assert np.linalg.norm(once.values) <= np.linalg.norm(h.values) * (1 + 1e-10)


def test_calibration_snapshot_removed_entirely():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((16, 3)) + 0j
    snaps = [csi.CsiMatrix(X[:, i].reshape(4, 4), "padded") for i in range(3)]
    basis = clutter.fit_clutter_basis(snaps, energy_fraction=1.0)
    for s in snaps:
        assert np.linalg.norm(clutter.remove_clutter(s, basis).values) < 1e-10


@pytest.mark.parametrize(
    "sv,f,cap,expected",
    [
        ([3.0, 1.0, 1.0], 0.5, None, 1),  # 9/11
        ([3.0, 1.0, 1.0], 0.9, None, 2),  # 10/11
        ([3.0, 1.0, 1.0], 1.0, None, 3),
        ([3.0, 1.0, 1.0], 1.0, 2, 2),
        ([1.0, 0.0, 0.0], 1.0, None, 1),
    ],
)
def test_select_rank(sv, f, cap, expected):
    assert clutter.select_rank(sv, f, cap) == expected


def test_select_rank_rejects_bad_inputs():
    with pytest.raises(ValueError):
        clutter.select_rank([1.0], 0.0)
    with pytest.raises(ValueError):
        clutter.select_rank([0.0, 0.0], 0.5)


def test_shape_checks():
    basis = clutter.fit_clutter_basis([csi.CsiMatrix(np.eye(4, dtype=complex), "padded")])
    with pytest.raises(ValueError):
        clutter.remove_clutter(csi.CsiMatrix(np.ones((2, 8), complex), "padded"), basis)
    with pytest.raises(ValueError):
        clutter.fit_clutter_basis([])
    with pytest.raises(ValueError):
        clutter.fit_clutter_basis([csi.CsiMatrix(np.eye(4, dtype=complex)), csi.CsiMatrix(np.eye(2, dtype=complex))])


def test_basis_persistence(tmp_path):
    rng = np.random.default_rng(4)
    basis = _random_basis(rng, 4, 4, 3)
    clutter.save_basis(basis, tmp_path / "b")
    back = clutter.load_basis(tmp_path / "b")
    assert back.shape == basis.shape and back.metadata == basis.metadata
    assert np.array_equal(back.basis_vectors, basis.basis_vectors)
