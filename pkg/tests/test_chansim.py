import hashlib

import numpy as np
import pytest

from csplab.chansim import (ArrayGeometry, DatasetConfig, DmrsPattern, FormatError, OfdmNumerology,
                            PathSet, apply_dmrs_observation, generate_dataset, interpolate_pilots,
                            max_doppler, read_mcsp, sample_paths, synth_channel, synthesize_user,
                            upa_steering)
from csplab.numcore import RngStream

GEOM = ArrayGeometry()
NUM = OfdmNumerology()


def naive_channel(paths, f_k, t_s, geom):
    """Loop-by-loop evaluation of the multipath sum."""
    n_t = geom.n_t
    out = np.zeros((n_t, len(f_k), len(t_s)), dtype=complex)
    for a in range(n_t):
        m, n = divmod(a, geom.n_v)
        for i, f in enumerate(f_k):
            for j, t in enumerate(t_s):
                for l in range(len(paths)):
                    th, ph = paths.theta[l], paths.phi[l]
                    steer = np.exp(1j * 2 * np.pi * geom.spacing * (m * np.sin(th) * np.cos(ph) + n * np.sin(ph)))
                    out[a, i, j] += (paths.alpha[l] * steer * np.exp(-2j * np.pi * f * paths.tau[l])
                                     * np.exp(2j * np.pi * paths.f_d[l] * t))
    return out


# --- numerology and steering -------------------------------------------------

def test_band_bandwidth():
    assert NUM.band_bandwidth() == pytest.approx(8.64e6)


def test_fdd_dl_band_contiguous_above_ul():
    fdd = OfdmNumerology(duplex="fdd")
    ul, dl = fdd.rb_frequencies("ul"), fdd.rb_frequencies("dl")
    assert dl[0] - ul[-1] == pytest.approx(fdd.rb_bandwidth)
    assert np.all(np.diff(dl) > 0) and dl.min() > ul.max()


def test_tdd_bands_identical():
    np.testing.assert_array_equal(NUM.rb_frequencies("ul"), NUM.rb_frequencies("dl"))


def test_steering_broadside():
    np.testing.assert_array_equal(upa_steering(0.0, 0.0, ArrayGeometry(3, 2)), np.ones(6))


def test_steering_unit_modulus_and_norm():
    rng = np.random.default_rng(0)
    v = upa_steering(rng.uniform(-4, 4, 50), rng.uniform(-4, 4, 50), ArrayGeometry(4, 4))
    assert np.max(np.abs(np.abs(v) - 1.0)) < 1e-12
    np.testing.assert_allclose(np.linalg.norm(v, axis=-1), 4.0, atol=1e-12)


def test_steering_half_turn():
    v = upa_steering(np.pi / 2, 0.0, ArrayGeometry(2, 2, 0.5))
    np.testing.assert_allclose(np.abs(np.angle(v)), [0, 0, np.pi, np.pi], atol=1e-12)
    np.testing.assert_allclose(v, [1, 1, -1, -1], atol=1e-12)


# --- path sampling ----------------------------------------------------------

def test_doppler_bound_100kmh():
    bound = 100 / 3.6 * 2.4e9 / 3e8
    assert bound <= 222.3
    assert max_doppler(100, 2.4e9) == pytest.approx(bound)
    for i in range(200):
        p = sample_paths(RngStream(0, i), 100.0)
        assert np.all(np.abs(p.f_d) <= 222.3)


def test_sample_paths_deterministic():
    a = sample_paths(RngStream(5, 1), 40.0)
    b = sample_paths(RngStream(5, 1), 40.0)
    for f in ("alpha", "tau", "theta", "phi", "f_d"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_sample_paths_energy_normalised():
    e = [np.sum(np.abs(sample_paths(RngStream(1, i), 50.0).alpha) ** 2) for i in range(10_000)]
    assert abs(np.mean(e) - 1.0) < 0.05


def test_sample_paths_ranges():
    p = sample_paths(RngStream(2), 30.0, n_paths=500)
    assert len(p) == 500
    assert p.tau.min() >= 0 and p.tau.max() <= 2.5e-6
    assert np.all(np.abs(p.theta) <= np.pi / 3) and np.all(np.abs(p.phi) <= np.pi / 9)


def test_sample_paths_rejects_zero():
    with pytest.raises(ValueError):
        sample_paths(RngStream(0), 10.0, n_paths=0)


# --- synthesis --------------------------------------------------------------

def test_synth_matches_naive_sum():
    paths = sample_paths(RngStream(3), 70.0, n_paths=4)
    fdd = OfdmNumerology(k_ul=5, k_dl=5, duplex="fdd")
    slots = np.arange(3, 7)
    for band in ("ul", "dl"):
        got = synth_channel(paths, band, fdd, GEOM, slots)
        ref = naive_channel(paths, fdd.rb_frequencies(band), slots * fdd.t_slot, GEOM)
        np.testing.assert_allclose(got, ref, atol=1e-12)


def test_single_path_static():
    h = synth_channel(PathSet.single(0.7 - 0.2j, tau=1e-6, theta=0.3), "ul", NUM, GEOM, range(10))
    np.testing.assert_allclose(h, np.repeat(h[..., :1], 10, axis=-1), atol=1e-15)


def test_single_path_phase_ratio():
    h = synth_channel(PathSet.single(1.0, tau=4e-7, f_d=50.0), "ul", NUM, GEOM, range(12))
    ratio = h[..., 1:] / h[..., :-1]
    assert np.max(np.abs(ratio - np.exp(2j * np.pi * 50 * 1e-3))) < 1e-12


def test_single_path_zero_delay_flat():
    h = synth_channel(PathSet.single(1.0, f_d=30.0, phi=0.1), "ul", NUM, GEOM, range(4))
    np.testing.assert_allclose(h, np.repeat(h[:, :1], NUM.k_ul, axis=1), atol=1e-15)


def test_doppler_phase_advance_bound():
    for i in range(50):
        v = 10.0 + 90.0 * (i / 49)
        p = sample_paths(RngStream(9, i), v, n_paths=1)
        h = synth_channel(p, "ul", NUM, GEOM, range(20))
        step = np.abs(np.angle(h[..., 1:] / h[..., :-1]))
        assert step.max() <= 2 * np.pi * max_doppler(v, NUM.f_c) * NUM.t_slot + 1e-9


def test_synth_empty_slots():
    with pytest.raises(ValueError):
        synth_channel(PathSet.single(), "ul", NUM, GEOM, [])


def test_synth_slot_subset_bitwise():
    p = sample_paths(RngStream(4), 60.0)
    full = synth_channel(p, "dl", NUM, GEOM, np.arange(20))
    part = synth_channel(p, "dl", NUM, GEOM, np.arange(16, 20))
    assert np.array_equal(full[..., 16:], part)


def test_fdd_frequency_decorrelation():
    fdd = OfdmNumerology(duplex="fdd")
    ul1, ul2, dl48 = [], [], []
    for i in range(1000):
        p = sample_paths(RngStream(11, i), 50.0, max_delay=2.5e-6, delay_decay=2e-6)
        ul = synth_channel(p, "ul", fdd, ArrayGeometry(1, 1), [0])[0, :, 0]
        dl = synth_channel(p, "dl", fdd, ArrayGeometry(1, 1), [0])[0, :, 0]
        ul1.append(ul[0])
        ul2.append(ul[1])
        dl48.append(dl[47])

    def corr(a, b):
        a, b = np.asarray(a), np.asarray(b)
        return abs(np.vdot(a, b)) / np.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)

    assert corr(ul1, dl48) < corr(ul1, ul2)


# --- observation ------------------------------------------------------------

def test_pilot_slots():
    m = DmrsPattern().mask(48, 16)
    assert list(np.flatnonzero(m[0])) == [0, 2, 4, 6, 8, 10, 12, 14]
    assert m.all(axis=1).sum() == 0 and m.any(axis=1).all()


@pytest.mark.parametrize("ss,rs", [(1, 1), (2, 1), (2, 3), (4, 2)])
def test_mask_density(ss, rs):
    m = DmrsPattern(ss, rs).mask(48, 16)
    assert m.mean() == pytest.approx(1 / (ss * rs))


def test_noiseless_pilots_exact():
    rng = np.random.default_rng(0)
    h = rng.normal(size=(6, 8)) + 1j * rng.normal(size=(6, 8))
    obs, mask = apply_dmrs_observation(h, DmrsPattern(snr_db=np.inf), RngStream(0))
    assert np.array_equal(obs[mask], h[mask])
    assert np.all(obs[~mask] == 0)


def test_pilot_snr_calibration():
    rng = np.random.default_rng(1)
    h = rng.normal(size=(500, 400)) + 1j * rng.normal(size=(500, 400))
    obs, mask = apply_dmrs_observation(h, DmrsPattern(), RngStream(7))
    assert mask.sum() >= 100_000
    noise = obs[mask] - h[mask]
    snr = 10 * np.log10(np.mean(np.abs(h[mask]) ** 2) / np.mean(np.abs(noise) ** 2))
    assert abs(snr - 20.0) <= 0.5


def test_interp_midpoint():
    obs = np.array([[0, 0, 2, 0]], dtype=complex)
    mask = np.array([[True, False, True, False]])
    out = interpolate_pilots(obs, mask)
    np.testing.assert_allclose(out, [[0, 1, 2, 2]])


def test_interp_full_mask_identity():
    h = np.arange(12).reshape(3, 4) * (1 + 0.5j)
    np.testing.assert_array_equal(interpolate_pilots(h, np.ones((3, 4), bool)), h)


def test_interp_linear_recovery():
    t = np.arange(16)
    truth = np.outer(np.arange(1, 5), (1 + 2j) * t + (3 - 1j))
    obs, mask = apply_dmrs_observation(truth, DmrsPattern(snr_db=np.inf), RngStream(0))
    out = interpolate_pilots(obs, mask)
    np.testing.assert_allclose(out[:, :15], truth[:, :15], atol=1e-12)
    np.testing.assert_array_equal(out[:, 15], out[:, 14])


def test_interp_rows_without_pilots():
    mask = DmrsPattern(rb_stride=2, snr_db=np.inf).mask(5, 4)
    truth = np.outer(np.arange(5.0), np.ones(4)).astype(complex)
    out = interpolate_pilots(np.where(mask, truth, 0), mask)
    np.testing.assert_allclose(out, truth, atol=1e-12)


def test_interp_empty_mask():
    with pytest.raises(ValueError):
        interpolate_pilots(np.zeros((2, 2), complex), np.zeros((2, 2), bool))


# --- datasets ---------------------------------------------------------------

SMALL = dict(count=3, K=8, P=8, L=2)


def test_dataset_sample_count(tmp_path):
    ds = generate_dataset(DatasetConfig(count=10, K=4, P=4, L=2), 0, tmp_path / "a.mcsp")
    assert len(ds) == 40
    assert read_mcsp(tmp_path / "a.mcsp").header["sample_count"] == 40


def test_dataset_determinism(tmp_path):
    cfg = DatasetConfig(**SMALL, duplex="fdd")
    generate_dataset(cfg, 42, tmp_path / "a.mcsp")
    generate_dataset(cfg, 42, tmp_path / "b.mcsp")
    da = hashlib.sha256((tmp_path / "a.mcsp").read_bytes()).hexdigest()
    db = hashlib.sha256((tmp_path / "b.mcsp").read_bytes()).hexdigest()
    assert da == db
    generate_dataset(cfg, 43, tmp_path / "c.mcsp")
    assert hashlib.sha256((tmp_path / "c.mcsp").read_bytes()).hexdigest() != da


def test_dataset_round_trip(tmp_path):
    ds = generate_dataset(DatasetConfig(**SMALL), 1, tmp_path / "a.mcsp")
    back = read_mcsp(tmp_path / "a.mcsp")
    assert np.array_equal(back.ul, ds.ul) and np.array_equal(back.dl, ds.dl)
    assert np.array_equal(back.velocity, ds.velocity)
    assert back.header["K"] == 8 and back.header["duplex"] == "tdd"
    s = back[5]
    assert s.ul_history.shape == (8, 8) and s.dl_target.shape == (8, 2) and s.antenna_index == 1


def test_dataset_layout_bytes(tmp_path):
    cfg = DatasetConfig(count=1, K=2, P=2, L=1, n_h=1, n_v=1)
    ds = generate_dataset(cfg, 0, tmp_path / "a.mcsp")
    blob = (tmp_path / "a.mcsp").read_bytes()
    assert blob[:4] == b"MCSP"
    version, hlen = np.frombuffer(blob[4:12], "<u4")
    assert version == 1
    body = np.frombuffer(blob[12 + hlen:], "<f4")
    assert body.size == 1 + 2 * 2 * 2 + 2 * 1 * 2
    assert body[0] == np.float32(ds.velocity[0])
    assert body[1] == np.float32(ds.ul[0, 0, 0].real) and body[2] == np.float32(ds.ul[0, 0, 0].imag)
    assert body[3] == np.float32(ds.ul[0, 0, 1].real)


def test_read_rejects_garbage(tmp_path):
    (tmp_path / "x").write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(FormatError):
        read_mcsp(tmp_path / "x")
    ds = generate_dataset(DatasetConfig(**SMALL), 1, tmp_path / "a.mcsp")
    blob = (tmp_path / "a.mcsp").read_bytes()
    (tmp_path / "t").write_bytes(blob[:-4])
    with pytest.raises(FormatError):
        read_mcsp(tmp_path / "t")
    assert len(ds) == 12


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        generate_dataset(DatasetConfig(count=1, K=2, P=2, L=1), 0, tmp_path / "missing" / "a.mcsp")


def test_tdd_pilot_target_consistency():
    cfg = DatasetConfig(**SMALL)
    u = synthesize_user(cfg, 3, 0)
    # the same band and paths evaluated over the target slots as "uplink"
    ul_future = synth_channel(u.paths, "ul", cfg.numerology, cfg.geometry, np.arange(cfg.P, cfg.P + cfg.L))
    assert np.array_equal(ul_future, u.dl)
    # and the clean history at pilot positions is what was observed before noise
    clean = synth_channel(u.paths, "dl", cfg.numerology, cfg.geometry, np.arange(cfg.P))
    assert np.array_equal(clean[:, u.mask], u.ul_clean[:, u.mask])


def test_dl_target_direct_evaluation():
    for duplex in ("tdd", "fdd"):
        cfg = DatasetConfig(**SMALL, duplex=duplex)
        u = synthesize_user(cfg, 8, 2)
        direct = synth_channel(u.paths, "dl", cfg.numerology, cfg.geometry, np.arange(cfg.P, cfg.P + cfg.L))
        assert np.array_equal(direct, u.dl)


def test_user_independent_of_order():
    cfg = DatasetConfig(**SMALL)
    late = synthesize_user(cfg, 1, 2)
    for i in range(3):
        synthesize_user(cfg, 1, i)
    again = synthesize_user(cfg, 1, 2)
    assert np.array_equal(late.ul_observed, again.ul_observed)


def test_splits_differ():
    a = synthesize_user(DatasetConfig(**SMALL, split="train"), 1, 0)
    b = synthesize_user(DatasetConfig(**SMALL, split="test"), 1, 0)
    assert not np.array_equal(a.dl, b.dl)


def test_velocities_from_configured_set():
    ds = generate_dataset(DatasetConfig(count=20, K=2, P=2, L=1, velocities=[30.0, 70.0]), 0)
    assert set(np.unique(ds.velocity)) == {30.0, 70.0}


def test_config_validation():
    with pytest.raises(ValueError):
        DatasetConfig(duplex="xdd")
    with pytest.raises(ValueError):
        DatasetConfig.from_dict({"bogus": 1})
