from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msprcapon.beamformers import MsprConfig, WeightVector, capon_weights
from msprcapon.manifold import ArrayGeometry, steering_vector
from msprcapon.metrics import (
    SINR_FLOOR_DB,
    BeamPattern,
    CampaignConfig,
    beam_pattern,
    evaluate_sinr,
    run_campaign,
    sinr_db,
)
from msprcapon.scene import Scene, analytic_covariance


def test_matched_pattern_peaks_at_steer(manifold, geometry):
    a0 = steering_vector(geometry, 20.0)
    bp = beam_pattern(WeightVector(a0 / 8, a0), manifold)
    assert bp.gains_db.max() == 0.0
    assert bp.angles_deg[np.argmax(bp.gains_db)] == 20.0
    assert bp.raw_gains[110] == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(bp.gains_db, 10 * np.log10(bp.raw_gains / bp.raw_gains.max()))


def test_uniform_first_null(manifold, geometry):
    # first null of an M-element half-wavelength ULA: sin(theta) = 1/(M d) = 0.25
    expected = np.rad2deg(np.arcsin(1 / (8 * 0.5)))
    bp = beam_pattern(np.ones(8) / 8, manifold)
    right = bp.gains_db[90:]
    first_null = 90 + np.argmax((right[1:-1] < right[:-2]) & (right[1:-1] < right[2:])) + 1
    assert abs(bp.angles_deg[first_null] - expected) <= 0.5


def test_capon_pattern_dips_at_interferers(paper_scene, geometry, manifold):
    w = capon_weights(analytic_covariance(paper_scene, geometry), steering_vector(geometry, 0.0))
    bp = beam_pattern(w, manifold)
    for doa in (-30.0, 30.0, 70.0):
        assert bp.gain_at(doa) < -30


def test_pattern_from_raw_normalises():
    bp = BeamPattern.from_raw([-90.0, 0.0, 90.0], [0.5, 2.0, 0.0])
    assert bp.gains_db[1] == 0.0
    assert bp.gains_db[2] == -np.inf


def test_sinr_array_gain(geometry):
    scene = Scene(0.0, 10.0, (), 1.0, 100)
    a0 = steering_vector(geometry, 0.0)
    assert sinr_db(a0 / 8, scene, geometry) == pytest.approx(10 * np.log10(80), abs=1e-12)
    assert sinr_db(a0 / 8, scene, geometry) == pytest.approx(19.03, abs=5e-3)


def test_sinr_zero_numerator_clamps(geometry):
    scene = Scene(0.0, 10.0, (), 1.0, 100)
    w = np.zeros(8, dtype=complex)
    w[0], w[1] = 1, -1  # orthogonal to a(0) = ones
    res = evaluate_sinr(w, scene, geometry)
    assert res.clamped and res.db == SINR_FLOOR_DB


def test_sinr_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        sinr_db(np.zeros(4), Scene(0.0, 1.0, (), 1.0, 1), ArrayGeometry(4, 0.5))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    mag=st.floats(1e-3, 1e3),
    phase=st.floats(0, 2 * np.pi),
)
def test_sinr_scale_invariant(seed, mag, phase):
    geometry = ArrayGeometry(8, 0.5)
    scene = Scene(0.0, 10.0, ((-30.0, 100.0), (70.0, 1e4)), 1.0, 100)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    base = sinr_db(w, scene, geometry)
    assert sinr_db(mag * np.exp(1j * phase) * w, scene, geometry) == pytest.approx(base, abs=1e-10)


def test_sinr_uses_true_doa_not_steering(geometry):
    # steered to 4 deg, evaluated against the true SOI at 0 deg
    scene = Scene(0.0, 10.0, (), 1.0, 100)
    a4 = steering_vector(geometry, 4.0)
    assert sinr_db(a4 / 8, scene, geometry) < 10 * np.log10(80)


@pytest.fixture
def small_config():
    return CampaignConfig(num_trials=20, master_seed=5)


def test_campaign_deterministic(small_config):
    one = replace(small_config, num_trials=1)
    a, b = run_campaign(one), run_campaign(one)
    assert a.capon.per_trial_sinr_db == b.capon.per_trial_sinr_db
    assert a.mspr.per_trial_sinr_db == b.mspr.per_trial_sinr_db
    assert a.mspr.mean_pattern.raw_gains.tobytes() == b.mspr.mean_pattern.raw_gains.tobytes()


def test_campaign_order_independent(small_config):
    serial = run_campaign(small_config)
    parallel = run_campaign(small_config, workers=3)
    assert serial.mspr.per_trial_sinr_db == parallel.mspr.per_trial_sinr_db
    assert serial.capon.mean_sinr_db == parallel.capon.mean_sinr_db
    assert serial.mspr.mean_pattern.raw_gains.tobytes() == parallel.mspr.mean_pattern.raw_gains.tobytes()


def test_campaign_prefix_stable(small_config):
    # trial t's draw does not depend on how many trials run
    short = run_campaign(replace(small_config, num_trials=5))
    assert short.capon.per_trial_sinr_db == run_campaign(small_config).capon.per_trial_sinr_db[:5]


def test_campaign_result_shape(small_config):
    res = run_campaign(small_config)
    assert res.num_trials == 20
    for m in ("capon", "mspr"):
        s = res.methods[m]
        assert len(s.per_trial_sinr_db) == 20
        assert s.mean_sinr_db == pytest.approx(np.mean(s.per_trial_sinr_db))
        assert s.mean_pattern.gains_db.max() == 0.0
        assert s.mean_pattern.gains_db.shape == (181,)
    assert res.converged_fraction == 1.0
    assert res.mean_iterations >= 1
    assert res.failed_trials == ()


def test_campaign_records_failed_trials():
    # one snapshot: rank-one sample covariance, Capon cannot be solved without loading
    cfg = CampaignConfig(scene=Scene(0.0, 10.0, (), 1.0, num_snapshots=1), num_trials=3)
    with pytest.raises(RuntimeError, match="all 3 trials failed"):
        run_campaign(cfg)
    ok = run_campaign(replace(cfg, diagonal_loading=1e-3))
    assert ok.failed_trials == ()


def test_campaign_partial_failure_is_counted(monkeypatch, small_config):
    import msprcapon.metrics as metrics
    real = metrics.capon_weights

    def flaky(r, a0, calls=[0]):
        calls[0] += 1
        if calls[0] == 3:
            raise np.linalg.LinAlgError("boom")
        return real(r, a0)

    monkeypatch.setattr(metrics, "capon_weights", flaky)
    res = run_campaign(replace(small_config, num_trials=5))
    assert res.failed_trials == (2,)
    assert np.isnan(res.capon.per_trial_sinr_db[2])
    assert np.isfinite(res.capon.mean_sinr_db)
    assert res.trials[2].error == "boom"


def test_campaign_config_validation():
    with pytest.raises(ValueError):
        CampaignConfig(num_trials=0)
    with pytest.raises(ValueError):
        CampaignConfig(steer_angle_deg=85.0)
    with pytest.raises(ValueError):
        CampaignConfig(steer_angle_deg=0.5)
    with pytest.raises(ValueError):
        CampaignConfig(master_seed=-1)


def test_mspr_gamma_zero_campaign_equals_capon(small_config):
    res = run_campaign(replace(small_config, mspr=MsprConfig(gamma=0.0)))
    np.testing.assert_allclose(res.mspr.per_trial_sinr_db, res.capon.per_trial_sinr_db, atol=1e-8)


def test_capon_sample_covariance_loss_matches_theory():
    # Signal-present sample-matrix MVDR: SINR ~ SINR_opt / (1 + SINR_opt (M-1)/K)
    from msprcapon.scene import interference_plus_noise_covariance

    cfg = CampaignConfig(num_trials=500, master_seed=77)
    a0 = steering_vector(cfg.geometry, 0.0)
    rin = interference_plus_noise_covariance(cfg.scene, cfg.geometry)
    opt = cfg.scene.soi_power * np.vdot(a0, np.linalg.solve(rin, a0)).real
    m, k = cfg.geometry.num_sensors, cfg.scene.num_snapshots
    predicted_db = 10 * np.log10(opt / (1 + opt * (m - 1) / k))
    assert run_campaign(cfg).capon.mean_sinr_db == pytest.approx(predicted_db, abs=0.5)
