import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msprcapon.manifold import ArrayGeometry, DomainError, steering_vector
from msprcapon.scene import (
    CovarianceMatrix,
    Interferer,
    Scene,
    SnapshotBatch,
    analytic_covariance,
    derive_seed,
    generate_snapshots,
    relative_loading,
    sample_covariance,
)


def _rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_paper_batch_shape(paper_scene, geometry):
    batch = generate_snapshots(paper_scene, geometry, seed=1)
    assert batch.samples.shape == (8, 100)
    assert batch.seed == 1


def test_same_seed_bitwise_identical(paper_scene, geometry):
    a = generate_snapshots(paper_scene, geometry, 7).samples
    b = generate_snapshots(paper_scene, geometry, 7).samples
    assert a.tobytes() == b.tobytes()
    assert generate_snapshots(paper_scene, geometry, 8).samples.tobytes() != a.tobytes()


def test_single_source_converges_to_rank_one(geometry):
    # tiny noise: R_hat -> sigma_s^2 a a^H, error shrinking with K
    errs = []
    for k in (100, 10_000):
        scene = Scene(0.0, 1.0, (), noise_power=1e-12, num_snapshots=k)
        r = sample_covariance(generate_snapshots(scene, geometry, 3)).matrix
        a0 = steering_vector(geometry, 0.0)
        errs.append(_rel_fro(r, np.outer(a0, a0.conj())))
    assert errs[1] < errs[0]
    assert errs[1] < 0.05


def test_single_snapshot_outer_product():
    scene = Scene(0.0, 1.0, (), 1.0, num_snapshots=1)
    batch = SnapshotBatch(np.array([[1.0], [1j]]), scene, 0)
    r = sample_covariance(batch, 0.0).matrix
    np.testing.assert_array_equal(r, [[1, -1j], [1j, 1]])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), loading=st.floats(0.0, 100.0))
def test_loading_shifts_eigenvalues(seed, loading):
    scene = Scene(10.0, 2.0, (Interferer(40.0, 50.0),), 1.0, num_snapshots=5)
    batch = generate_snapshots(scene, ArrayGeometry(6, 0.5), seed)
    base = np.linalg.eigvalsh(sample_covariance(batch).matrix)
    loaded = sample_covariance(batch, loading)
    assert loaded.loading == loading
    np.testing.assert_allclose(np.linalg.eigvalsh(loaded.matrix), base + loading, atol=1e-9 * (1 + base.max()))


def test_sample_covariance_hermitian_psd(paper_scene, geometry):
    r = sample_covariance(generate_snapshots(paper_scene, geometry, 5)).matrix
    assert np.max(np.abs(r - r.conj().T)) < 1e-12
    assert np.linalg.eigvalsh(r).min() >= -1e-10 * np.linalg.norm(r)


def test_paper_scene_sample_vs_analytic(paper_scene, geometry):
    truth = analytic_covariance(paper_scene, geometry).matrix
    errs = [_rel_fro(sample_covariance(generate_snapshots(paper_scene, geometry, s)).matrix, truth)
            for s in range(50)]
    assert np.median(errs) < 0.5


def test_law_of_large_numbers(paper_scene, geometry):
    from dataclasses import replace
    big = replace(paper_scene, num_snapshots=100_000)
    truth = analytic_covariance(big, geometry).matrix
    r = sample_covariance(generate_snapshots(big, geometry, 11)).matrix
    assert _rel_fro(r, truth) < 0.05


def test_circularity(geometry):
    scene = Scene(0.0, 10.0, (Interferer(30.0, 100.0),), 1.0, num_snapshots=200_000)
    x = generate_snapshots(scene, geometry, 4).samples
    power = np.mean(np.abs(x) ** 2)
    assert np.max(np.abs(x.mean(axis=1))) < 0.02 * np.sqrt(power)
    pseudo = x @ x.T / x.shape[1]
    assert np.max(np.abs(pseudo)) < 0.02 * power


def test_analytic_identity_limit(geometry):
    r = analytic_covariance(Scene(0.0, 1e-300, (), 1.0, 10), geometry).matrix
    np.testing.assert_allclose(r, np.eye(8), atol=1e-15)


def test_analytic_single_source_eigenvalues(geometry):
    p = 7.0
    r = analytic_covariance(Scene(25.0, p, (), 1.0, 10), geometry).matrix
    ev = np.sort(np.linalg.eigvalsh(r))
    np.testing.assert_allclose(ev, [1.0] * 7 + [p * 8 + 1], rtol=1e-12)


def test_analytic_trace(paper_scene, geometry):
    r = analytic_covariance(paper_scene, geometry).matrix
    assert np.trace(r).real == pytest.approx(8 * 10211, rel=1e-13)
    assert abs(np.trace(r).imag) < 1e-9


def test_covariance_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        CovarianceMatrix(np.array([[1, 1j], [1j, 1]]))
    with pytest.raises(ValueError):
        CovarianceMatrix(np.eye(2), loading=-1)


def test_scene_validation():
    with pytest.raises(DomainError):
        Scene(95.0, 1.0)
    with pytest.raises(ValueError):
        Scene(0.0, 0.0)
    with pytest.raises(ValueError):
        Scene(0.0, 1.0, ((10.0, -1.0),))
    with pytest.raises(ValueError):
        Scene(0.0, 1.0, num_snapshots=0)
    assert Scene(0.0, 1.0, ((10.0, 2.0),)).interferers == (Interferer(10.0, 2.0),)


def test_relative_loading_makes_short_batch_invertible(geometry):
    batch = generate_snapshots(Scene(0.0, 10.0, (), 1.0, num_snapshots=3), geometry, 0)
    r = sample_covariance(batch, relative_loading(batch))
    assert np.linalg.eigvalsh(r.matrix).min() > 0


def test_derived_seeds():
    seeds = {derive_seed(2011, t) for t in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(2011, 5) == derive_seed(2011, 5)
    assert derive_seed(2011, 5) != derive_seed(2012, 5)
