"""Snapshot generation and covariance estimation for the narrowband ULA model.

Each snapshot is ``x(k) = s(k) a(theta0) + sum_j beta_j(k) a(theta_j) + n(k)``
with every amplitude and noise entry drawn independently from a zero-mean
circular complex Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifold import ArrayGeometry, DomainError, steering_matrix, steering_vector


@dataclass(frozen=True)
class Interferer:
    doa_deg: float
    power: float


# 20, 20 and 40 dB INR over unit noise
DEFAULT_INTERFERERS = (Interferer(-30.0, 100.0), Interferer(30.0, 100.0), Interferer(70.0, 10000.0))


@dataclass(frozen=True)
class Scene:
    """Source directions and linear powers; ``noise_power`` is per sensor.

    Defaults: SOI at broadside with 10 dB SNR, interferers at -30, 30 and 70 deg.
    """

    soi_doa_deg: float = 0.0
    soi_power: float = 10.0
    interferers: tuple[Interferer, ...] = DEFAULT_INTERFERERS
    noise_power: float = 1.0
    num_snapshots: int = 100

    def __post_init__(self):
        object.__setattr__(
            self,
            "interferers",
            tuple(i if isinstance(i, Interferer) else Interferer(*i) for i in self.interferers),
        )
        for doa in [self.soi_doa_deg, *(i.doa_deg for i in self.interferers)]:
            if not -90.0 <= doa <= 90.0:
                raise DomainError(f"DOA {doa} deg outside [-90, 90]")
        for p in [self.soi_power, self.noise_power, *(i.power for i in self.interferers)]:
            if not p > 0:
                raise ValueError(f"powers must be positive, got {p!r}")
        if int(self.num_snapshots) != self.num_snapshots or self.num_snapshots < 1:
            raise ValueError(f"num_snapshots must be a positive integer, got {self.num_snapshots!r}")

    @property
    def interference_doas(self) -> np.ndarray:
        return np.array([i.doa_deg for i in self.interferers], dtype=float)

    @property
    def interference_powers(self) -> np.ndarray:
        return np.array([i.power for i in self.interferers], dtype=float)


@dataclass(frozen=True)
class SnapshotBatch:
    samples: np.ndarray = field(repr=False)
    scene: Scene
    seed: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.ndim != 2 or samples.shape[1] != self.scene.num_snapshots:
            raise ValueError(
                f"samples shape {samples.shape} does not match {self.scene.num_snapshots} snapshots"
            )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class CovarianceMatrix:
    matrix: np.ndarray = field(repr=False)
    loading: float = 0.0

    def __post_init__(self):
        r = np.array(self.matrix, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError(f"covariance must be square, got shape {r.shape}")
        if np.max(np.abs(r - r.conj().T)) >= 1e-12 * max(1.0, np.max(np.abs(r))):
            raise ValueError("covariance is not Hermitian")
        if self.loading < 0:
            raise ValueError("loading must be nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, "matrix", r)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def complex_gaussian(rng: np.random.Generator, shape, power: float) -> np.ndarray:
    """Circular complex Gaussian samples, E|z|^2 = power."""
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_snapshots(scene: Scene, geometry: ArrayGeometry, seed: int) -> SnapshotBatch:
    rng = np.random.default_rng(seed)
    k = scene.num_snapshots
    # draw order (SOI, each interferer, noise) is part of the reproducibility contract
    x = np.outer(steering_vector(geometry, scene.soi_doa_deg), complex_gaussian(rng, k, scene.soi_power))
    for intf in scene.interferers:
        x += np.outer(steering_vector(geometry, intf.doa_deg), complex_gaussian(rng, k, intf.power))
    x += complex_gaussian(rng, (geometry.num_sensors, k), scene.noise_power)
    return SnapshotBatch(x, scene, int(seed))


def sample_covariance(batch: SnapshotBatch, loading: float = 0.0) -> CovarianceMatrix:
    """(1/K) sum_k x(k) x(k)^H, symmetrized, plus ``loading`` on the diagonal."""
    x = batch.samples
    r = x @ x.conj().T / x.shape[1]
    r = 0.5 * (r + r.conj().T)
    if loading:
        r = r + loading * np.eye(r.shape[0])
    return CovarianceMatrix(r, float(loading))


def relative_loading(batch: SnapshotBatch, factor: float = 1e-6) -> float:
    """Loading level ``factor * trace(R)/M`` for near-singular estimates (K < M)."""
    x = batch.samples
    return float(factor * np.sum(np.abs(x) ** 2) / x.shape[1] / x.shape[0])


def interference_plus_noise_covariance(scene: Scene, geometry: ArrayGeometry) -> np.ndarray:
    """sum_j sigma_j^2 a(theta_j) a(theta_j)^H + sigma_n^2 I (no SOI term)."""
    r = scene.noise_power * np.eye(geometry.num_sensors, dtype=complex)
    if scene.interferers:
        a = steering_matrix(geometry, scene.interference_doas)
        r = r + (a * scene.interference_powers) @ a.conj().T
    return r


def analytic_covariance(scene: Scene, geometry: ArrayGeometry) -> CovarianceMatrix:
    a0 = steering_vector(geometry, scene.soi_doa_deg)
    r = scene.soi_power * np.outer(a0, a0.conj()) + interference_plus_noise_covariance(scene, geometry)
    return CovarianceMatrix(0.5 * (r + r.conj().T))


def derive_seed(master_seed: int, trial: int) -> int:
    """Per-trial seed; depends only on (master_seed, trial) so trials can run in any order."""
    ss = np.random.SeedSequence([int(master_seed), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
