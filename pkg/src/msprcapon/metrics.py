"""Beam patterns, output SINR and the Monte Carlo campaign harness."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .beamformers import MsprConfig, WeightVector, capon_weights, mspr_solve
from .manifold import (
    AngleGrid,
    ArrayGeometry,
    Manifold,
    build_manifold,
    partition_manifold,
    steering_vector,
)
from .scene import (
    Scene,
    derive_seed,
    generate_snapshots,
    interference_plus_noise_covariance,
    sample_covariance,
)

log = logging.getLogger(__name__)

SINR_FLOOR_DB = -300.0
METHODS = ("capon", "mspr")


@dataclass(frozen=True)
class BeamPattern:
    angles_deg: np.ndarray = field(repr=False)
    gains_db: np.ndarray = field(repr=False)
    raw_gains: np.ndarray = field(repr=False)

    @classmethod
    def from_raw(cls, angles_deg, raw_gains) -> "BeamPattern":
        raw = np.asarray(raw_gains, dtype=float)
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(raw / raw.max())
        return cls(np.asarray(angles_deg, dtype=float), db, raw)

    def gain_at(self, angle_deg: float) -> float:
        return float(np.interp(angle_deg, self.angles_deg, self.gains_db))


def array_gains(w, manifold: Manifold) -> np.ndarray:
    """|w^H a(alpha_n)|^2 over the manifold grid."""
    w = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=complex)
    if w.shape[0] != manifold.matrix.shape[0]:
        raise ValueError("weight length does not match the manifold")
    return np.abs(w.conj() @ manifold.matrix) ** 2


def beam_pattern(w, manifold: Manifold) -> BeamPattern:
    return BeamPattern.from_raw(manifold.grid.angles_deg, array_gains(w, manifold))


class Sinr(NamedTuple):
    db: float
    clamped: bool


def evaluate_sinr(w, scene: Scene, geometry: ArrayGeometry) -> Sinr:
    """Output SINR against the true scene; a zero signal term clamps to ``SINR_FLOOR_DB``."""
    w = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=complex)
    a0 = steering_vector(geometry, scene.soi_doa_deg)
    signal = scene.soi_power * abs(np.vdot(w, a0)) ** 2
    denom = np.vdot(w, interference_plus_noise_covariance(scene, geometry) @ w).real
    if not denom > 0:
        raise ZeroDivisionError("interference-plus-noise output power is zero")
    ratio = signal / denom
    if ratio <= 10 ** (SINR_FLOOR_DB / 10):
        return Sinr(SINR_FLOOR_DB, True)
    return Sinr(float(10 * np.log10(ratio)), False)


def sinr_db(w, scene: Scene, geometry: ArrayGeometry) -> float:
    return evaluate_sinr(w, scene, geometry).db


@dataclass(frozen=True)
class CampaignConfig:
    scene: Scene = field(default_factory=Scene)
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    grid: AngleGrid = field(default_factory=AngleGrid.uniform)
    steer_angle_deg: float = 0.0
    half_width_bins: int = 12
    mspr: MsprConfig = field(default_factory=MsprConfig)
    num_trials: int = 1000
    master_seed: int = 0
    diagonal_loading: float = 0.0

    def __post_init__(self):
        if int(self.num_trials) != self.num_trials or self.num_trials < 1:
            raise ValueError(f"num_trials must be >= 1, got {self.num_trials!r}")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ValueError(f"master_seed must be a nonnegative integer, got {self.master_seed!r}")
        if self.diagonal_loading < 0:
            raise ValueError("diagonal_loading must be nonnegative")
        # fail early on an off-grid steer angle or out-of-range window
        partition_manifold(
            build_manifold(ArrayGeometry(2), self.grid), self.steer_angle_deg, self.half_width_bins
        )


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    sinr_db: dict[str, float]
    clamped: dict[str, bool]
    raw_gains: dict[str, np.ndarray] = field(repr=False)
    mspr_iterations: int
    mspr_converged: bool
    error: str | None = None


@dataclass(frozen=True)
class MethodSummary:
    mean_sinr_db: float
    std_sinr_db: float
    per_trial_sinr_db: tuple[float, ...]
    mean_pattern: BeamPattern


@dataclass(frozen=True)
class CampaignResult:
    config: CampaignConfig
    methods: dict[str, MethodSummary]
    trials: tuple[TrialResult, ...] = field(repr=False)
    converged_fraction: float
    mean_iterations: float
    failed_trials: tuple[int, ...]

    @property
    def capon(self) -> MethodSummary:
        return self.methods["capon"]

    @property
    def mspr(self) -> MethodSummary:
        return self.methods["mspr"]

    @property
    def num_trials(self) -> int:
        return len(self.trials)


def run_trial(config: CampaignConfig, trial: int, manifold: Manifold | None = None) -> TrialResult:
    """One Monte Carlo draw: snapshots, sample covariance, both beamformers, SINR."""
    seed = derive_seed(config.master_seed, trial)
    manifold = manifold or build_manifold(config.geometry, config.grid)
    a0 = steering_vector(config.geometry, config.steer_angle_deg)
    partition = partition_manifold(manifold, config.steer_angle_deg, config.half_width_bins)
    try:
        batch = generate_snapshots(config.scene, config.geometry, seed)
        r = sample_covariance(batch, config.diagonal_loading)
        w_capon = capon_weights(r, a0)
        report = mspr_solve(r, partition, config.mspr, a0, w_init=w_capon)
    except (np.linalg.LinAlgError, ValueError) as exc:
        log.warning("trial %d failed: %s", trial, exc)
        nan = float("nan")
        return TrialResult(
            trial, seed,
            {m: nan for m in METHODS}, {m: False for m in METHODS},
            {m: np.full(len(config.grid), np.nan) for m in METHODS},
            0, False, error=str(exc),
        )
    weights = {"capon": w_capon, "mspr": report.weights}
    sinrs = {m: evaluate_sinr(w, config.scene, config.geometry) for m, w in weights.items()}
    return TrialResult(
        trial=trial,
        seed=seed,
        sinr_db={m: s.db for m, s in sinrs.items()},
        clamped={m: s.clamped for m, s in sinrs.items()},
        raw_gains={m: array_gains(w, manifold) for m, w in weights.items()},
        mspr_iterations=report.iterations_used,
        mspr_converged=report.converged,
    )


def _run_chunk(args):
    config, trials = args
    manifold = build_manifold(config.geometry, config.grid)
    return [run_trial(config, t, manifold) for t in trials]


def run_campaign(config: CampaignConfig, workers: int = 1) -> CampaignResult:
    """
    Run ``config.num_trials`` independent trials and aggregate them.

    Each trial's seed depends only on ``(master_seed, trial)``, and aggregation
    sums in ascending trial order, so the result is identical for any ``workers``.
    Failed trials keep NaN entries in the per-trial lists and are excluded from
    the means.
    """
    indices = list(range(config.num_trials))
    if workers > 1:
        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [t for chunk in pool.map(_run_chunk, [(config, c) for c in chunks]) for t in chunk]
        results.sort(key=lambda t: t.trial)
    else:
        results = _run_chunk((config, indices))

    ok = [t for t in results if t.error is None]
    failed = tuple(t.trial for t in results if t.error is not None)
    if not ok:
        raise RuntimeError(f"all {len(results)} trials failed; first error: {results[0].error}")

    methods = {}
    for m in METHODS:
        per_trial = np.array([t.sinr_db[m] for t in results])
        good = per_trial[np.isfinite(per_trial)]
        raw = np.zeros(len(config.grid))
        for t in ok:
            raw = raw + t.raw_gains[m]
        methods[m] = MethodSummary(
            mean_sinr_db=float(np.mean(good)),
            std_sinr_db=float(np.std(good, ddof=1)) if good.size > 1 else 0.0,
            per_trial_sinr_db=tuple(float(v) for v in per_trial),
            mean_pattern=BeamPattern.from_raw(config.grid.angles_deg, raw / len(ok)),
        )
    return CampaignResult(
        config=config,
        methods=methods,
        trials=tuple(results),
        converged_fraction=sum(t.mspr_converged for t in ok) / len(ok),
        mean_iterations=float(np.mean([t.mspr_iterations for t in ok])),
        failed_trials=failed,
    )
