"""Capon (MVDR) and MSPR-Capon beamformers.

The MSPR-Capon weights minimise

    w^H R w + gamma * [(||w^H A_M||^2 - 1)^2 + ||w^H A_S||^2]   s.t.  w^H a0 = 1

where A_M / A_S hold the mainlobe / sidelobe columns of the sampled manifold.
Stationarity of the Lagrangian gives ``B(w) w = -mu a0`` with

    B(w) = R + gamma (2 w^H A_M A_M^H w - 2) A_M A_M^H + gamma A_S A_S^H,

which is solved as a fixed-point iteration ``w <- B(w)^-1 a0 / (a0^H B(w)^-1 a0)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .manifold import ManifoldPartition
from .scene import CovarianceMatrix, SnapshotBatch

log = logging.getLogger(__name__)

_HERMITIAN_TOL = 1e-10
_IMAG_TOL = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    """A system matrix could not be factorised; ``iteration`` is set for MSPR steps."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray = field(repr=False)
    steering: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex)
        a0 = np.array(self.steering, dtype=complex)
        if w.shape != a0.shape or w.ndim != 1:
            raise ValueError(f"weights {w.shape} and steering {a0.shape} must be equal-length vectors")
        if abs(np.vdot(w, a0) - 1.0) >= 1e-8:
            raise ValueError(f"weights violate w^H a0 = 1 (residual {abs(np.vdot(w, a0) - 1.0):.2e})")
        w.setflags(write=False)
        a0.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "steering", a0)

    @property
    def constraint_residual(self) -> float:
        """|w^H a0 - 1|."""
        return float(abs(np.vdot(self.weights, self.steering) - 1.0))


@dataclass(frozen=True)
class MsprConfig:
    gamma: float = 1.0
    max_iterations: int = 200
    rel_tolerance: float = 1e-8
    relaxation: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        if not self.rel_tolerance > 0:
            raise ValueError(f"rel_tolerance must be > 0, got {self.rel_tolerance!r}")
        if not 0 < self.relaxation <= 1:
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation!r}")


@dataclass(frozen=True)
class MsprSolveReport:
    weights: WeightVector
    iterations_used: int
    converged: bool
    constraint_residual: float
    stationarity_residual: float
    mu: complex
    iterate_deltas: tuple[float, ...]


def _as_matrix(r) -> np.ndarray:
    return r.matrix if isinstance(r, CovarianceMatrix) else np.asarray(r, dtype=complex)


def _hermitian_solve(b: np.ndarray, rhs: np.ndarray, what: str, iteration=None) -> np.ndarray:
    """Solve b z = rhs with a symmetric-indefinite (Bunch-Kaufman) factorisation."""
    scale = max(1.0, float(np.max(np.abs(b))))
    if np.max(np.abs(b - b.conj().T)) > _HERMITIAN_TOL * scale:
        raise ValueError(f"{what} is not Hermitian")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(b, rhs, assume_a="her", check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        where = "" if iteration is None else f" at iteration {iteration}"
        raise SingularMatrixError(f"{what} is singular or ill-conditioned{where}: {exc}", iteration) from exc


def _distortionless(z: np.ndarray, a0: np.ndarray) -> np.ndarray:
    # a0^H z is real in exact arithmetic (z = B^-1 a0, B Hermitian); dividing by
    # the complex value keeps w^H a0 = 1 to rounding.
    return z / np.vdot(a0, z)


def capon_weights(R, a0) -> WeightVector:
    """
    Closed-form MVDR weights ``R^-1 a0 / (a0^H R^-1 a0)``.

    Raises
    ------
    ValueError
        If ``R`` is not Hermitian.
    SingularMatrixError
        If ``R`` cannot be factorised.
    """
    r = _as_matrix(R)
    a0 = np.asarray(a0, dtype=complex)
    z = _hermitian_solve(r, a0, "covariance matrix")
    return WeightVector(_distortionless(z, a0), a0)


def _real_quadratic(w: np.ndarray, g: np.ndarray, what: str) -> float:
    q = np.vdot(w, g @ w)
    if abs(q.imag) > _IMAG_TOL * max(1.0, abs(q.real)):
        raise ValueError(f"{what} has imaginary residue {q.imag:.3e}")
    return float(q.real)


def _weights(w) -> np.ndarray:
    return w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=complex)


def mspr_objective(w, R, partition: ManifoldPartition, gamma: float) -> float:
    w = _weights(w)
    r = _as_matrix(R)
    power = _real_quadratic(w, r, "w^H R w")
    if gamma == 0:
        return power
    main = float(np.sum(np.abs(w.conj() @ partition.mainlobe) ** 2))
    side = float(np.sum(np.abs(w.conj() @ partition.sidelobe) ** 2))
    return power + gamma * ((main - 1.0) ** 2 + side)


def system_matrix(w, R, partition: ManifoldPartition, gamma: float) -> np.ndarray:
    """B(w) = R + gamma (2 q - 2) A_M A_M^H + gamma A_S A_S^H, q = w^H A_M A_M^H w."""
    w = _weights(w)
    r = _as_matrix(R)
    if gamma == 0:
        return r.copy()
    gm = partition.mainlobe_gram
    q = _real_quadratic(w, gm, "mainlobe power")
    return r + gamma * (2.0 * q - 2.0) * gm + gamma * partition.sidelobe_gram


def lagrangian_gradient(w, mu: complex, R, partition: ManifoldPartition, gamma: float) -> np.ndarray:
    """Derivative of the Lagrangian with respect to w^H (Wirtinger convention)."""
    w = _weights(w)
    a0 = partition.mainlobe[:, partition.half_width_bins]
    r = _as_matrix(R)
    gm = partition.mainlobe_gram
    q = np.vdot(w, gm @ w).real
    return (
        r @ w
        + gamma * (q - 1.0) * (2.0 * gm @ w)
        + gamma * (partition.sidelobe_gram @ w)
        + mu * a0
    )


def implied_multiplier(w, R, partition: ManifoldPartition, gamma: float, a0) -> complex:
    """mu = -1 / (a0^H B(w)^-1 a0)."""
    a0 = np.asarray(a0, dtype=complex)
    z = _hermitian_solve(system_matrix(w, R, partition, gamma), a0, "MSPR system matrix")
    return complex(-1.0 / np.vdot(a0, z))


def mspr_step(w_i, R, partition: ManifoldPartition, gamma: float, a0, iteration: int | None = None) -> np.ndarray:
    """One fixed-point update ``B(w_i)^-1 a0 / (a0^H B(w_i)^-1 a0)``."""
    a0 = np.asarray(a0, dtype=complex)
    b = system_matrix(w_i, R, partition, gamma)
    z = _hermitian_solve(b, a0, "MSPR system matrix", iteration)
    return _distortionless(z, a0)


def mspr_solve(
    R,
    partition: ManifoldPartition,
    config: MsprConfig,
    a0,
    w_init: WeightVector | None = None,
) -> MsprSolveReport:
    """
    Iterate the MSPR fixed point from ``w_init`` (Capon weights by default).

    Stops when ``||w(i+1) - w(i)|| / ||w(i+1)|| < rel_tolerance``. Hitting
    ``max_iterations`` is not an error: the report carries ``converged=False``
    and the visited iterate with the lowest objective.
    """
    a0 = np.asarray(a0, dtype=complex)
    r = _as_matrix(R)
    gamma = config.gamma
    w = (w_init if w_init is not None else capon_weights(r, a0)).weights.copy()

    deltas: list[float] = []
    converged = False
    best_w, best_obj = w, mspr_objective(w, r, partition, gamma)
    for it in range(1, config.max_iterations + 1):
        stepped = mspr_step(w, r, partition, gamma, a0, iteration=it)
        w_next = stepped if config.relaxation == 1.0 else (1 - config.relaxation) * w + config.relaxation * stepped
        delta = float(np.linalg.norm(w_next - w))
        deltas.append(delta)
        w = w_next
        if delta < config.rel_tolerance * np.linalg.norm(w):
            converged = True
            break
        obj = mspr_objective(w, r, partition, gamma)
        if obj < best_obj:
            best_w, best_obj = w, obj

    if not converged:
        log.debug("MSPR iteration did not converge in %d steps", config.max_iterations)
        w = best_w

    mu = implied_multiplier(w, r, partition, gamma, a0)
    grad = lagrangian_gradient(w, mu, r, partition, gamma)
    weights = WeightVector(w, a0)
    return MsprSolveReport(
        weights=weights,
        iterations_used=len(deltas),
        converged=converged,
        constraint_residual=weights.constraint_residual,
        stationarity_residual=float(np.linalg.norm(grad)),
        mu=mu,
        iterate_deltas=tuple(deltas),
    )


def beamformer_output(w, batch: SnapshotBatch) -> np.ndarray:
    """y(k) = w^H x(k) for every snapshot."""
    w = _weights(w)
    x = batch.samples
    if x.shape[0] != w.shape[0]:
        raise ValueError(f"weights have {w.shape[0]} entries but snapshots have {x.shape[0]} sensors")
    return w.conj() @ x
