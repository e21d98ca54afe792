"""Uniform linear array steering vectors and the sampled array manifold."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """An angle or index lies outside the region where it is defined."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA with ``num_sensors`` elements spaced ``spacing_wavelengths`` (d/lambda) apart."""

    num_sensors: int = 8
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if int(self.num_sensors) != self.num_sensors or self.num_sensors < 2:
            raise ValueError(f"num_sensors must be an integer >= 2, got {self.num_sensors!r}")
        if not self.spacing_wavelengths > 0:
            raise ValueError(
                f"spacing_wavelengths must be positive, got {self.spacing_wavelengths!r}"
            )


@dataclass(frozen=True)
class AngleGrid:
    """Uniform angle grid covering [-90, 90] degrees, both endpoints included."""

    angles_deg: np.ndarray = field(repr=False)
    step_deg: float

    def __post_init__(self):
        angles = np.asarray(self.angles_deg, dtype=float)
        if angles.ndim != 1 or angles.size < 2:
            raise ValueError("angle grid needs at least two points")
        if angles[0] != -90.0 or angles[-1] != 90.0:
            raise ValueError("angle grid must start at -90 and end at +90 degrees")
        if not np.allclose(np.diff(angles), self.step_deg, rtol=0, atol=1e-9):
            raise ValueError(f"angle grid is not uniformly spaced by {self.step_deg}")
        object.__setattr__(self, "angles_deg", _frozen(angles))

    @classmethod
    def uniform(cls, step_deg: float = 1.0) -> "AngleGrid":
        n_steps = 180.0 / step_deg
        if step_deg <= 0 or abs(n_steps - round(n_steps)) > 1e-9:
            raise ValueError(f"step_deg must evenly divide 180, got {step_deg}")
        n_steps = int(round(n_steps))
        # integer multiples keep grid points exact (no accumulated rounding)
        angles = -90.0 + step_deg * np.arange(n_steps + 1)
        angles[-1] = 90.0
        return cls(angles, float(step_deg))

    def __len__(self):
        return self.angles_deg.size

    def __eq__(self, other):
        if not isinstance(other, AngleGrid):
            return NotImplemented
        return self.step_deg == other.step_deg and np.array_equal(self.angles_deg, other.angles_deg)

    def __hash__(self):
        return hash((self.step_deg, self.angles_deg.tobytes()))

    def index_of(self, angle_deg: float) -> int:
        """Grid index of an angle that lies exactly on the grid."""
        hits = np.flatnonzero(np.abs(self.angles_deg - angle_deg) < 1e-9)
        if hits.size == 0:
            raise DomainError(f"angle {angle_deg} deg is not a grid point (step {self.step_deg})")
        return int(hits[0])


def _check_angles(angle_deg) -> np.ndarray:
    angles = np.asarray(angle_deg, dtype=float)
    if np.any(~np.isfinite(angles)) or np.any(np.abs(angles) > 90.0):
        raise DomainError(f"angles must lie in [-90, 90] degrees, got {angle_deg!r}")
    return angles


def steering_matrix(geometry: ArrayGeometry, angles_deg) -> np.ndarray:
    """Steering vectors for several angles, stacked as columns (M x len(angles))."""
    angles = np.atleast_1d(_check_angles(angles_deg))
    phase = 2 * np.pi * geometry.spacing_wavelengths * np.sin(np.deg2rad(angles))
    m = np.arange(geometry.num_sensors)[:, None]
    return np.exp(1j * m * phase[None, :])


def steering_vector(geometry: ArrayGeometry, angle_deg: float) -> np.ndarray:
    """
    Phase response of the array to a far-field plane wave.

    Element ``m`` (0-based) is ``exp(j m 2 pi (d/lambda) sin(theta))``, so the
    reference sensor is always ``1 + 0j``.

    Parameters
    ----------
    geometry : ArrayGeometry
    angle_deg : float
        Direction from broadside in degrees, within [-90, 90].

    Returns
    -------
    ndarray, complex, shape (M,)
    """
    if np.ndim(angle_deg) != 0:
        raise ValueError("steering_vector takes a scalar angle; use steering_matrix")
    return steering_matrix(geometry, [angle_deg])[:, 0]


@dataclass(frozen=True)
class Manifold:
    geometry: ArrayGeometry
    grid: AngleGrid
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def shape(self):
        return self.matrix.shape


def build_manifold(geometry: ArrayGeometry, grid: AngleGrid) -> Manifold:
    return Manifold(geometry, grid, steering_matrix(geometry, grid.angles_deg))


@dataclass(frozen=True)
class ManifoldPartition:
    """Mainlobe columns (the 2b+1 grid bins around the steered angle) and the rest."""

    mainlobe: np.ndarray = field(repr=False)
    sidelobe: np.ndarray = field(repr=False)
    soi_index: int
    half_width_bins: int

    def __post_init__(self):
        object.__setattr__(self, "mainlobe", _frozen(self.mainlobe))
        object.__setattr__(self, "sidelobe", _frozen(self.sidelobe))

    @property
    def mainlobe_gram(self) -> np.ndarray:
        """A_M A_M^H."""
        return self.mainlobe @ self.mainlobe.conj().T

    @property
    def sidelobe_gram(self) -> np.ndarray:
        """A_S A_S^H."""
        return self.sidelobe @ self.sidelobe.conj().T


def partition_manifold(
    manifold: Manifold, soi_angle_deg: float, half_width_bins: int
) -> ManifoldPartition:
    if int(half_width_bins) != half_width_bins or half_width_bins < 0:
        raise ValueError(f"half_width_bins must be a nonnegative integer, got {half_width_bins!r}")
    b = int(half_width_bins)
    _check_angles(soi_angle_deg)
    idx = manifold.grid.index_of(soi_angle_deg)
    n = len(manifold.grid)
    if idx - b < 0 or idx + b > n - 1:
        raise DomainError(
            f"mainlobe window {soi_angle_deg} +/- {b} bins exceeds the grid [-90, 90]"
        )
    in_main = np.zeros(n, dtype=bool)
    in_main[idx - b : idx + b + 1] = True
    return ManifoldPartition(
        mainlobe=manifold.matrix[:, in_main],
        sidelobe=manifold.matrix[:, ~in_main],
        soi_index=idx,
        half_width_bins=b,
    )
