from pathlib import Path

import numpy as np
import pytest

from msprcapon.manifold import AngleGrid, ArrayGeometry, build_manifold, partition_manifold
from msprcapon.scene import Interferer, Scene

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def geometry():
    return ArrayGeometry(8, 0.5)


@pytest.fixture
def paper_scene():
    return Scene(
        soi_doa_deg=0.0,
        soi_power=10.0,
        interferers=(Interferer(-30.0, 100.0), Interferer(30.0, 100.0), Interferer(70.0, 10000.0)),
        noise_power=1.0,
        num_snapshots=100,
    )


@pytest.fixture
def manifold(geometry):
    return build_manifold(geometry, AngleGrid.uniform(1.0))


@pytest.fixture
def partition(manifold):
    return partition_manifold(manifold, 0.0, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian_pd(rng, m, loading=0.1):
    x = rng.standard_normal((m, 2 * m)) + 1j * rng.standard_normal((m, 2 * m))
    r = x @ x.conj().T / (2 * m) + loading * np.eye(m)
    return 0.5 * (r + r.conj().T)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
