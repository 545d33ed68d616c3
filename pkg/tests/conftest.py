import os
import tempfile

os.environ.setdefault("LAB_DATA_DIR", tempfile.mkdtemp(prefix="biharmonic-lab-"))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from services.scheduler import scheduler_service  # noqa: E402
from services.spectral import from_function, make_grid, synthesize  # noqa: E402


def band_limited(grid, rng, band: int, amplitude: float = 1.0):
    """Random field on the modes |k| <= band, Nyquist zero"""
    spectrum = np.zeros(grid.points, dtype=complex)
    modes = np.abs(grid.modes) <= band
    spectrum[modes] = rng.normal(size=modes.sum()) + 1j * rng.normal(size=modes.sum())
    spectrum[0] = 0.0
    field = synthesize(spectrum, grid)
    scale = amplitude / np.sqrt(field.mass)
    return synthesize(spectrum * scale, grid)


@pytest.fixture(autouse=True)
def sequential_scheduler():
    scheduler_service.configure(1)
    yield
    scheduler_service.stop()


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


@pytest.fixture
def small_grid():
    return make_grid(2 * np.pi, 16)


@pytest.fixture
def wide_grid():
    """L = 16 pi, N = 256: lattice spacing 1/8"""
    return make_grid(16 * np.pi, 256)


@pytest.fixture
def gaussian(wide_grid):
    return from_function(lambda x: 0.5 * np.exp(-x ** 2), wide_grid)
