import numpy as np
import pytest

from services.errors import FieldError, GridError
from services.spectral import (
    analyze, apply_multiplier, band_levels, band_project, box_project, box_range, free_evolve,
    from_function, half_box_leakage, make_grid, pad_spectrum, superpose, synthesize, truncate_spectrum
)
from storage.models import WindowFamily

from tests.conftest import band_limited


def test_grid_lattice(small_grid):
    assert small_grid.spacing == pytest.approx(1.0)
    assert small_grid.modes[0] == -8 and small_grid.modes[-1] == 7
    assert small_grid.x[0] == pytest.approx(-np.pi)
    assert small_grid.periods == 1
    assert make_grid(10.0, 16).periods is None


@pytest.mark.parametrize("length, points", [(0.0, 16), (-1.0, 16), (2 * np.pi, 15), (2 * np.pi, 4)])
def test_invalid_grids(length, points):
    with pytest.raises(GridError):
        make_grid(length, points)


def test_single_mode_coefficient(small_grid):
    field = from_function(lambda x: 3.0 * np.exp(2j * x), small_grid)
    assert field.coefficient(2) == pytest.approx(3.0)
    others = np.delete(field.spectrum, small_grid.index_of(2))
    assert np.max(np.abs(others)) < 1e-13


def test_analyze_synthesize_inverse(small_grid, rng):
    samples = rng.normal(size=16) + 1j * rng.normal(size=16)
    field = analyze(samples, small_grid)
    np.testing.assert_allclose(synthesize(field.spectrum, small_grid).physical, samples, atol=1e-13)


def test_shape_mismatch(small_grid):
    with pytest.raises(FieldError):
        analyze(np.zeros(8), small_grid)
    with pytest.raises(FieldError):
        synthesize(np.zeros(32), small_grid)


def test_mass_matches_quadrature(wide_grid, rng):
    field = band_limited(wide_grid, rng, band=40, amplitude=2.0)
    quadrature = np.sum(np.abs(field.physical) ** 2) * wide_grid.dx
    assert field.mass == pytest.approx(quadrature, rel=1e-12)
    assert field.mass == pytest.approx(4.0, rel=1e-12)


def test_non_finite_symbol_rejected(small_grid, rng):
    field = band_limited(small_grid, rng, band=4)
    with pytest.raises(FieldError):
        apply_multiplier(field, lambda xi: 1.0 / xi)


def test_free_evolution_is_unitary(wide_grid, rng):
    field = band_limited(wide_grid, rng, band=60)
    evolved = free_evolve(field, 0.37)
    assert evolved.mass == pytest.approx(field.mass, rel=1e-12)
    back = free_evolve(evolved, -0.37)
    np.testing.assert_allclose(back.spectrum, field.spectrum, atol=1e-14)


def test_free_evolution_group_property(small_grid, rng):
    field = band_limited(small_grid, rng, band=5)
    once = free_evolve(field, 0.3)
    twice = free_evolve(free_evolve(field, 0.1), 0.2)
    np.testing.assert_allclose(once.spectrum, twice.spectrum, atol=1e-14)


def test_translation_multiplier(wide_grid, gaussian):
    shift = 2.5
    moved = apply_multiplier(gaussian, lambda xi: np.exp(-1j * xi * shift))
    expected = from_function(lambda x: 0.5 * np.exp(-(x - shift) ** 2), wide_grid)
    assert np.max(np.abs(moved.physical - expected.physical)) < 1e-12


def test_windows_partition_unity():
    assert WindowFamily().partition_defect() < 1e-12


def test_box_projections_sum_to_field(wide_grid, gaussian):
    total = superpose(box_project(gaussian, n) for n in box_range(wide_grid))
    assert np.max(np.abs(total.spectrum - gaussian.spectrum)) < 1e-14


def test_bands_partition_field(wide_grid, rng):
    field = band_limited(wide_grid, rng, band=100)
    total = superpose(band_project(field, level) for level in band_levels(wide_grid))
    np.testing.assert_allclose(total.spectrum, field.spectrum, atol=1e-15)
    with pytest.raises(ValueError):
        band_project(field, -1)


def test_pad_then_truncate(small_grid, rng):
    field = band_limited(small_grid, rng, band=6)
    padded = pad_spectrum(field, 64)
    assert padded.grid.points == 64
    assert padded.mass == pytest.approx(field.mass, rel=1e-12)
    back = truncate_spectrum(padded, 16)
    np.testing.assert_allclose(back.spectrum, field.spectrum, atol=1e-15)
    with pytest.raises(GridError):
        pad_spectrum(field, 8)


def test_half_box_leakage(wide_grid, gaussian):
    assert half_box_leakage(gaussian) < 1e-12
    flat = from_function(lambda x: np.ones_like(x), wide_grid)
    assert half_box_leakage(flat) == pytest.approx(0.5, abs=0.01)
