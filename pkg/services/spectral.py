#!/usr/bin/env python3
"""
Spectral service

Grids, the discrete Fourier transform contract, Fourier multipliers,
the free biharmonic propagator and the frequency decompositions.

Coefficients are stored in centred order k = -N/2 ... N/2-1 with the
torus convention c_k = (1/L) * integral of u e^{-i xi_k x}. The sample
points start at x_0 = -L/2, which contributes the phase (-1)^k.
"""

import logging
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.fft

from services.errors import FieldError, GridError
from storage.models import SpectralField, SpectralGrid, WindowFamily

logger = logging.getLogger(__name__)

_fft_workers = 1


def set_fft_workers(workers: int):
    """Set the thread count used by scipy.fft"""
    global _fft_workers
    _fft_workers = max(1, int(workers))


def make_grid(box_length: float, points: int) -> SpectralGrid:
    """
    Build a periodic grid

    Args:
        box_length: Box length L > 0
        points: Even point count N >= 8

    Returns:
        SpectralGrid with lattice 2*pi*k/L
    """
    try:
        return SpectralGrid(float(box_length), points)
    except (TypeError, ValueError) as e:
        if isinstance(e, GridError):
            raise
        raise GridError(f"Invalid grid ({box_length}, {points}): {e}")


def _alternating(grid: SpectralGrid) -> np.ndarray:
    return np.where(grid.modes % 2 == 0, 1.0, -1.0)


def analyze(samples, grid: SpectralGrid) -> SpectralField:
    """Samples -> field with torus coefficients"""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (grid.points,):
        raise FieldError(f"Expected {grid.points} samples, got {samples.shape}")
    spectrum = scipy.fft.fftshift(scipy.fft.fft(samples, workers=_fft_workers))
    spectrum *= _alternating(grid) / grid.points
    return SpectralField(grid=grid, physical=samples, spectrum=spectrum)


def synthesize_samples(spectra, grid: SpectralGrid) -> np.ndarray:
    """Coefficient rows (..., N) -> sample rows (..., N)"""
    spectra = np.asarray(spectra, dtype=complex)
    shifted = scipy.fft.ifftshift(spectra * _alternating(grid), axes=-1)
    return scipy.fft.ifft(shifted, axis=-1, workers=_fft_workers) * grid.points


def synthesize(spectrum, grid: SpectralGrid) -> SpectralField:
    """Torus coefficients -> field with samples"""
    spectrum = np.asarray(spectrum, dtype=complex)
    if spectrum.shape != (grid.points,):
        raise FieldError(f"Expected {grid.points} coefficients, got {spectrum.shape}")
    return SpectralField(grid=grid, physical=synthesize_samples(spectrum, grid), spectrum=spectrum)


def from_function(func: Callable, grid: SpectralGrid) -> SpectralField:
    """Sample a callable on the grid"""
    return analyze(func(grid.x), grid)


def apply_multiplier(field: SpectralField, symbol: Callable) -> SpectralField:
    """
    Multiply the spectrum by symbol(xi_k)

    Args:
        field: Input field
        symbol: Vectorised callable xi -> complex

    Returns:
        New field with c_k -> symbol(xi_k) c_k
    """
    values = np.broadcast_to(
        np.asarray(symbol(field.grid.frequencies), dtype=complex), (field.grid.points,)
    )
    if not np.all(np.isfinite(values)):
        bad = field.grid.frequencies[~np.isfinite(values)]
        raise FieldError(f"Symbol is not finite at lattice frequencies {bad[:5].tolist()}")
    return synthesize(field.spectrum * values, field.grid)


def free_evolve(field: SpectralField, t: float) -> SpectralField:
    """Free propagator e^{it d_x^4}: c_k -> e^{i t xi_k^4} c_k"""
    if t == 0:
        return field
    return apply_multiplier(field, lambda xi: np.exp(1j * t * xi ** 4))


def box_project(field: SpectralField, n: int, windows: Optional[WindowFamily] = None) -> SpectralField:
    """Frequency-uniform piece: spectrum times psi(xi - n)"""
    windows = windows or WindowFamily()
    return apply_multiplier(field, lambda xi: windows(xi, n))


def box_range(grid: SpectralGrid) -> range:
    """Integer boxes whose support [n-1, n+1] meets the lattice range"""
    lowest = float(grid.frequencies[0])
    highest = float(grid.frequencies[-1])
    return range(int(np.ceil(lowest - 1.0)), int(np.floor(highest + 1.0)) + 1)


def band_mask(grid: SpectralGrid, level: int) -> np.ndarray:
    if level < 0:
        raise ValueError(f"Dyadic level must be non-negative, got {level}")
    magnitude = np.abs(grid.frequencies)
    if level == 0:
        return magnitude < 1.0
    return (magnitude >= 2.0 ** (level - 1)) & (magnitude < 2.0 ** level)


def band_project(field: SpectralField, level: int) -> SpectralField:
    """Sharp dyadic cutoff to |xi| in [2^{j-1}, 2^j), |xi| < 1 for j = 0"""
    mask = band_mask(field.grid, level)
    return synthesize(np.where(mask, field.spectrum, 0.0), field.grid)


def band_levels(grid: SpectralGrid) -> range:
    """Dyadic levels that meet the lattice"""
    top = float(np.max(np.abs(grid.frequencies)))
    return range(0, int(np.floor(np.log2(top))) + 2 if top >= 1 else 1)


def pad_spectrum(field: SpectralField, points: int) -> SpectralField:
    """Same box, more points; coefficients copied, Nyquist zeroed"""
    if points < field.grid.points:
        raise GridError(f"Cannot pad {field.grid.points} points down to {points}")
    grid = make_grid(field.grid.box_length, points)
    spectrum = np.zeros(points, dtype=complex)
    offset = (points - field.grid.points) // 2
    spectrum[offset:offset + field.grid.points] = field.spectrum
    spectrum[offset] = 0.0
    return synthesize(spectrum, grid)


def truncate_spectrum(field: SpectralField, points: int) -> SpectralField:
    """Same box, fewer points; modes outside the new lattice are dropped"""
    if points > field.grid.points:
        raise GridError(f"Cannot truncate {field.grid.points} points up to {points}")
    grid = make_grid(field.grid.box_length, points)
    offset = (field.grid.points - points) // 2
    spectrum = field.spectrum[offset:offset + points].copy()
    spectrum[0] = 0.0
    return synthesize(spectrum, grid)


def rescale_box(field: SpectralField, factor: float) -> SpectralField:
    """Samples of f(factor * x): same values on the grid (L/factor, N)"""
    if not factor > 0:
        raise GridError(f"Scale factor must be positive, got {factor}")
    grid = make_grid(field.grid.box_length / factor, field.grid.points)
    return analyze(field.physical, grid)


def superpose(fields: Iterable[SpectralField]) -> SpectralField:
    fields = list(fields)
    if not fields:
        raise FieldError("Nothing to superpose")
    grid = fields[0].grid
    total = np.zeros(grid.points, dtype=complex)
    for item in fields:
        if item.grid != grid:
            raise FieldError("Cannot superpose fields on different grids")
        total += item.spectrum
    return synthesize(total, grid)


def half_box_leakage(field: SpectralField) -> float:
    """Relative mass outside [-L/4, L/4]"""
    total = float(np.sum(np.abs(field.physical) ** 2))
    if total == 0:
        return 0.0
    outside = np.abs(field.grid.x) > 0.25 * field.grid.box_length
    return float(np.sum(np.abs(field.physical[outside]) ** 2) / total)
