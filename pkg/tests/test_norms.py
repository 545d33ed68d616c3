import math

import numpy as np
import pytest

from services.errors import LatticeAlignmentError, NormParameterError
from services.norms import (
    box_norms, critical_scaling_check, equivalence_ratio, lebesgue_norm, mixed_norm,
    modulation_norm, scaling_check, sobolev_norm, spacetime_norm, z_norm, z_norm_tail_bound
)
from services.spectral import analyze, from_function, make_grid, pad_spectrum, synthesize
from storage.models import NormParams, Trajectory

from tests.conftest import band_limited


def test_lebesgue_norms_of_constant():
    grid = make_grid(2 * np.pi, 32)
    field = from_function(lambda x: 2.0 * np.ones_like(x), grid)
    assert lebesgue_norm(field, 2) == pytest.approx(2.0 * math.sqrt(2 * np.pi))
    assert lebesgue_norm(field, 4) == pytest.approx(2.0 * (2 * np.pi) ** 0.25)
    assert lebesgue_norm(field, math.inf) == pytest.approx(2.0)
    with pytest.raises(NormParameterError):
        lebesgue_norm(field, 0.5)


def test_sobolev_of_single_mode():
    grid = make_grid(2 * np.pi, 16)
    field = from_function(lambda x: np.exp(3j * x), grid)
    mass = 2 * np.pi
    assert sobolev_norm(field, 0.0) == pytest.approx(math.sqrt(mass))
    assert sobolev_norm(field, 1.0) == pytest.approx(math.sqrt(10 * mass))
    assert sobolev_norm(field, -0.5, homogeneous=True) == pytest.approx(math.sqrt(mass / 3))


def test_box_norms_recover_mass(wide_grid, gaussian):
    # cos^2 windows square-sum to between 1/2 and 1
    _, norms = box_norms(gaussian)
    total = float(np.sum(norms ** 2))
    assert 0.5 * gaussian.mass <= total <= gaussian.mass * (1 + 1e-12)


def test_modulation_norm_bounded_by_l2(wide_grid, gaussian):
    params = NormParams(s=0.0, q=2.0)
    ratio = modulation_norm(gaussian, params) / math.sqrt(gaussian.mass)
    assert 1 / math.sqrt(2) - 1e-12 <= ratio <= 1 + 1e-12


def test_modulation_norm_scales_linearly(wide_grid, gaussian):
    params = NormParams(s=0.5, q=4.0)
    doubled = synthesize(2 * gaussian.spectrum, wide_grid)
    assert modulation_norm(doubled, params) == pytest.approx(2 * modulation_norm(gaussian, params))


def test_modulation_covariance_under_box_shift(wide_grid, gaussian):
    """A shift by 8 lattice modes moves every box by exactly one"""
    params = NormParams(s=0.0, q=4.0)
    shifted = analyze(np.exp(1j * wide_grid.x) * gaussian.physical, wide_grid)
    assert modulation_norm(shifted, params) == pytest.approx(modulation_norm(gaussian, params), rel=1e-12)


def test_z_norm_of_narrow_gaussian(wide_grid, gaussian):
    params = NormParams(s=0.0, q=2.0, kappa0=1.0)
    ratio = z_norm(gaussian, params) / math.sqrt(gaussian.mass)
    assert 1.0 < ratio <= math.sqrt(math.pi / 2) * (1 + 1e-5)


def test_z_norm_requires_integer_lattice(rng):
    grid = make_grid(10.0, 64)
    field = band_limited(grid, rng, band=10)
    with pytest.raises(LatticeAlignmentError):
        z_norm(field, NormParams())


def test_z_norm_tail_bound_is_small_for_resolved_data(gaussian):
    bounds = z_norm_tail_bound(gaussian, NormParams(s=0.5, q=4.0))
    assert max(bounds) < 1e-20


def test_equivalence_ratio_is_finite(gaussian):
    ratio = equivalence_ratio(gaussian, NormParams(s=0.5, q=4.0, kappa0=2.0))
    assert 0 < ratio < 10


@pytest.mark.parametrize("s, q", [(0.0, 2.0), (0.5, 4.0), (-0.25, 8.0)])
def test_modulation_dilation_regimes(s, q):
    grid = make_grid(16 * np.pi, 512)
    field = from_function(lambda x: np.exp(-x ** 2 + 8j * x), grid)
    params = NormParams(s=s, q=q)
    for scale in (0.5, 2.0):
        report = scaling_check(field, scale, params)
        assert report.regime == ("contraction" if scale < 1 else "dilation")
        assert report.ratio > 0


def test_dilation_ratios_are_uniformly_bounded():
    grid = make_grid(16 * np.pi, 512)
    field = from_function(lambda x: np.exp(-x ** 2), grid)
    params = NormParams(s=0.5, q=4.0)
    ratios = [scaling_check(field, scale, params).ratio for scale in (1 / 8, 1 / 4, 1 / 2, 2, 4, 8)]
    assert max(ratios) <= 1.5
    assert min(ratios) >= 0.25
    assert scaling_check(field, 1.0, params).ratio == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("scale", [0.5, 2.0])
def test_critical_scaling_invariance(scale):
    grid = make_grid(16 * np.pi, 512)
    field = from_function(lambda x: np.exp(-x ** 2 + 8j * x), grid)
    assert critical_scaling_check(field, scale) == pytest.approx(1.0, abs=1e-6)


def test_mixed_norm_of_constant_profile():
    times = np.linspace(0.0, 2.0, 21)
    spatial = np.full(times.size, 3.0)
    assert mixed_norm(times, spatial, 2.0, 2.0) == pytest.approx(3.0 * math.sqrt(2.0))
    assert mixed_norm(times, spatial, math.inf, 2.0) == pytest.approx(3.0)
    # horizon between samples closes the last interval by interpolation
    assert mixed_norm(times, spatial, 1.0, 1.05) == pytest.approx(3.15)


def test_mixed_norm_rejects_bad_input():
    times = np.linspace(0.0, 1.0, 11)
    spatial = np.ones(11)
    with pytest.raises(NormParameterError):
        mixed_norm(times, spatial, 2.0, 1.5)
    with pytest.raises(NormParameterError):
        mixed_norm([0.0, 0.1, 0.5], [1.0, 1.0, 1.0], 2.0, 0.5)
    with pytest.raises(NormParameterError):
        mixed_norm([], [], 2.0, 1.0)


def test_spacetime_norm_of_stationary_trajectory(small_grid):
    field = from_function(lambda x: np.exp(1j * x), small_grid)
    times = [0.0, 0.25, 0.5, 0.75, 1.0]
    trajectory = Trajectory(times=times, fields=[field] * 5, diagnostics=[{}] * 5)
    expected = math.sqrt(2 * np.pi)
    assert spacetime_norm(trajectory, 4.0, 2.0, 1.0) == pytest.approx(expected)


@pytest.mark.parametrize("kwargs", [{"q": 1.5}, {"kappa0": 0.5}, {"s": math.inf}])
def test_invalid_norm_params(kwargs):
    with pytest.raises(NormParameterError):
        NormParams(**kwargs)


EQUIVALENCE_PARAMS = [
    NormParams(s=s, q=q, kappa0=kappa0) for s in (0.0, 0.4) for q in (3.0, 4.0) for kappa0 in (1.0, 4.0)
]


def equivalence_window(fields):
    """(c, C) with every z/M ratio inside [c, C kappa0]"""
    lower, upper = math.inf, 0.0
    for field in fields:
        for params in EQUIVALENCE_PARAMS:
            ratio = equivalence_ratio(field, params)
            lower = min(lower, ratio)
            upper = max(upper, ratio / params.kappa0)
    return lower, upper


@pytest.mark.slow
def test_equivalence_window_on_ensemble(wide_grid, rng):
    fields = [band_limited(wide_grid, rng, band=32) for _ in range(50)]
    lower, upper = equivalence_window(fields)
    assert 0 < lower and upper / lower < 50

    refined_lower, refined_upper = equivalence_window([pad_spectrum(f, 512) for f in fields])
    assert refined_lower == pytest.approx(lower, rel=0.1)
    assert refined_upper == pytest.approx(upper, rel=0.1)


def all_norms(field):
    return {
        "l1": lebesgue_norm(field, 1),
        "l2": lebesgue_norm(field, 2),
        "l4": lebesgue_norm(field, 4),
        "linf": lebesgue_norm(field, math.inf),
        "h1": sobolev_norm(field, 1.0),
        "h-half": sobolev_norm(field, -0.5),
        "modulation": modulation_norm(field, NormParams(s=0.5, q=4.0)),
        "z": z_norm(field, NormParams(s=0.4, q=3.0, kappa0=2.0)),
    }


def test_norms_are_homogeneous(wide_grid, rng):
    field = band_limited(wide_grid, rng, band=24)
    factor = -1.5 + 2.0j
    scaled = synthesize(factor * field.spectrum, wide_grid)
    base, values = all_norms(field), all_norms(scaled)
    for name, value in base.items():
        assert values[name] == pytest.approx(abs(factor) * value, rel=1e-10), name


def test_norms_satisfy_the_triangle_inequality(wide_grid, rng):
    for _ in range(5):
        first = band_limited(wide_grid, rng, band=24)
        second = band_limited(wide_grid, rng, band=12, amplitude=2.0)
        total = synthesize(first.spectrum + second.spectrum, wide_grid)
        a, b, c = all_norms(first), all_norms(second), all_norms(total)
        for name in a:
            assert c[name] <= a[name] + b[name] + 1e-10, name


def test_spacetime_norm_is_a_norm(small_grid, rng):
    times = list(np.linspace(0.0, 1.0, 9))
    first = [band_limited(small_grid, rng, band=4) for _ in times]
    second = [band_limited(small_grid, rng, band=6) for _ in times]
    total = [synthesize(a.spectrum + b.spectrum, small_grid) for a, b in zip(first, second)]
    scaled = [synthesize(3j * a.spectrum, small_grid) for a in first]

    def norm(fields):
        return spacetime_norm(Trajectory(times=times, fields=fields, diagnostics=[{}] * len(times)), 4.0, 6.0, 1.0)

    assert norm(scaled) == pytest.approx(3 * norm(first), rel=1e-10)
    assert norm(total) <= norm(first) + norm(second) + 1e-10
