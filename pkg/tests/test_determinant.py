import numpy as np
import pytest

from services.determinant import (
    alpha, build_cyclic_matrix, build_half_sandwich, build_operator_matrix, determinant_service,
    hs_closed_form_proxy, hs_norm, leading_term_closed_form, prepare_field, series_tail_bound,
    trace_power, trace_powers
)
from services.errors import (
    LatticeAlignmentError, NormParameterError, OperatorError
)
from services.spectral import analyze, from_function, make_grid, synthesize
from storage.models import SpectralParameter

from tests.conftest import band_limited


@pytest.fixture
def kappa():
    return SpectralParameter.lattice(1.0, 2)


def test_zero_field_has_zero_alpha(wide_grid):
    zero = synthesize(np.zeros(wide_grid.points), wide_grid)
    result = alpha(zero, SpectralParameter(re=1.0))
    assert result.value == 0.0
    assert result.hs == 0.0
    assert result.converged


def test_operator_matrix_layout(gaussian):
    matrix = build_operator_matrix(gaussian, SpectralParameter(re=2.0))
    assert matrix.dim == gaussian.grid.points
    assert matrix.hs_norm == pytest.approx(hs_norm(matrix.entries))
    assert 0 < matrix.edge_ratio < 1


def test_trace_methods_agree(gaussian, kappa):
    matrix = build_operator_matrix(gaussian, kappa)
    for ell in (1, 2, 3, 5):
        product = trace_power(matrix, ell, method="product")
        eigen = trace_power(matrix, ell, method="eigen")
        assert abs(product - eigen) <= 1e-10 * max(1.0, abs(product))
    traces = trace_powers(matrix, 10)
    assert len(traces) == 10
    assert traces[2] == pytest.approx(trace_power(matrix, 3))
    assert traces[9] == pytest.approx(trace_power(matrix, 10, method="eigen"), rel=1e-8, abs=1e-30)


def test_trace_power_rejects_bad_input(gaussian, kappa):
    matrix = build_operator_matrix(gaussian, kappa)
    with pytest.raises(OperatorError):
        trace_power(matrix, 0)
    with pytest.raises(OperatorError):
        trace_power(matrix, 2, method="qr")


def test_cyclic_matrix_shares_traces(gaussian, kappa):
    matrix = build_operator_matrix(gaussian, kappa)
    cyclic = build_cyclic_matrix(gaussian, kappa)
    for ell in (1, 2, 4):
        assert trace_power(cyclic, ell) == pytest.approx(trace_power(matrix, ell), rel=1e-10)


def test_pure_mode_operator_is_diagonal(small_grid):
    field = from_function(lambda x: 0.3 * np.exp(2j * x), small_grid)
    kappa = SpectralParameter(re=1.5)
    matrix = build_operator_matrix(field, kappa).entries
    assert np.allclose(matrix, np.diag(np.diag(matrix)), atol=1e-14)

    modes = np.arange(-6, 8)
    diagonal = 0.09 / ((1.5 - 1j * modes) * (1.5 + 1j * (modes - 2)))
    assert trace_power(matrix, 1) == pytest.approx(np.sum(diagonal), rel=1e-12)
    assert trace_power(matrix, 2) == pytest.approx(np.sum(diagonal ** 2), rel=1e-12)


def test_half_sandwich_bounds_operator(gaussian, kappa):
    half = build_half_sandwich(gaussian, kappa)
    assert build_operator_matrix(gaussian, kappa).hs_norm <= hs_norm(half) ** 2 * (1 + 1e-12)


def test_hs_proxy(wide_grid, gaussian):
    zero = synthesize(np.zeros(wide_grid.points), wide_grid)
    assert hs_closed_form_proxy(zero, SpectralParameter(re=1.0)) == 0.0

    values = [hs_closed_form_proxy(gaussian, SpectralParameter(re=a)) for a in (1.0, 2.0, 4.0)]
    assert values[0] > values[1] > values[2] > 0

    doubled = from_function(lambda x: np.exp(-x ** 2), wide_grid)
    assert hs_closed_form_proxy(doubled, SpectralParameter(re=2.0)) == pytest.approx(4 * values[1], rel=1e-12)

    ratios = [
        v / hs_norm(build_half_sandwich(gaussian, SpectralParameter(re=a))) ** 2
        for v, a in zip(values, (1.0, 2.0, 4.0))
    ]
    assert max(ratios) / min(ratios) < 10


def test_logdet_and_series_agree_within_tail(gaussian, kappa):
    exact = alpha(gaussian, kappa, method="logdet")
    series = alpha(gaussian, kappa, method="series", ell_max=12)
    assert series.converged
    assert series.tail_bound == pytest.approx(series_tail_bound(series.hs, 12))
    assert abs(exact.value - series.value) <= series.tail_bound + 1e-12


def test_first_trace_is_the_lattice_leading_term(gaussian, kappa):
    series = alpha(gaussian, kappa, method="series", ell_max=4)
    lattice = leading_term_closed_form(gaussian, kappa, finite_lattice=True)
    assert series.terms[0] == pytest.approx(lattice, rel=1e-10)
    assert leading_term_closed_form(gaussian, kappa) > 0


def test_residual_is_quartic_in_amplitude(wide_grid):
    kappa = SpectralParameter.lattice(1.0, 0)

    def residual(amplitude):
        field = from_function(lambda x: amplitude * np.exp(-x ** 2), wide_grid)
        value = alpha(field, kappa).value
        return value - leading_term_closed_form(field, kappa, finite_lattice=True)

    assert residual(0.1) / residual(0.05) == pytest.approx(16.0, rel=0.05)


@pytest.mark.parametrize("n", [1, 2, -3])
def test_modulation_covariance(wide_grid, gaussian, n):
    modulated = analyze(np.exp(-1j * n * wide_grid.x) * gaussian.physical, wide_grid)
    direct = alpha(gaussian, SpectralParameter.lattice(1.0, n)).value
    shifted = alpha(modulated, SpectralParameter(re=1.0)).value
    assert shifted == pytest.approx(direct, abs=1e-10)


def test_translation_invariance(wide_grid, gaussian, kappa):
    moved = from_function(lambda x: 0.5 * np.exp(-(x - 3.0) ** 2), wide_grid)
    assert alpha(moved, kappa).value == pytest.approx(alpha(gaussian, kappa).value, abs=1e-10)


def test_leading_term_requires_alignment(rng):
    grid = make_grid(10.0, 64)
    field = band_limited(grid, rng, band=8)
    with pytest.raises(LatticeAlignmentError):
        leading_term_closed_form(field, SpectralParameter(re=1.0, im=0.5))


def test_spectral_parameter_validation():
    with pytest.raises(OperatorError):
        SpectralParameter(re=0.0)
    with pytest.raises(OperatorError):
        SpectralParameter(re=1.0, im=0.3, lattice_index=1)
    assert SpectralParameter.lattice(2.0, -3).value == complex(2.0, -1.5)


def test_prepare_field(gaussian):
    assert prepare_field(gaussian) is gaussian
    padded = prepare_field(gaussian, 512)
    assert padded.grid.points == 512
    assert padded.mass == pytest.approx(gaussian.mass, rel=1e-12)
    with pytest.raises(OperatorError):
        prepare_field(gaussian, 4096)


def test_choose_kappa0(gaussian):
    choice = determinant_service.choose_kappa0(gaussian, 0.5, 4.0, n_range=range(-4, 5))
    assert choice.max_hs <= 0.5
    assert choice.kappa0 >= 1
    assert choice.delta == pytest.approx(1 / 32)
    kappas = [k for k, _ in choice.history]
    assert kappas == sorted(kappas) and kappas[-1] == choice.kappa0
    if len(choice.history) > 1:
        assert choice.history[-2][1] > 0.5


def test_choose_kappa0_rejects_bad_delta(gaussian):
    with pytest.raises(NormParameterError):
        determinant_service.choose_kappa0(gaussian, 0.5, 4.0, delta=0.1, n_range=[0])


def test_lattice_profile(gaussian):
    profile = determinant_service.alpha_lattice_profile(gaussian, 4.0, 0.5, 4.0, n_range=range(-3, 4))
    assert [row.n for row in profile.rows] == list(range(-3, 4))
    assert not profile.flagged
    assert profile.z_identity < 1e-10
    for row in profile.rows:
        assert row.agreement <= row.tail_bound + 1e-12
        assert row.residual == pytest.approx(row.alpha - row.leading_lattice)
    summary = profile.summary()
    assert summary["max_hs"] < 0.5
    assert summary["residual_constant"] == pytest.approx(profile.residual_norm / profile.comparison)


def test_lattice_profile_of_zero_field(wide_grid):
    zero = synthesize(np.zeros(wide_grid.points), wide_grid)
    profile = determinant_service.alpha_lattice_profile(zero, 1.0, 0.0, 2.0, n_range=range(-2, 3))
    assert all(row.alpha == 0.0 for row in profile.rows)
    assert profile.residual_norm == 0.0
    assert profile.summary()["residual_constant"] == 0.0


@pytest.fixture
def ensemble(wide_grid, rng):
    return [band_limited(wide_grid, rng, band=16, amplitude=0.5) for _ in range(20)]


ENSEMBLE_KAPPAS = [(re, n) for re in (1.0, 2.0, 4.0) for n in range(-4, 5)]


@pytest.mark.slow
def test_first_trace_matches_leading_term_on_ensemble(ensemble):
    for field in ensemble:
        for re, n in ENSEMBLE_KAPPAS:
            kappa = SpectralParameter.lattice(re, n)
            first = trace_power(build_operator_matrix(field, kappa), 1)
            lattice = leading_term_closed_form(field, kappa, finite_lattice=True)
            assert abs(first.real - lattice) <= 1e-8 * max(1.0, abs(lattice))


@pytest.mark.slow
def test_series_and_logdet_agree_on_ensemble(ensemble):
    checked = 0
    for field in ensemble:
        for re, n in ENSEMBLE_KAPPAS:
            kappa = SpectralParameter.lattice(re, n)
            matrix = build_operator_matrix(field, kappa)
            if matrix.hs_norm > 0.5:
                continue
            exact = alpha(field, kappa, method="logdet", matrix=matrix)
            series = alpha(field, kappa, method="series", ell_max=12, matrix=matrix)
            assert abs(exact.value - series.value) <= series.tail_bound + 1e-10
            checked += 1
    assert checked >= len(ensemble) * len(ENSEMBLE_KAPPAS) // 2


def test_alpha_under_grid_refinement(wide_grid):
    kappa = SpectralParameter(re=1.0)
    coarse = from_function(lambda x: 0.5 * np.exp(-x ** 2), wide_grid)
    finer = from_function(lambda x: 0.5 * np.exp(-x ** 2), make_grid(wide_grid.box_length, 512))
    longer = from_function(lambda x: 0.5 * np.exp(-x ** 2), make_grid(2 * wide_grid.box_length, 512))

    reference = alpha(coarse, kappa, continuum_leading=True).value
    assert alpha(finer, kappa, continuum_leading=True).value == pytest.approx(reference, abs=1e-6)
    assert alpha(longer, kappa, continuum_leading=True).value == pytest.approx(reference, abs=1e-4)

    # the raw lattice value moves only through its first trace
    raw = [alpha(f, kappa).value - leading_term_closed_form(f, kappa, finite_lattice=True)
           for f in (coarse, finer)]
    assert raw[1] == pytest.approx(raw[0], abs=1e-6)
