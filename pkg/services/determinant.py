#!/usr/bin/env python3
"""
Determinant service

Fourier matrices of the sandwiched resolvent operator
    K(kappa; u) = (kappa - d)^{-1/2} u (kappa + d)^{-1} conj(u) (kappa - d)^{-1/2},
their Hilbert-Schmidt norms and traces, the perturbation determinant
alpha(kappa; u) = -Re log det(I - K), the kappa0 search and the
lattice profile over kappa_n = kappa0 + i n/2.

Matrices live on kappa-centred windows: with s = round(Im kappa / h) the
rows of U carry the modes k + s and its columns the modes k - s.
"""

import logging
import math
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.special import psi

from config import DEFAULT_ELL_MAX, DETERMINANT_MAX_POINTS, HS_CRITERION, KAPPA0_SEARCH_CAP
from services.errors import (
    KappaSearchError, LatticeAlignmentError, NormParameterError,
    OperatorError, SingularOperatorError
)
from services.norms import japanese, modulation_norm, z_norm
from services.scheduler import scheduler_service
from services.spectral import pad_spectrum, truncate_spectrum
from storage.models import (
    AlphaResult, Kappa0Choice, LatticeProfile, NormParams, OperatorMatrix,
    ProfileRow, SpectralField, SpectralParameter
)

logger = logging.getLogger(__name__)

PRODUCT_TRACE_LIMIT = 8


def _as_parameter(kappa) -> SpectralParameter:
    if isinstance(kappa, SpectralParameter):
        return kappa
    kappa = complex(kappa)
    return SpectralParameter(re=kappa.real, im=kappa.imag)


def window_offset(field: SpectralField, kappa: SpectralParameter) -> int:
    """s = round(Im kappa / h)"""
    return int(round(kappa.im / field.grid.spacing))


def prepare_field(field: SpectralField, points: Optional[int] = None) -> SpectralField:
    """
    Move a field to the lattice used for determinant work

    A larger point count zero-pads the spectrum, a smaller one truncates it.
    Without an explicit count, grids above DETERMINANT_MAX_POINTS are truncated.
    """
    if points is None:
        if field.grid.points <= DETERMINANT_MAX_POINTS:
            return field
        logger.warning(
            f"Truncating field from {field.grid.points} to {DETERMINANT_MAX_POINTS} points "
            f"for determinant evaluation"
        )
        points = DETERMINANT_MAX_POINTS
    if points > DETERMINANT_MAX_POINTS:
        raise OperatorError(f"Determinant lattice {points} exceeds the cap {DETERMINANT_MAX_POINTS}")
    if points > field.grid.points:
        return pad_spectrum(field, points)
    if points < field.grid.points:
        return truncate_spectrum(field, points)
    return field


def _factors(field: SpectralField, kappa: SpectralParameter):
    """Return (D, E, U) on the kappa-centred windows"""
    grid = field.grid
    offset = window_offset(field, kappa)
    modes = grid.modes
    h = grid.spacing
    value = kappa.value

    d_modes = modes + offset
    e_modes = modes - offset
    resolvent_d = 1.0 / (value - 1j * h * d_modes)
    resolvent_e = 1.0 / (value + 1j * h * e_modes)

    # c_m for m in [-N, N]; the Nyquist mode and everything beyond the lattice are zero
    half = grid.points // 2
    table = np.zeros(2 * grid.points + 1, dtype=complex)
    table[grid.points - half + 1:grid.points + half] = field.spectrum[1:]
    difference = (d_modes[:, None] - e_modes[None, :])
    inside = np.abs(difference) <= grid.points
    indices = np.clip(difference, -grid.points, grid.points) + grid.points
    multiplication = np.where(inside, table[indices], 0.0)
    return resolvent_d, resolvent_e, multiplication


def build_operator_matrix(field: SpectralField, kappa) -> OperatorMatrix:
    """
    Assemble K = D^{1/2} U E conj(U) D^{1/2}

    conj(U) is the multiplication by conj(u); on these windows it is U^H.

    Args:
        field: Field u
        kappa: Spectral parameter with Re kappa > 0

    Returns:
        OperatorMatrix with its Frobenius norm
    """
    kappa = _as_parameter(kappa)
    if field.spectrum[0] != 0:
        logger.debug("Nyquist coefficient is ignored by the operator assembly")
    resolvent_d, resolvent_e, multiplication = _factors(field, kappa)
    root_d = np.sqrt(resolvent_d)
    left = root_d[:, None] * multiplication
    entries = (left * resolvent_e[None, :]) @ multiplication.conj().T * root_d[None, :]
    return OperatorMatrix(
        entries=entries,
        hs_norm=hs_norm(entries),
        row_modes=field.grid.modes + window_offset(field, kappa),
        kappa=kappa
    )


def build_cyclic_matrix(field: SpectralField, kappa) -> np.ndarray:
    """E U^H D U, the cyclic rearrangement with the same traces as K"""
    resolvent_d, resolvent_e, multiplication = _factors(field, _as_parameter(kappa))
    return (resolvent_e[:, None] * multiplication.conj().T) @ (resolvent_d[:, None] * multiplication)


def build_half_sandwich(field: SpectralField, kappa) -> np.ndarray:
    """K' = D^{1/2} U E^{1/2}"""
    resolvent_d, resolvent_e, multiplication = _factors(field, _as_parameter(kappa))
    return np.sqrt(resolvent_d)[:, None] * multiplication * np.sqrt(resolvent_e)[None, :]


def _entries(matrix: Union[OperatorMatrix, np.ndarray]) -> np.ndarray:
    return matrix.entries if isinstance(matrix, OperatorMatrix) else np.asarray(matrix)


def hs_norm(matrix: Union[OperatorMatrix, np.ndarray]) -> float:
    """Frobenius norm"""
    entries = _entries(matrix)
    if entries.size == 0:
        return 0.0
    return float(np.linalg.norm(entries, 'fro'))


def trace_power(matrix: Union[OperatorMatrix, np.ndarray], ell: int, method: str = "auto") -> complex:
    """
    tr(K^ell)

    Args:
        matrix: Square matrix
        ell: Positive power
        method: "product" (repeated multiplication), "eigen" (sum of lambda^ell)
                or "auto" (product up to ell = 8)
    """
    if int(ell) != ell or ell < 1:
        raise OperatorError(f"Trace power must be a positive integer, got {ell}")
    entries = _entries(matrix)
    if method == "auto":
        method = "product" if ell <= PRODUCT_TRACE_LIMIT else "eigen"
    if method == "eigen":
        return complex(np.sum(scipy.linalg.eigvals(entries) ** ell))
    if method != "product":
        raise OperatorError(f"Unknown trace method: {method}")
    if ell == 1:
        return complex(np.trace(entries))
    power = entries
    for _ in range(ell - 2):
        power = power @ entries
    return complex(np.einsum('ij,ji->', power, entries))


def trace_powers(matrix: Union[OperatorMatrix, np.ndarray], ell_max: int) -> List[complex]:
    """tr(K), ..., tr(K^ell_max) in one pass"""
    if ell_max < 1:
        raise OperatorError(f"ell_max must be positive, got {ell_max}")
    entries = _entries(matrix)
    traces = [complex(np.trace(entries))]
    power = entries
    for _ in range(2, min(ell_max, PRODUCT_TRACE_LIMIT) + 1):
        traces.append(complex(np.einsum('ij,ji->', power, entries)))
        power = power @ entries
    if ell_max > PRODUCT_TRACE_LIMIT:
        eigenvalues = scipy.linalg.eigvals(entries)
        for ell in range(PRODUCT_TRACE_LIMIT + 1, ell_max + 1):
            traces.append(complex(np.sum(eigenvalues ** ell)))
    return traces


def _require_aligned(field: SpectralField, kappa: SpectralParameter) -> float:
    shift = 2.0 * kappa.im / field.grid.spacing
    if abs(shift - round(shift)) > 1e-9 * max(1.0, abs(shift)):
        raise LatticeAlignmentError(
            f"2 Im kappa = {2 * kappa.im} is not on the lattice of spacing {field.grid.spacing}"
        )
    return 2.0 * kappa.im


def leading_term_closed_form(field: SpectralField, kappa, finite_lattice: bool = False) -> float:
    """
    Re tr K in closed form

    The continuum value is
        int 2 Re(kappa) |u_hat(xi + 2 Im kappa)|^2 / (4 Re(kappa)^2 + xi^2) dxi
        = L sum_m 2a |c_m|^2 / (4a^2 + (xi_m - 2b)^2).
    With finite_lattice the resolvent sum is restricted to the windows used
    by build_operator_matrix and summed exactly with digamma differences.
    """
    kappa = _as_parameter(kappa)
    shift = _require_aligned(field, kappa)
    grid = field.grid
    power = np.abs(field.spectrum) ** 2
    power[0] = 0.0
    if not finite_lattice:
        a = kappa.re
        weights = 2.0 * a / (4.0 * a ** 2 + (grid.frequencies - shift) ** 2)
        return float(grid.box_length * np.sum(weights * power))

    h = grid.spacing
    half = grid.points // 2
    offset = window_offset(field, kappa)
    nonzero = power > 0
    modes = grid.modes[nonzero].astype(float)
    if modes.size == 0:
        return 0.0
    scaled = kappa.value / h
    p = modes + 1j * scaled
    r = -1j * scaled
    lower = np.maximum(-half - offset, -half + offset - modes)
    upper = np.minimum(half - 1 - offset, half - 1 + offset - modes)
    valid = upper >= lower
    sum_p = psi(upper + 1 + p) - psi(lower + p)
    sum_r = psi(upper + 1 + r) - psi(lower + r)
    weights = np.where(valid, (sum_p - sum_r) / ((r - p) * h ** 2), 0.0)
    return float(np.real(np.sum(power[nonzero] * weights)))


def hs_closed_form_proxy(field: SpectralField, kappa) -> float:
    """L sum log(4 + (xi - 2b)^2/a^2) |c|^2 / sqrt(4a^2 + (xi - 2b)^2)"""
    kappa = _as_parameter(kappa)
    shift = _require_aligned(field, kappa)
    a = kappa.re
    xi = field.grid.frequencies - shift
    power = np.abs(field.spectrum) ** 2
    weights = np.log(4.0 + xi ** 2 / a ** 2) / np.sqrt(4.0 * a ** 2 + xi ** 2)
    return float(field.grid.box_length * np.sum(weights * power))


def series_tail_bound(hs: float, ell_max: int) -> float:
    if hs >= 1:
        return math.inf
    return hs ** (ell_max + 1) / ((ell_max + 1) * (1.0 - hs))


def alpha(field: SpectralField, kappa, method: str = "logdet",
          ell_max: int = DEFAULT_ELL_MAX, matrix: Optional[OperatorMatrix] = None,
          continuum_leading: bool = False) -> AlphaResult:
    """
    Perturbation determinant alpha(kappa; u)

    The lattice windows cut Re tr K off at the largest frequency, an error of
    order ||u||^2 / (pi max|xi|). continuum_leading swaps the lattice first
    trace for its continuum closed form, which leaves alpha independent of N
    up to the higher traces.

    Args:
        field: Field u
        kappa: Spectral parameter
        method: "logdet" (pivoted LU of I - K) or "series" (truncated trace series)
        ell_max: Series truncation
        matrix: Pre-assembled K for this field and kappa
        continuum_leading: Replace the lattice Re tr K by the continuum value

    Returns:
        AlphaResult; converged is hs < 1
    """
    kappa = _as_parameter(kappa)
    matrix = matrix if matrix is not None else build_operator_matrix(field, kappa)
    hs = matrix.hs_norm
    converged = hs < 1
    correction = 0.0
    if continuum_leading:
        correction = (leading_term_closed_form(field, kappa)
                      - leading_term_closed_form(field, kappa, finite_lattice=True))

    if method == "logdet":
        identity = np.eye(matrix.dim, dtype=complex)
        lu, _ = scipy.linalg.lu_factor(identity - matrix.entries, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.size and pivots.min() <= np.finfo(float).eps * matrix.dim:
            raise SingularOperatorError(
                f"I - K is singular for kappa = {kappa.value} (smallest pivot {pivots.min():.3e})"
            )
        value = float(-np.sum(np.log(pivots))) + correction if pivots.size else 0.0
        return AlphaResult(value=value, terms=[], ell_max=0, hs=hs, tail_bound=0.0,
                           converged=converged, method="logdet")

    if method != "series":
        raise OperatorError(f"Unknown alpha method: {method}")
    traces = trace_powers(matrix, ell_max)
    terms = [t.real / ell for ell, t in enumerate(traces, start=1)]
    tail = series_tail_bound(hs, ell_max)
    if not converged:
        logger.warning(f"Series for kappa = {kappa.value} is not certified: hs = {hs:.4f} >= 1")
    return AlphaResult(value=float(np.sum(terms)) + correction, terms=terms, ell_max=ell_max, hs=hs,
                       tail_bound=tail, converged=converged, method="series")


def default_delta(q: float) -> float:
    return 1.0 / (8.0 * q)


def lattice_range(field: SpectralField) -> range:
    """Lattice indices n with |n| inside the frequency range of the grid"""
    top = int(np.floor(field.grid.max_frequency))
    return range(-top, top + 1)


class DeterminantService:
    """kappa0 selection and lattice profiles on top of the matrix primitives"""

    def max_hs(self, field: SpectralField, kappa0: float, n_values: Sequence[int]) -> float:
        values = scheduler_service.map(
            lambda n: build_operator_matrix(field, SpectralParameter.lattice(kappa0, n)).hs_norm,
            n_values,
            job_id="hs-scan"
        )
        return max(values, default=0.0)

    def choose_kappa0(self, field: SpectralField, s: float, q: float,
                      delta: Optional[float] = None,
                      n_range: Optional[Iterable[int]] = None) -> Kappa0Choice:
        """
        Smallest kappa0 in {1, 2, 4, ...} with hs(kappa0 + i n/2) <= 1/2 for all n

        Raises:
            NormParameterError: delta outside (0, 1/(4q))
            KappaSearchError: no kappa0 up to the search cap
        """
        NormParams(s=s, q=q)
        delta = default_delta(q) if delta is None else float(delta)
        if not 0 < delta < 1.0 / (4.0 * q):
            raise NormParameterError(f"delta must lie in (0, {1.0 / (4.0 * q):g}), got {delta}")
        n_values = list(n_range if n_range is not None else lattice_range(field))

        kappa0 = 1.0
        history = []
        while kappa0 <= KAPPA0_SEARCH_CAP:
            measured = self.max_hs(field, kappa0, n_values)
            history.append((kappa0, measured))
            logger.debug(f"kappa0 = {kappa0:g}: max hs = {measured:.6f}")
            if measured <= HS_CRITERION:
                logger.info(f"Chose kappa0 = {kappa0:g} (max hs {measured:.4f}, {len(n_values)} lattice points)")
                return Kappa0Choice(kappa0=kappa0, max_hs=measured, delta=delta, history=history)
            kappa0 *= 2.0
        raise KappaSearchError(
            f"No kappa0 up to {KAPPA0_SEARCH_CAP} meets hs <= {HS_CRITERION}; data too large for the box"
        )

    def profile_row(self, field: SpectralField, kappa0: float, n: int, ell_max: int) -> ProfileRow:
        kappa = SpectralParameter.lattice(kappa0, n)
        matrix = build_operator_matrix(field, kappa)
        exact = alpha(field, kappa, "logdet", matrix=matrix)
        series = alpha(field, kappa, "series", ell_max=ell_max, matrix=matrix)
        leading_lattice = leading_term_closed_form(field, kappa, finite_lattice=True)
        return ProfileRow(
            n=n,
            alpha=exact.value,
            alpha_series=series.value,
            leading=leading_term_closed_form(field, kappa),
            leading_lattice=leading_lattice,
            residual=exact.value - leading_lattice,
            hs=matrix.hs_norm,
            tail_bound=series.tail_bound,
            converged=series.converged
        )

    def alpha_lattice_profile(self, field: SpectralField, kappa0: float, s: float, q: float,
                              n_range: Optional[Iterable[int]] = None,
                              delta: Optional[float] = None,
                              ell_max: int = DEFAULT_ELL_MAX) -> LatticeProfile:
        """
        alpha(kappa0 + i n/2), its leading term and the residual over n

        Aggregates are l^{q/2} norms weighted by <n>^{2s}; the comparison
        quantity is kappa0^{-4 delta} ||u||^4 in M^s_{2,q}.
        """
        params = NormParams(s=s, q=q, kappa0=kappa0)
        delta = default_delta(q) if delta is None else float(delta)
        n_values = list(n_range if n_range is not None else lattice_range(field))
        rows = scheduler_service.map(
            lambda n: self.profile_row(field, kappa0, n, ell_max), n_values, job_id="alpha-profile"
        )

        n_array = np.array(n_values, dtype=float)
        weights = japanese(n_array) ** (2 * s)
        exponent = q / 2.0

        def lattice_norm(values) -> float:
            return float(np.sum((weights * np.abs(values)) ** exponent) ** (1.0 / exponent))

        residual_norm = lattice_norm([row.residual for row in rows])
        leading_norm = lattice_norm([row.leading for row in rows])
        z_value = z_norm(field, params, n_values) if n_values else 0.0
        z_target = 2.0 / kappa0 * z_value ** 2
        z_identity = abs(leading_norm - z_target) / leading_norm if leading_norm > 0 else 0.0
        comparison = kappa0 ** (-4.0 * delta) * modulation_norm(field, params) ** 4

        profile = LatticeProfile(
            kappa0=kappa0, s=s, q=q, delta=delta, rows=rows,
            residual_norm=residual_norm, comparison=comparison,
            leading_norm=leading_norm, z_identity=z_identity
        )
        if profile.flagged:
            logger.warning(f"Series not certified at lattice points {profile.flagged}")
        return profile


# Global instance
determinant_service = DeterminantService()
