#!/usr/bin/env python3
"""
Norm service

Lebesgue, Sobolev, modulation and Z norms of fields, mixed space-time
norms of trajectories, and the scaling checks.

Line formulas are discretized with  dxi -> (2*pi/L) sum_k  and
|u_hat(xi_k)|^2 -> (L^2 / 2*pi) |c_k|^2, so every integral of the form
int w(xi) |u_hat(xi)|^2 dxi becomes  L * sum_k w(xi_k) |c_k|^2.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from services.errors import LatticeAlignmentError, NormParameterError
from services.spectral import box_range, rescale_box, synthesize
from storage.models import NormParams, SpectralField, Trajectory, WindowFamily

logger = logging.getLogger(__name__)


def japanese(values) -> np.ndarray:
    """<xi> = (1 + xi^2)^{1/2}"""
    return np.sqrt(1.0 + np.asarray(values, dtype=float) ** 2)


def lebesgue_norm(field: SpectralField, p: float) -> float:
    """(sum_j |u(x_j)|^p dx)^{1/p}, the sample maximum for p = inf"""
    return lebesgue_norm_samples(field.physical, field.grid.dx, p)


def lebesgue_norm_samples(samples: np.ndarray, dx: float, p: float) -> float:
    if not p >= 1:
        raise NormParameterError(f"Lebesgue exponent must be at least 1, got {p}")
    magnitude = np.abs(samples)
    if math.isinf(p):
        return float(magnitude.max()) if magnitude.size else 0.0
    return float((np.sum(magnitude ** p) * dx) ** (1.0 / p))


def mixed_norm(times: Sequence[float], spatial: Sequence[float], p: float, horizon: float) -> float:
    """
    L^p in time of precomputed spatial norms over [t_0, t_0 + horizon]

    Trapezoid rule on a uniform time grid; when the horizon ends between
    samples the last interval is closed by linear interpolation.
    """
    times = np.asarray(times, dtype=float)
    spatial = np.asarray(spatial, dtype=float)
    if times.size == 0:
        raise NormParameterError("Empty trajectory")
    if not p >= 1:
        raise NormParameterError(f"Time exponent must be at least 1, got {p}")
    if not horizon > 0:
        raise NormParameterError(f"Horizon must be positive, got {horizon}")
    span = times[-1] - times[0]
    if horizon > span * (1 + 1e-9) + 1e-15:
        raise NormParameterError(f"Horizon {horizon} exceeds the trajectory span {span}")
    if times.size > 2:
        steps = np.diff(times)
        if np.max(np.abs(steps - steps[0])) > 1e-6 * abs(steps[0]):
            raise NormParameterError("Trajectory is not sampled on a uniform time grid")

    end = times[0] + horizon
    inside = times <= end + 1e-12 * max(1.0, abs(end))
    t = times[inside]
    g = spatial[inside]
    if t[-1] < end - 1e-12 * max(1.0, abs(end)):
        following = np.searchsorted(times, end)
        t0, t1 = times[following - 1], times[following]
        weight = (end - t0) / (t1 - t0)
        t = np.append(t, end)
        g = np.append(g, (1 - weight) * spatial[following - 1] + weight * spatial[following])

    if math.isinf(p):
        return float(g.max())
    if t.size == 1:
        return 0.0
    return float(trapezoid(g ** p, t) ** (1.0 / p))


def spacetime_norm(trajectory: Trajectory, p: float, q: float, horizon: float) -> float:
    """
    L^p_t L^q_x norm of a trajectory over [0, T]

    Args:
        trajectory: Uniformly sampled snapshots
        p: Time exponent (inf allowed)
        q: Space exponent (inf allowed)
        horizon: Length T of the time interval

    Returns:
        The mixed norm
    """
    if len(trajectory) == 0:
        raise NormParameterError("Empty trajectory")
    spatial = [lebesgue_norm(f, q) for f in trajectory.fields]
    return mixed_norm(trajectory.times, spatial, p, horizon)


def sobolev_norm(field: SpectralField, s: float, homogeneous: bool = False) -> float:
    """(L sum <xi>^{2s} |c_k|^2)^{1/2}; |xi|^{2s} with the zero mode dropped when homogeneous"""
    xi = field.grid.frequencies
    power = np.abs(field.spectrum) ** 2
    if homogeneous:
        nonzero = xi != 0
        weights = np.zeros_like(xi)
        weights[nonzero] = np.abs(xi[nonzero]) ** (2 * s)
        if s == 0:
            weights[~nonzero] = 1.0
    else:
        weights = japanese(xi) ** (2 * s)
    return float(np.sqrt(field.grid.box_length * np.sum(weights * power)))


def box_norms(field: SpectralField, windows: Optional[WindowFamily] = None,
              boxes: Optional[Iterable[int]] = None):
    """
    L^2 norms of the frequency-uniform pieces

    Returns:
        (box indices, ||box_n u||_{L^2}) as arrays
    """
    windows = windows or WindowFamily()
    boxes = np.array(list(boxes if boxes is not None else box_range(field.grid)), dtype=int)
    xi = field.grid.frequencies
    power = np.abs(field.spectrum) ** 2
    norms = np.empty(boxes.size)
    for i, n in enumerate(boxes):
        lo = np.searchsorted(xi, n - 1.0, side="left")
        hi = np.searchsorted(xi, n + 1.0, side="right")
        weights = windows(xi[lo:hi], n) ** 2
        norms[i] = np.sqrt(field.grid.box_length * np.sum(weights * power[lo:hi]))
    return boxes, norms


def modulation_norm(field: SpectralField, params: NormParams,
                    windows: Optional[WindowFamily] = None) -> float:
    """(sum_n <n>^{sq} ||box_n u||^q)^{1/q}"""
    boxes, norms = box_norms(field, windows)
    weighted = japanese(boxes) ** params.s * norms
    return float(np.sum(weighted ** params.q) ** (1.0 / params.q))


def _require_integer_lattice(field: SpectralField):
    if field.grid.periods is None:
        raise LatticeAlignmentError(
            f"Box length {field.grid.box_length} is not a multiple of 2*pi; "
            f"integer shifts do not land on the lattice"
        )


def z_profile(field: SpectralField, params: NormParams, boxes: Optional[Iterable[int]] = None):
    """
    Inner integrals of the Z norm

    I_n = int kappa0^2 |u_hat(xi + n)|^2 / (4 kappa0^2 + xi^2) dxi
        = L sum_j kappa0^2 |c_j|^2 / (4 kappa0^2 + (xi_j - n)^2)

    Returns:
        (box indices, I_n) as arrays
    """
    _require_integer_lattice(field)
    boxes = np.array(list(boxes if boxes is not None else box_range(field.grid)), dtype=int)
    kappa0 = params.kappa0
    xi = field.grid.frequencies
    power = np.abs(field.spectrum) ** 2
    shifted = xi[None, :] - boxes[:, None]
    kernel = kappa0 ** 2 / (4.0 * kappa0 ** 2 + shifted ** 2)
    return boxes, field.grid.box_length * kernel @ power


def z_norm(field: SpectralField, params: NormParams, boxes: Optional[Iterable[int]] = None) -> float:
    """(sum_n <n>^{sq} I_n^{q/2})^{1/q}"""
    boxes, inner = z_profile(field, params, boxes)
    terms = japanese(boxes) ** (params.s * params.q) * inner ** (params.q / 2)
    return float(np.sum(terms) ** (1.0 / params.q))


def z_norm_tail_bound(field: SpectralField, params: NormParams) -> List[float]:
    """
    Per-box bound on the part of I_n lost to the finite lattice

    |u_hat|^2 beyond the lattice is bounded by its largest value on the
    outer tenth of the lattice; the kernel integrates to
    kappa0 (pi/2 - arctan(R / 2 kappa0)) over |xi| > R on each side.
    """
    _require_integer_lattice(field)
    grid = field.grid
    band = max(1, grid.points // 20)
    edges = np.concatenate([field.spectrum[:band], field.spectrum[-band:]])
    sup = (grid.box_length ** 2 / (2 * np.pi)) * float(np.max(np.abs(edges)) ** 2)
    bounds = []
    for n in box_range(grid):
        reach = max(0.0, min(grid.frequencies[-1] - n, n - grid.frequencies[0]))
        bounds.append(sup * params.kappa0 * (np.pi / 2 - np.arctan(reach / (2 * params.kappa0))))
    return bounds


@dataclass
class ScalingReport:
    scale: float
    lhs: float
    rhs: float
    ratio: float
    regime: str

    def to_dict(self) -> dict:
        return {"lambda": self.scale, "lhs": self.lhs, "rhs": self.rhs,
                "ratio": self.ratio, "regime": self.regime}


def scaling_check(field: SpectralField, scale: float, params: NormParams,
                  windows: Optional[WindowFamily] = None) -> ScalingReport:
    """
    Compare ||f(lambda .)||_M with its dilation bound

    lambda <= 1: rhs = lambda^{-1/q'} ||f||_M;  lambda > 1: rhs = lambda^{s - 1/2} ||f||_M
    """
    if not scale > 0:
        raise NormParameterError(f"Scale must be positive, got {scale}")
    lhs = modulation_norm(rescale_box(field, scale), params, windows)
    base = modulation_norm(field, params, windows)
    if scale <= 1:
        rhs = scale ** (-(1.0 - 1.0 / params.q)) * base
        regime = "contraction"
    else:
        rhs = scale ** (params.s - 0.5) * base
        regime = "dilation"
    ratio = lhs / rhs if rhs > 0 else 0.0
    return ScalingReport(scale=scale, lhs=lhs, rhs=rhs, ratio=ratio, regime=regime)


def scale_data(field: SpectralField, scale: float) -> SpectralField:
    """Critical data scaling u0 -> lambda u0(lambda x) on the grid (L/lambda, N)"""
    scaled = rescale_box(field, scale)
    return synthesize(scale * scaled.spectrum, scaled.grid)


def critical_scaling_check(field: SpectralField, scale: float) -> float:
    """||lambda u0(lambda .)||_{H^{-1/2}} / ||u0||_{H^{-1/2}} (homogeneous)"""
    base = sobolev_norm(field, -0.5, homogeneous=True)
    if base == 0:
        return 0.0
    return sobolev_norm(scale_data(field, scale), -0.5, homogeneous=True) / base


def equivalence_ratio(field: SpectralField, params: NormParams) -> float:
    """z_norm / modulation_norm"""
    denominator = modulation_norm(field, params)
    return z_norm(field, params) / denominator if denominator > 0 else 0.0
