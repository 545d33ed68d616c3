#!/usr/bin/env python3
"""
Estimate sweeps

Ratio sweeps for the Strichartz, bilinear and L^4 interval estimates of
the free flow e^{it d_x^4}, with log-log slope fits over seeded random
ensembles.

Every sweep evaluates free packets on a periodic window that is planned
so that no packet wraps around the box during the measured horizon. The
window scales with the frequency parameter, which keeps the discrete
problem at each parameter value a rescaled copy of the others.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from config import (
    DEFAULT_EPSILON, MIN_ENSEMBLE, SWEEP_MAX_GRID, SWEEP_MAX_TIME_SAMPLES, TIME_SAMPLES_PER_UNIT
)
from services.errors import HypothesisViolation, InadmissiblePairError
from services.norms import japanese, mixed_norm
from services.scheduler import scheduler_service
from services.spectral import make_grid, synthesize_samples
from storage.models import SpectralField, SpectralGrid, SweepReport, WindowFamily

logger = logging.getLogger(__name__)

ADMISSIBLE_WEIGHTS = {"biharmonic": 4.0, "strichartz": 2.0, "derivative": 2.0}

MIN_TIME_SAMPLES = 65
L4_TIME_SAMPLES = 513
TAPER_FRACTION = 0.1
PHASE_CELLS = 4
CHUNK_ROWS = 256

Support = Tuple[float, float]


# ========================================
# ADMISSIBILITY AND HYPOTHESES
# ========================================

def _reciprocal(value: float) -> float:
    return 0.0 if math.isinf(value) else 1.0 / value


def admissibility(p: float, q: float, kind: str = "biharmonic") -> bool:
    """
    Check weight/p + 1/q = 1/2 for the given kind

    Raises:
        InadmissiblePairError: unknown kind or the relation fails
    """
    if kind not in ADMISSIBLE_WEIGHTS:
        raise InadmissiblePairError(f"Unknown estimate kind: {kind}")
    if not (p >= 2 and q >= 2):
        raise InadmissiblePairError(f"Exponents must be at least 2, got ({p}, {q})")
    weight = ADMISSIBLE_WEIGHTS[kind]
    value = weight * _reciprocal(p) + _reciprocal(q)
    if abs(value - 0.5) > 1e-12:
        raise InadmissiblePairError(
            f"({p:g}, {q:g}) is not {kind}-admissible: {weight:g}/p + 1/q = {value:g}, expected 1/2"
        )
    return True


def check_separated(low: Support, high: Support):
    """2|xi1| <= |xi2| on the supports"""
    reach = max(abs(low[0]), abs(low[1]))
    floor = min(abs(high[0]), abs(high[1]))
    same_side = (low[0] >= 0 and high[0] >= 0) or (low[1] <= 0 and high[1] <= 0)
    if not same_side or 2 * reach > floor + 1e-12:
        raise HypothesisViolation(f"Supports {low} and {high} are not separated (2|xi1| <= |xi2|)")


def check_comparable(first: Support, second: Support, separation: float):
    """Disjoint intervals on one side of zero at distance >= separation / 2"""
    if not (first[0] > 0 and second[0] > 0):
        raise HypothesisViolation(f"Supports {first} and {second} must lie in (0, inf)")
    gap = max(second[0] - first[1], first[0] - second[1])
    if gap < 0.5 * separation:
        raise HypothesisViolation(
            f"Supports {first} and {second} are {gap:g} apart, need at least {0.5 * separation:g}"
        )


def _check_ensemble(ensemble: int):
    if ensemble < MIN_ENSEMBLE:
        raise HypothesisViolation(f"Ensemble size must be at least {MIN_ENSEMBLE}, got {ensemble}")


# ========================================
# WINDOW PLANNING
# ========================================

@dataclass(frozen=True)
class SweepWindow:
    box_length: float
    points: int
    horizon: float
    time_samples: int
    centers: Tuple[float, ...]
    width: float

    @property
    def grid(self) -> SpectralGrid:
        return make_grid(self.box_length, self.points)

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.box_length

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.time_samples)

    def to_dict(self) -> dict:
        return {
            "box_length": self.box_length,
            "points": self.points,
            "horizon": self.horizon,
            "time_samples": self.time_samples,
            "centers": list(self.centers),
            "width": self.width,
        }


def group_velocity_range(support: Support) -> Tuple[float, float]:
    """Velocities -4 xi^3 of e^{it xi^4} over a support, as (min, max)"""
    lo, hi = support
    return -4.0 * hi ** 3, -4.0 * lo ** 3


def _next_power_of_two(value: float) -> int:
    return int(2 ** math.ceil(math.log2(max(value, 8))))


def plan_window(supports: Sequence[Support], horizon: Optional[float] = None,
                resolution: int = 16, margin: float = 1.25, collision: bool = False,
                oversample: float = 2.0, max_points: int = SWEEP_MAX_GRID,
                max_time_samples: int = SWEEP_MAX_TIME_SAMPLES) -> SweepWindow:
    """
    Plan the periodic window for free packets on the given supports

    Args:
        supports: Frequency intervals (lo, hi), one per packet
        horizon: Requested time horizon; shortened when the window would
                 exceed max_points or max_time_samples
        resolution: Lattice points per narrowest band at the minimal box
        margin: Safety factor on travel distances
        collision: Two packets placed at -D and +D so that the faster one
                   overtakes the slower one within the horizon
        oversample: Grid points per lattice point of total bandwidth

    Returns:
        SweepWindow with box length, point count, horizon and packet centres
    """
    supports = [(float(lo), float(hi)) for lo, hi in supports]
    if not supports or any(hi <= lo for lo, hi in supports):
        raise HypothesisViolation(f"Supports must be non-empty intervals, got {supports}")
    bands = [hi - lo for lo, hi in supports]
    narrowest = min(bands)
    total = sum(bands)
    width = 8.0 * np.pi / narrowest
    velocities = [group_velocity_range(s) for s in supports]
    lowest = min(v[0] for v in velocities)
    highest = max(v[1] for v in velocities)
    span = highest - lowest
    minimal_length = 2.0 * np.pi * resolution / narrowest

    if collision:
        if len(supports) != 2:
            raise HypothesisViolation("A collision window needs exactly two supports")
        middles = [0.5 * (v[0] + v[1]) for v in velocities]
        fast, slow = (0, 1) if middles[0] > middles[1] else (1, 0)
        gap_min = velocities[fast][0] - velocities[slow][1]
        gap_max = velocities[fast][1] - velocities[slow][0]
        if gap_min <= 0:
            raise HypothesisViolation(f"Velocity ranges of {supports} overlap; packets are not transversal")
        distance = 2.0 * width
        horizon = margin * (2.0 * distance + 2.0 * width) / gap_min
        box_length = max(gap_max * horizon - 2.0 * distance + 4.0 * width, minimal_length, 8.0 * width)
        centers = [0.0, 0.0]
        centers[fast] = -distance
        centers[slow] = distance
    else:
        if horizon is None or not horizon > 0:
            raise HypothesisViolation(f"Horizon must be positive, got {horizon}")
        if span > 0:
            longest = (max_points - 16) * 2.0 * np.pi / (oversample * total)
            by_points = (longest / margin - 2.0 * width) / span
            by_samples = (max_time_samples - 1) * 2.0 * np.pi / (4.0 * span * total)
            horizon = min(horizon, by_points, by_samples)
        if not horizon > 0:
            raise HypothesisViolation(f"No horizon keeps packets on {supports} inside {max_points} points")
        travel_low = min(0.0, lowest * horizon)
        travel_high = max(0.0, highest * horizon)
        box_length = max(margin * (travel_high - travel_low + 2.0 * width), minimal_length, 8.0 * width)
        centers = [-0.5 * (travel_low + travel_high)] * len(supports)

    spacing = 2.0 * np.pi / box_length
    points = _next_power_of_two(math.ceil(oversample * total / spacing) + 16)
    if points > max_points:
        raise HypothesisViolation(f"Window needs {points} points, above the cap of {max_points}")
    # at least TIME_SAMPLES_PER_UNIT per unit time and four per phase cycle of the fastest mode
    cycles = 4.0 * horizon * span * total / (2.0 * np.pi)
    per_unit = TIME_SAMPLES_PER_UNIT * horizon
    samples = int(min(max(math.ceil(max(cycles, per_unit)) + 1, MIN_TIME_SAMPLES), max_time_samples))
    window = SweepWindow(
        box_length=box_length, points=points, horizon=horizon,
        time_samples=samples, centers=tuple(centers), width=width
    )
    logger.debug(f"Planned window {window.to_dict()} for supports {supports}")
    return window


# ========================================
# PACKETS AND FREE EVOLUTION
# ========================================

@dataclass(frozen=True, eq=False)
class Packet:
    """Lattice modes and torus coefficients of a band-limited datum"""
    modes: np.ndarray
    coefficients: np.ndarray
    spacing: float
    box_length: float

    @property
    def frequencies(self) -> np.ndarray:
        return self.modes * self.spacing

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(self.box_length * np.sum(np.abs(self.coefficients) ** 2)))

    def with_multiplier(self, multiplier: Callable) -> 'Packet':
        return Packet(self.modes, self.coefficients * multiplier(self.frequencies),
                      self.spacing, self.box_length)


def support_modes(window: SweepWindow, support: Support) -> np.ndarray:
    """Lattice indices k with lo <= k h < hi"""
    h = window.spacing
    first = math.ceil(support[0] / h - 1e-9)
    last = math.ceil(support[1] / h - 1e-9) - 1
    if last - first < 1:
        raise HypothesisViolation(f"Support {support} holds fewer than two lattice points")
    return np.arange(first, last + 1)


def random_packet(window: SweepWindow, support: Support, center: float,
                  rng: np.random.Generator) -> Packet:
    """
    Packet with amplitudes in [1/2, 1], cos^2 taper on the outer tenth
    of the support, random phases and centre `center`

    Phases are independent at PHASE_CELLS + 1 nodes across the support, with
    steps below pi between neighbours, and linear in between. The group delay
    they add stays under half the window width, so packets remain localized.
    """
    modes = support_modes(window, support)
    xi = modes * window.spacing
    position = (xi - support[0]) / (support[1] - support[0])
    edge = np.minimum(position, 1.0 - position) / TAPER_FRACTION
    taper = np.where(edge < 1.0, np.sin(0.5 * np.pi * edge) ** 2, 1.0)
    amplitudes = rng.uniform(0.5, 1.0, modes.size) * taper
    nodes = np.linspace(support[0], support[1], PHASE_CELLS + 1)
    steps = rng.uniform(-np.pi, np.pi, PHASE_CELLS + 1)
    steps[0] = rng.uniform(0.0, 2.0 * np.pi)
    phase = np.interp(xi, nodes, np.cumsum(steps))
    coefficients = amplitudes * np.exp(1j * (phase - xi * center))
    return Packet(modes, coefficients, window.spacing, window.box_length)


def evolve(window: SweepWindow, packet: Packet) -> Iterator[np.ndarray]:
    """
    Samples of e^{it d^4} applied to the packet at the window times

    The packet is shifted to its own baseband; moduli are unchanged.
    Yields row blocks (times x points).
    """
    grid = window.grid
    shift = int(round(0.5 * (packet.modes[0] + packet.modes[-1])))
    columns = packet.modes - shift + grid.points // 2
    if columns.min() < 1 or columns.max() > grid.points - 1:
        raise HypothesisViolation(f"Packet band does not fit the {grid.points}-point window")
    xi = packet.frequencies
    times = window.times
    for start in range(0, times.size, CHUNK_ROWS):
        block = times[start:start + CHUNK_ROWS]
        spectra = np.zeros((block.size, grid.points), dtype=complex)
        spectra[:, columns] = packet.coefficients[None, :] * np.exp(1j * block[:, None] * xi[None, :] ** 4)
        yield synthesize_samples(spectra, grid)


def row_norms(samples: np.ndarray, dx: float, q: float) -> np.ndarray:
    magnitude = np.abs(samples)
    if math.isinf(q):
        return magnitude.max(axis=1)
    return (np.sum(magnitude ** q, axis=1) * dx) ** (1.0 / q)


def packet_spacetime_norm(window: SweepWindow, packet: Packet, p: float, q: float) -> float:
    """L^p_t L^q_x of the free evolution over the window horizon"""
    dx = window.box_length / window.points
    spatial = np.concatenate([row_norms(block, dx, q) for block in evolve(window, packet)])
    return mixed_norm(window.times, spatial, p, window.horizon)


def bilinear_ratios(window: SweepWindow, first: Packet, second: Packet) -> Tuple[float, float]:
    """
    ||e^{it d^4}u0 e^{it d^4}v0||_{L^2_{x,t}} / (||u0|| ||v0||) and the same with conj(v)

    Zero data gives 0.
    """
    scale = first.l2_norm * second.l2_norm
    if scale == 0:
        return 0.0, 0.0
    dx = window.box_length / window.points
    product, conjugate = [], []
    for u, v in zip(evolve(window, first), evolve(window, second)):
        product.append(row_norms(u * v, dx, 2.0))
        conjugate.append(row_norms(u * np.conj(v), dx, 2.0))
    times = window.times
    return (
        mixed_norm(times, np.concatenate(product), 2.0, window.horizon) / scale,
        mixed_norm(times, np.concatenate(conjugate), 2.0, window.horizon) / scale,
    )


def free_evolution_proxy_check(field: SpectralField, horizon: float, samples: int = 129) -> dict:
    """
    ||e^{it d^4} v0||_{L^2_{x,t}([0, T])} against sqrt(T) ||v0||
    """
    grid = field.grid
    times = np.linspace(0.0, horizon, samples)
    spectra = field.spectrum[None, :] * np.exp(1j * times[:, None] * grid.frequencies[None, :] ** 4)
    spatial = row_norms(synthesize_samples(spectra, grid), grid.dx, 2.0)
    measured = mixed_norm(times, spatial, 2.0, horizon)
    expected = math.sqrt(horizon) * math.sqrt(field.mass)
    error = abs(measured - expected) / expected if expected > 0 else abs(measured)
    return {"measured": measured, "expected": expected, "relative_error": error}


# ========================================
# FITTING
# ========================================

def fit(parameters: Sequence[float], ratios: Sequence[Sequence[float]]) -> Tuple[float, float, float]:
    """
    Least squares line through (log parameter, log ratio) over all samples

    Returns:
        (slope, intercept, standard error of the slope)
    """
    x, y = [], []
    for parameter, row in zip(parameters, ratios):
        for ratio in row:
            if not (ratio > 0 and math.isfinite(ratio)):
                raise HypothesisViolation(f"Cannot fit non-positive ratio {ratio} at {parameter}")
            x.append(math.log(parameter))
            y.append(math.log(ratio))
    if len(set(x)) < 2:
        raise HypothesisViolation("A slope fit needs at least two parameter values")
    result = linregress(x, y)
    return float(result.slope), float(result.intercept), float(result.stderr)


# ========================================
# SWEEP SERVICE
# ========================================

class SweepService:
    """Seeded ensemble sweeps, parallel over (parameter, sample) pairs"""

    def _run(self, name: str, count: int, ensemble: int, sample: Callable) -> List[list]:
        pairs = [(i, j) for i in range(count) for j in range(ensemble)]
        flat = scheduler_service.map(lambda pair: sample(*pair), pairs, job_id=name)
        return [flat[i * ensemble:(i + 1) * ensemble] for i in range(count)]

    @staticmethod
    def _rng(seed: int, i: int, j: int) -> np.random.Generator:
        return np.random.default_rng([seed, i, j])

    def strichartz_sweep(self, p: float, q: float, kind: str = "biharmonic",
                         frequencies: Sequence[float] = (4, 8, 16, 32), horizon: float = 1.0,
                         ensemble: int = MIN_ENSEMBLE, seed: int = 0,
                         resolution: int = 16) -> SweepReport:
        """
        Ratios ||e^{it d^4} phi||_{L^p_t L^q_x} / ||phi||_{L^2} over data on [N, 2N)

        The horizon is measured in dispersive units: the run at band N
        covers [0, horizon / N^4]. Kind "strichartz" multiplies the ratio by
        <N>^{2/p}; kind "derivative" measures ||D^{2/p} e^{it d^4} phi||.
        """
        admissibility(p, q, kind)
        _check_ensemble(ensemble)
        if not horizon > 0:
            raise HypothesisViolation(f"Horizon must be positive, got {horizon}")
        if any(n < 1 for n in frequencies):
            raise HypothesisViolation(f"Band frequencies must be at least 1, got {list(frequencies)}")
        gain = 2.0 * _reciprocal(p)
        oversample = 4.0 if math.isinf(q) else max(2.0, q)
        windows = [
            plan_window([(n, 2 * n)], horizon=horizon / n ** 4, resolution=resolution, oversample=oversample)
            for n in frequencies
        ]

        def sample(i: int, j: int) -> float:
            n = frequencies[i]
            window = windows[i]
            packet = random_packet(window, (n, 2 * n), window.centers[0], self._rng(seed, i, j))
            norm = packet.l2_norm
            if kind == "derivative" and gain > 0:
                packet = packet.with_multiplier(lambda xi: np.abs(xi) ** gain)
            ratio = packet_spacetime_norm(window, packet, p, q) / norm
            if kind == "strichartz":
                ratio *= float(japanese(n)) ** gain
            return ratio

        logger.info(f"Strichartz sweep ({kind}, p={p:g}, q={q:g}) over N={list(frequencies)}")
        ratios = self._run("sweep-strichartz", len(frequencies), ensemble, sample)
        slope, intercept, stderr = fit(frequencies, ratios)
        return SweepReport(
            name=f"strichartz-{kind}", parameter_label="N", parameters=[float(n) for n in frequencies],
            ratios=ratios, slope=slope, intercept=intercept, slope_stderr=stderr,
            max_ratio=max(max(row) for row in ratios), ensemble_size=ensemble, seed=seed,
            target_slope=0.0,
            extras={"p": [p], "q": [q], "kind": [kind], "windows": [w.to_dict() for w in windows]}
        )

    def bilinear_sweep(self, mode: str = "separated", frequencies: Sequence[float] = (8, 16, 32, 64),
                       low: float = 64.0, high: float = 64.0,
                       separations: Sequence[float] = (1, 2, 4, 8),
                       ensemble: int = MIN_ENSEMBLE, seed: int = 0,
                       resolution: int = 16) -> SweepReport:
        """
        Bilinear transversality ratios

        separated: u0 on [N/4, N/2), v0 on [N, 2N), swept over N (target slope -3/2).
        comparable: u0 on [N1 - b/2, N1 + b/2), v0 on [N2 + lambda - b/2, N2 + lambda + b/2)
        with b = min(lambda) / 8, swept over lambda (target slope -1/2; the fit
        against (lambda max(N1, N2)^2)^{1/2} targets -1).
        """
        _check_ensemble(ensemble)
        if mode == "separated":
            if any(n < 4 for n in frequencies):
                raise HypothesisViolation(f"Separated mode needs N >= 4, got {list(frequencies)}")
            parameters = [float(n) for n in frequencies]
            supports = [((n / 4, n / 2), (n, 2 * n)) for n in parameters]
            for first, second in supports:
                check_separated(first, second)
            label, target = "N", -1.5
        elif mode == "comparable":
            if any(lam <= 0 for lam in separations):
                raise HypothesisViolation(f"Separations must be positive, got {list(separations)}")
            parameters = [float(lam) for lam in separations]
            band = min(parameters) / 8.0
            supports = [
                ((low - band / 2, low + band / 2), (high + lam - band / 2, high + lam + band / 2))
                for lam in parameters
            ]
            for (first, second), lam in zip(supports, parameters):
                check_comparable(first, second, lam)
            label, target = "lambda", -0.5
        else:
            raise HypothesisViolation(f"Unknown bilinear mode: {mode}")

        windows = [plan_window(pair, collision=True, resolution=resolution) for pair in supports]

        def sample(i: int, j: int) -> Tuple[float, float]:
            window = windows[i]
            rng = self._rng(seed, i, j)
            first = random_packet(window, supports[i][0], window.centers[0], rng)
            second = random_packet(window, supports[i][1], window.centers[1], rng)
            return bilinear_ratios(window, first, second)

        logger.info(f"Bilinear sweep ({mode}) over {label}={parameters}")
        results = self._run("sweep-bilinear", len(parameters), ensemble, sample)
        ratios = [[r[0] for r in row] for row in results]
        conjugate = [[r[1] for r in row] for row in results]
        slope, intercept, stderr = fit(parameters, ratios)
        extras = {
            "mode": [mode],
            "conjugate_ratios": conjugate,
            "windows": [w.to_dict() for w in windows],
        }
        if mode == "comparable":
            scales = [math.sqrt(lam * max(low, high) ** 2) for lam in parameters]
            scale_slope, _, scale_stderr = fit(scales, ratios)
            extras.update({"scale": scales, "scale_slope": [scale_slope],
                           "scale_slope_stderr": [scale_stderr], "scale_target": [-1.0]})
        return SweepReport(
            name=f"bilinear-{mode}", parameter_label=label, parameters=parameters,
            ratios=ratios, slope=slope, intercept=intercept, slope_stderr=stderr,
            max_ratio=max(max(row) for row in ratios), ensemble_size=ensemble, seed=seed,
            target_slope=target, extras=extras
        )

    def l4_interval_sweep(self, mode: str = "length", lengths: Sequence[float] = (4, 16, 64),
                          offset: float = 32.0, offsets: Sequence[float] = (8, 16, 32, 64),
                          length: float = 4.0, q: float = 4.0, horizon: float = 0.5,
                          epsilon: float = DEFAULT_EPSILON, ensemble: int = MIN_ENSEMBLE,
                          seed: int = 0, resolution: int = 16,
                          windows: Optional[WindowFamily] = None) -> SweepReport:
        """
        ||u_I||_{L^4_{x,t}} / (T^{eps/4} |I|^{1/4 - 1/q + eps} max_I <lambda>^{-3/4} X)

        u_I is the sum of the boxes lambda in I of the free evolution and X is
        the free-solution proxy ||<lambda>^{1/2} ||box_lambda u0||_{L^2}||_{l^q}.
        Mode "length" sweeps |I| at a fixed offset, mode "offset" sweeps the
        offset at a fixed |I| and also reports the response without the
        <lambda>^{-3/4} factor.
        """
        _check_ensemble(ensemble)
        if not 0 < horizon < 1:
            raise HypothesisViolation(f"Horizon must lie in (0, 1), got {horizon}")
        if not q >= 4:
            raise HypothesisViolation(f"Summation index must satisfy 4 <= q <= inf, got {q}")
        windows = windows or WindowFamily()
        if mode == "length":
            intervals = [(offset, offset + float(ell)) for ell in lengths]
            parameters = [float(ell) for ell in lengths]
            label = "length"
        elif mode == "offset":
            intervals = [(float(o), float(o) + length) for o in offsets]
            parameters = [float(o) for o in offsets]
            label = "offset"
        else:
            raise HypothesisViolation(f"Unknown L4 mode: {mode}")
        for lo, hi in intervals:
            if hi - lo < 1:
                raise HypothesisViolation(f"Interval [{lo:g}, {hi:g}) is shorter than 1")
            if not (lo >= 0 or hi <= 0):
                raise HypothesisViolation(f"Interval [{lo:g}, {hi:g}) must lie on one side of 0")

        plans = [
            plan_window([interval], horizon=horizon, resolution=resolution,
                        max_time_samples=L4_TIME_SAMPLES)
            for interval in intervals
        ]

        def sample(i: int, j: int) -> Tuple[float, float]:
            lo, hi = intervals[i]
            window = plans[i]
            packet = random_packet(window, (lo, hi), window.centers[0], self._rng(seed, i, j))
            boxes = np.arange(math.ceil(lo), math.ceil(hi))
            restricted = packet.with_multiplier(
                lambda xi: sum(windows(xi, int(n)) for n in boxes)
            )
            norm = packet_spacetime_norm(window, restricted, 4.0, 4.0)

            xi = packet.frequencies
            power = np.abs(packet.coefficients) ** 2
            neighbourhood = np.arange(math.floor(lo) - 1, math.ceil(hi) + 2)
            box_norms = np.array([
                math.sqrt(window.box_length * np.sum(windows(xi, int(n)) ** 2 * power))
                for n in neighbourhood
            ])
            weighted = japanese(neighbourhood) ** 0.5 * box_norms
            proxy = float(weighted.max()) if math.isinf(q) else float(np.sum(weighted ** q) ** (1.0 / q))

            scale = window.horizon ** (epsilon / 4) * (hi - lo) ** (0.25 - _reciprocal(q) + epsilon) * proxy
            decay = float(np.max(japanese(boxes) ** -0.75))
            return norm / (scale * decay), norm / scale

        logger.info(f"L4 interval sweep ({mode}) over {label}={parameters}")
        results = self._run("sweep-l4", len(parameters), ensemble, sample)
        ratios = [[r[0] for r in row] for row in results]
        responses = [[r[1] for r in row] for row in results]
        slope, intercept, stderr = fit(parameters, ratios)
        extras = {
            "mode": [mode],
            "q": [q],
            "epsilon": [epsilon],
            "response": responses,
            "windows": [w.to_dict() for w in plans],
        }
        if mode == "offset":
            response_slope, _, response_stderr = fit(parameters, responses)
            extras.update({"response_slope": [response_slope], "response_slope_stderr": [response_stderr],
                           "response_bound": [-0.75]})
        return SweepReport(
            name=f"l4-{mode}", parameter_label=label, parameters=parameters,
            ratios=ratios, slope=slope, intercept=intercept, slope_stderr=stderr,
            max_ratio=max(max(row) for row in ratios), ensemble_size=ensemble, seed=seed,
            target_slope=None, extras=extras
        )


# Global instance
sweep_service = SweepService()
