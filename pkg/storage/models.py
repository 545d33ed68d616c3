import math
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property
from typing import Callable, Dict, List, Optional

import numpy as np

from services.errors import GridError, FieldError, NormParameterError, OperatorError


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _complex_pairs(values) -> list:
    return [[float(v.real), float(v.imag)] for v in values]


def _from_pairs(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic box [-L/2, L/2) with N points and the lattice 2*pi*k/L"""
    box_length: float
    points: int

    def __post_init__(self):
        if isinstance(self.points, bool) or int(self.points) != self.points:
            raise GridError(f"Point count must be an integer, got {self.points}")
        if self.points % 2 != 0:
            raise GridError(f"Point count must be even, got {self.points}")
        if self.points < 8:
            raise GridError(f"Point count must be at least 8, got {self.points}")
        if not (math.isfinite(self.box_length) and self.box_length > 0):
            raise GridError(f"Box length must be positive, got {self.box_length}")

    @cached_property
    def modes(self) -> np.ndarray:
        return _readonly(np.arange(-self.points // 2, self.points // 2))

    @cached_property
    def frequencies(self) -> np.ndarray:
        return _readonly(2.0 * np.pi * self.modes / self.box_length)

    @property
    def spacing(self) -> float:
        """Frequency lattice spacing h = 2*pi/L"""
        return 2.0 * np.pi / self.box_length

    @property
    def dx(self) -> float:
        return self.box_length / self.points

    @cached_property
    def x(self) -> np.ndarray:
        return _readonly(-0.5 * self.box_length + self.dx * np.arange(self.points))

    @property
    def max_frequency(self) -> float:
        return self.spacing * (self.points // 2)

    @property
    def periods(self) -> Optional[int]:
        """L / 2*pi when it is an integer, else None"""
        ratio = self.box_length / (2.0 * np.pi)
        nearest = round(ratio)
        if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return None

    def index_of(self, mode: int) -> int:
        return int(mode) + self.points // 2

    def to_dict(self) -> dict:
        return {"box_length": self.box_length, "points": self.points}

    @staticmethod
    def from_dict(data: dict) -> 'SpectralGrid':
        return SpectralGrid(box_length=float(data["box_length"]), points=int(data["points"]))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Samples u(x_j) together with torus coefficients c_k = (1/L) int u e^{-i xi_k x} dx"""
    grid: SpectralGrid
    physical: np.ndarray
    spectrum: np.ndarray

    def __post_init__(self):
        for name in ("physical", "spectrum"):
            values = np.asarray(getattr(self, name), dtype=complex)
            if values.shape != (self.grid.points,):
                raise FieldError(
                    f"{name} has shape {values.shape}, grid expects ({self.grid.points},)"
                )
            object.__setattr__(self, name, _readonly(values.copy()))

    @property
    def mass(self) -> float:
        """L * sum |c_k|^2"""
        return float(self.grid.box_length * np.sum(np.abs(self.spectrum) ** 2))

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.physical))) if self.grid.points else 0.0

    def is_zero(self) -> bool:
        return not np.any(self.spectrum)

    def coefficient(self, mode: int) -> complex:
        index = self.grid.index_of(mode)
        if 0 <= index < self.grid.points:
            return complex(self.spectrum[index])
        return 0j

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "spectrum": _complex_pairs(self.spectrum),
        }

    @staticmethod
    def from_dict(data: dict) -> 'SpectralField':
        from services.spectral import synthesize
        grid = SpectralGrid.from_dict(data["grid"])
        return synthesize(_from_pairs(data["spectrum"]), grid)


def cos_squared_window(xi):
    xi = np.asarray(xi, dtype=float)
    return np.where(np.abs(xi) < 1.0, np.cos(0.5 * np.pi * xi) ** 2, 0.0)


@dataclass(frozen=True)
class WindowFamily:
    """Window psi on [-1, 1] and its integer translates psi_n = psi(. - n)"""
    name: str = "cos2"
    profile: Callable = cos_squared_window

    def __call__(self, xi, n: int = 0) -> np.ndarray:
        return self.profile(np.asarray(xi, dtype=float) - n)

    def partition_defect(self, samples: int = 4001, span: float = 8.0) -> float:
        """Largest |sum_n psi(xi - n) - 1| over a dense sample of [-span, span]"""
        xi = np.linspace(-span, span, samples)
        total = sum(self(xi, n) for n in range(-int(span) - 2, int(span) + 3))
        return float(np.max(np.abs(total - 1.0)))

    def to_dict(self) -> dict:
        return {"name": self.name}


@dataclass(frozen=True)
class NormParams:
    s: float = 0.0
    q: float = 2.0
    kappa0: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise NormParameterError(f"Regularity s must be finite, got {self.s}")
        if not (self.q >= 2 and math.isfinite(self.q)):
            raise NormParameterError(f"Summation index q must lie in [2, inf), got {self.q}")
        if not self.kappa0 >= 1:
            raise NormParameterError(f"kappa0 must be at least 1, got {self.kappa0}")

    def to_dict(self) -> dict:
        return {"s": self.s, "q": self.q, "kappa0": self.kappa0}

    @staticmethod
    def from_dict(data: dict) -> 'NormParams':
        return NormParams(
            s=float(data.get("s", 0.0)),
            q=float(data.get("q", 2.0)),
            kappa0=float(data.get("kappa0", 1.0))
        )


@dataclass(frozen=True)
class SpectralParameter:
    """kappa with Re kappa > 0; lattice members kappa_n = kappa0 + i n/2"""
    re: float
    im: float = 0.0
    lattice_index: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.re) and self.re > 0):
            raise OperatorError(f"Re kappa must be positive, got {self.re}")
        if self.lattice_index is not None and self.im != self.lattice_index / 2:
            raise OperatorError(
                f"Im kappa = {self.im} does not match lattice index {self.lattice_index}"
            )

    @staticmethod
    def lattice(kappa0: float, n: int) -> 'SpectralParameter':
        return SpectralParameter(re=float(kappa0), im=n / 2, lattice_index=int(n))

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def label(self) -> str:
        if self.lattice_index is not None:
            return f"k{self.re:g}_n{self.lattice_index}"
        return f"k{self.re:g}{self.im:+g}i"

    def to_dict(self) -> dict:
        return {"re": self.re, "im": self.im, "n": self.lattice_index}

    @staticmethod
    def from_dict(data: dict) -> 'SpectralParameter':
        n = data.get("n")
        if n is not None:
            return SpectralParameter.lattice(float(data["re"]), int(n))
        return SpectralParameter(re=float(data["re"]), im=float(data.get("im", 0.0)))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Truncated Fourier matrix of K on the kappa-centred windows"""
    entries: np.ndarray
    hs_norm: float
    row_modes: np.ndarray
    kappa: SpectralParameter

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def edge_ratio(self) -> float:
        """Largest entry in the outer 10% frequency band over the largest entry"""
        magnitudes = np.abs(self.entries)
        peak = magnitudes.max() if magnitudes.size else 0.0
        if peak == 0:
            return 0.0
        band = max(1, self.dim // 20)
        outer = np.zeros(self.dim, dtype=bool)
        outer[:band] = True
        outer[-band:] = True
        return float(magnitudes[np.ix_(outer, outer)].max() / peak)


@dataclass
class AlphaResult:
    value: float
    terms: List[float]
    ell_max: int
    hs: float
    tail_bound: float
    converged: bool
    method: str = "logdet"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "terms": list(self.terms),
            "ell_max": self.ell_max,
            "hs": self.hs,
            "tail_bound": self.tail_bound,
            "converged": self.converged,
        }


@dataclass
class Kappa0Choice:
    kappa0: float
    max_hs: float
    delta: float
    history: List[tuple] = dataclass_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kappa0": self.kappa0,
            "max_hs": self.max_hs,
            "delta": self.delta,
            "history": [{"kappa0": k, "max_hs": h} for k, h in self.history],
        }


@dataclass
class ProfileRow:
    n: int
    alpha: float
    alpha_series: float
    leading: float
    leading_lattice: float
    residual: float
    hs: float
    tail_bound: float
    converged: bool

    @property
    def agreement(self) -> float:
        return abs(self.alpha - self.alpha_series)


@dataclass
class LatticeProfile:
    kappa0: float
    s: float
    q: float
    delta: float
    rows: List[ProfileRow]
    residual_norm: float
    comparison: float
    leading_norm: float
    z_identity: float

    @property
    def flagged(self) -> List[int]:
        return [row.n for row in self.rows if not row.converged]

    def summary(self) -> dict:
        return {
            "kappa0": self.kappa0,
            "s": self.s,
            "q": self.q,
            "delta": self.delta,
            "residual_norm": self.residual_norm,
            "comparison": self.comparison,
            "residual_constant": self.residual_norm / self.comparison if self.comparison > 0 else 0.0,
            "leading_norm": self.leading_norm,
            "z_identity": self.z_identity,
            "max_hs": max((row.hs for row in self.rows), default=0.0),
            "max_agreement": max((row.agreement for row in self.rows), default=0.0),
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class NonlinearCoefficients:
    """iu_t + beta u_xx + gamma u_xxxx + a1 u|u|^2 + a2 u_xx|u|^2 + a3 conj(u)_xx u^2
    + a4 u_x^2 conj(u) + a5 u|u_x|^2 + a6 u|u|^4 = 0"""
    beta: float = 0.0
    gamma: float = 1.0
    a1: float = 0.0
    a2: float = 8.0
    a3: float = 2.0
    a4: float = 6.0
    a5: float = 4.0
    a6: float = 6.0

    @staticmethod
    def integrable() -> 'NonlinearCoefficients':
        return NonlinearCoefficients()

    @staticmethod
    def hierarchy(gamma: float) -> 'NonlinearCoefficients':
        """NLS plus gamma times the fourth-order flow"""
        return NonlinearCoefficients(
            beta=1.0, gamma=gamma, a1=2.0,
            a2=8.0 * gamma, a3=2.0 * gamma, a4=6.0 * gamma, a5=4.0 * gamma, a6=6.0 * gamma
        )

    @property
    def is_integrable(self) -> bool:
        return self == NonlinearCoefficients()

    def to_dict(self) -> dict:
        return {
            "beta": self.beta, "gamma": self.gamma,
            "a1": self.a1, "a2": self.a2, "a3": self.a3,
            "a4": self.a4, "a5": self.a5, "a6": self.a6,
        }

    @staticmethod
    def from_dict(data: dict) -> 'NonlinearCoefficients':
        if data.get("preset") == "hierarchy":
            return NonlinearCoefficients.hierarchy(float(data.get("gamma", 1.0)))
        values = {k: float(v) for k, v in data.items() if k != "preset"}
        return NonlinearCoefficients(**values)


@dataclass
class SimulationConfig:
    box_length: float
    points: int
    profile: dict
    dt: float
    horizon: float
    record_every: int = 1
    dealias: bool = True
    padding_ratio: float = 2.0
    kappa_list: List[SpectralParameter] = dataclass_field(default_factory=list)
    nonlinear: bool = True
    coefficients: NonlinearCoefficients = dataclass_field(default_factory=NonlinearCoefficients)
    determinant_points: Optional[int] = None
    norm_params: NormParams = dataclass_field(default_factory=lambda: NormParams(s=0.5, q=4.0))

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ValueError(f"Horizon {self.horizon} must be at least dt = {self.dt}")
        if int(self.record_every) < 1:
            raise ValueError(f"record_every must be at least 1, got {self.record_every}")
        if self.padding_ratio < 1:
            raise ValueError(f"Padding ratio must be at least 1, got {self.padding_ratio}")

    @property
    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.box_length, self.points)

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def to_dict(self) -> dict:
        return {
            "box_length": self.box_length,
            "points": self.points,
            "profile": dict(self.profile),
            "dt": self.dt,
            "horizon": self.horizon,
            "record_every": self.record_every,
            "dealias": self.dealias,
            "padding_ratio": self.padding_ratio,
            "kappa_list": [k.to_dict() for k in self.kappa_list],
            "nonlinear": self.nonlinear,
            "coefficients": self.coefficients.to_dict(),
            "determinant_points": self.determinant_points,
            "norm_params": self.norm_params.to_dict(),
        }

    @staticmethod
    def from_dict(data: dict) -> 'SimulationConfig':
        return SimulationConfig(
            box_length=float(data["box_length"]),
            points=int(data["points"]),
            profile=dict(data["profile"]),
            dt=float(data["dt"]),
            horizon=float(data["horizon"]),
            record_every=int(data.get("record_every", 1)),
            dealias=bool(data.get("dealias", True)),
            padding_ratio=float(data.get("padding_ratio", 2.0)),
            kappa_list=[SpectralParameter.from_dict(k) for k in data.get("kappa_list", [])],
            nonlinear=bool(data.get("nonlinear", True)),
            coefficients=NonlinearCoefficients.from_dict(data.get("coefficients", {})),
            determinant_points=data.get("determinant_points"),
            norm_params=NormParams.from_dict(data.get("norm_params", {"s": 0.5, "q": 4.0})),
        )


@dataclass
class Trajectory:
    times: List[float]
    fields: List[SpectralField]
    diagnostics: List[dict]
    config: Optional[SimulationConfig] = None

    def __post_init__(self):
        if len(self.diagnostics) != len(self.fields) or len(self.times) != len(self.fields):
            raise ValueError("times, fields and diagnostics must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("Trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def span(self) -> float:
        return self.times[-1] - self.times[0] if self.times else 0.0

    def append(self, time: float, snapshot: SpectralField, diagnostics: dict):
        if self.times and time <= self.times[-1]:
            raise ValueError(f"Snapshot time {time} is not after {self.times[-1]}")
        self.times.append(time)
        self.fields.append(snapshot)
        self.diagnostics.append(diagnostics)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict() if self.config else None,
            "times": list(self.times),
            "diagnostics": list(self.diagnostics),
            "snapshots": [f.to_dict() for f in self.fields],
        }

    @staticmethod
    def from_dict(data: dict) -> 'Trajectory':
        config = data.get("config")
        return Trajectory(
            times=[float(t) for t in data["times"]],
            fields=[SpectralField.from_dict(f) for f in data["snapshots"]],
            diagnostics=list(data.get("diagnostics") or [{} for _ in data["times"]]),
            config=SimulationConfig.from_dict(config) if config else None,
        )


@dataclass
class KappaSeries:
    kappa: SpectralParameter
    alpha: List[float]
    hs: List[float]
    drift: float
    flagged: bool


@dataclass
class ConservationReport:
    times: List[float]
    series: List[KappaSeries]
    mass: List[float]
    mass_drift: float
    modulation: List[float]
    z: List[float]
    modulation_growth: float
    integrable: bool

    @property
    def flagged(self) -> List[SpectralParameter]:
        return [entry.kappa for entry in self.series if entry.flagged]

    @property
    def max_alpha_drift(self) -> float:
        return max((entry.drift for entry in self.series if not entry.flagged), default=0.0)

    def summary(self) -> dict:
        return {
            "integrable": self.integrable,
            "mass_drift": self.mass_drift,
            "max_alpha_drift": self.max_alpha_drift,
            "modulation_growth": self.modulation_growth,
            "kappa": [
                {
                    "kappa": entry.kappa.to_dict(),
                    "drift": entry.drift,
                    "max_hs": max(entry.hs, default=0.0),
                    "flagged": entry.flagged,
                }
                for entry in self.series
            ],
        }


@dataclass
class SweepReport:
    name: str
    parameter_label: str
    parameters: List[float]
    ratios: List[List[float]]
    slope: float
    intercept: float
    slope_stderr: float
    max_ratio: float
    ensemble_size: int
    seed: int
    target_slope: Optional[float] = None
    extras: Dict[str, list] = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise ValueError(f"Sweep {self.name} produced a non-finite slope")

    @property
    def mean_ratios(self) -> List[float]:
        return [float(np.mean(row)) for row in self.ratios]

    def summary(self) -> dict:
        return {
            "name": self.name,
            "parameter": self.parameter_label,
            "parameters": list(self.parameters),
            "mean_ratios": self.mean_ratios,
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_ci95": [self.slope - 1.96 * self.slope_stderr, self.slope + 1.96 * self.slope_stderr],
            "target_slope": self.target_slope,
            "max_ratio": self.max_ratio,
            "ensemble_size": self.ensemble_size,
            "seed": self.seed,
            "extras": dict(self.extras),
        }
