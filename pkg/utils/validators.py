#!/usr/bin/env python3
"""
Experiment config loading and strict validation

A config is a JSON document with the sections grid, data, physics,
determinant, norms, sweep, output and seed. Unknown keys are rejected.
Errors carry the line and column of the offending key when it can be
located in the source text.
"""

import json
import logging
import math
import re
from dataclasses import dataclass, field as dataclass_field
from typing import Any, Dict, List, Optional

from config import DEFAULT_PADDING_RATIO, DEFAULT_ELL_MAX
from services.errors import ConfigError
from storage.models import (
    NonlinearCoefficients, NormParams, SimulationConfig, SpectralParameter
)

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64

PROFILE_NAMES = {"zero", "gaussian", "sech", "plane_wave", "modes"}

SCHEMA: Dict[str, Any] = {
    "grid": {"box_length", "box_periods", "points"},
    "data": {"name", "amplitude", "width", "center", "carrier", "k", "coefficients", "trajectory"},
    "physics": {"dt", "horizon", "record_every", "nonlinear", "dealias", "padding_ratio", "coefficients"},
    "determinant": {"kappa", "kappa0", "lattice", "points", "ell_max", "delta"},
    "norms": {"s", "q", "kappa0", "scales"},
    "sweep": {
        "p", "q", "kind", "frequencies", "horizon", "ensemble", "resolution", "mode",
        "low", "high", "separations", "lengths", "offset", "offsets", "length", "epsilon"
    },
    "output": {"plot", "trajectory", "padding_study", "scaling_symmetry"},
    "seed": None,
}

COEFFICIENT_KEYS = {"preset", "beta", "gamma", "a1", "a2", "a3", "a4", "a5", "a6"}


def _locate(text: str, key: str):
    """(line, column) of the first '"key":' in the source, or (None, None)"""
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if not match:
        return None, None
    line = text.count("\n", 0, match.start()) + 1
    column = match.start() - (text.rfind("\n", 0, match.start()) + 1) + 1
    return line, column


@dataclass
class ExperimentConfig:
    """Validated config document plus the resolved seed"""
    document: dict
    text: str = ""
    seed: int = 0
    source: Optional[str] = None
    sections: Dict[str, dict] = dataclass_field(default_factory=dict)

    def error(self, message: str, key: Optional[str] = None) -> ConfigError:
        line, column = _locate(self.text, key) if key else (None, None)
        return ConfigError(message, line, column)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def require(self, name: str) -> dict:
        if name not in self.sections:
            raise ConfigError(f"Missing required section '{name}'")
        return self.sections[name]

    # ---------- typed accessors ----------

    def number(self, section: str, key: str, default: Any = None, positive: bool = False,
               minimum: Optional[float] = None, integer: bool = False) -> Any:
        values = self.section(section)
        if key not in values:
            if default is None and (positive or minimum is not None):
                raise self.error(f"{section}.{key} is required", section)
            return default
        value = values[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"{section}.{key} must be a number, got {value!r}", key)
        if integer and (not float(value).is_integer()):
            raise self.error(f"{section}.{key} must be an integer, got {value!r}", key)
        if not math.isfinite(value):
            raise self.error(f"{section}.{key} must be finite", key)
        if positive and not value > 0:
            raise self.error(f"{section}.{key} must be positive, got {value!r}", key)
        if minimum is not None and value < minimum:
            raise self.error(f"{section}.{key} must be at least {minimum:g}, got {value!r}", key)
        return int(value) if integer else float(value)

    def numbers(self, section: str, key: str, default: Optional[list] = None) -> Optional[List[float]]:
        values = self.section(section)
        if key not in values:
            return default
        value = values[key]
        if not isinstance(value, list) or not value or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise self.error(f"{section}.{key} must be a non-empty list of numbers", key)
        return [float(v) for v in value]

    def exponent(self, section: str, key: str, default: Optional[float] = None) -> float:
        """Lebesgue exponent: a number >= 1 or the string "inf" """
        value = self.section(section).get(key, default)
        if value is None:
            raise self.error(f"{section}.{key} is required", section)
        if value == "inf":
            return math.inf
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value >= 1:
            raise self.error(f"{section}.{key} must be a number >= 1 or \"inf\", got {value!r}", key)
        return float(value)

    def flag(self, section: str, key: str, default: bool) -> bool:
        value = self.section(section).get(key, default)
        if not isinstance(value, bool):
            raise self.error(f"{section}.{key} must be true or false, got {value!r}", key)
        return value

    def text_value(self, section: str, key: str, default: Optional[str], choices=None) -> Optional[str]:
        value = self.section(section).get(key, default)
        if value is not None and not isinstance(value, str):
            raise self.error(f"{section}.{key} must be a string, got {value!r}", key)
        if choices is not None and value not in choices:
            raise self.error(f"{section}.{key} must be one of {sorted(choices)}, got {value!r}", key)
        return value

    # ---------- builders ----------

    def box_length(self) -> float:
        grid = self.require("grid")
        if "box_length" in grid and "box_periods" in grid:
            raise self.error("grid takes box_length or box_periods, not both", "box_periods")
        if "box_periods" in grid:
            return 2.0 * math.pi * self.number("grid", "box_periods", positive=True, integer=True)
        return self.number("grid", "box_length", positive=True)

    def points(self) -> int:
        points = self.number("grid", "points", positive=True, integer=True)
        if points % 2 or points < 8:
            raise self.error(f"grid.points must be even and at least 8, got {points}", "points")
        return points

    def profile(self) -> dict:
        data = self.require("data")
        name = self.text_value("data", "name", None, PROFILE_NAMES)
        profile = {"name": name}
        for key in ("amplitude", "width", "center", "carrier", "k"):
            if key in data:
                profile[key] = self.number("data", key, positive=key == "width")
        if name == "modes":
            entries = data.get("coefficients")
            if not isinstance(entries, list) or any(
                    not isinstance(e, list) or len(e) != 3 or isinstance(e[0], bool) or not isinstance(e[0], int)
                    for e in entries):
                raise self.error("data.coefficients must be a list of [mode, re, im] triples", "coefficients")
            profile["coefficients"] = [[int(m), float(re), float(im)] for m, re, im in entries]
        return profile

    def coefficients(self) -> NonlinearCoefficients:
        values = self.section("physics").get("coefficients", {})
        if not isinstance(values, dict):
            raise self.error("physics.coefficients must be an object", "coefficients")
        unknown = set(values) - COEFFICIENT_KEYS
        if unknown:
            key = sorted(unknown)[0]
            raise self.error(f"Unknown key physics.coefficients.{key}", key)
        preset = values.get("preset")
        if preset not in (None, "integrable", "hierarchy"):
            raise self.error(f"Unknown coefficient preset {preset!r}", "preset")
        if preset == "integrable":
            return NonlinearCoefficients.integrable()
        try:
            return NonlinearCoefficients.from_dict(values)
        except (TypeError, ValueError) as e:
            raise self.error(f"Invalid physics.coefficients: {e}", "coefficients")

    def kappa_list(self) -> List[SpectralParameter]:
        entries = self.section("determinant").get("kappa", [])
        if not isinstance(entries, list):
            raise self.error("determinant.kappa must be a list", "kappa")
        kappas = []
        for entry in entries:
            try:
                if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                    kappas.append(SpectralParameter(re=float(entry)))
                elif isinstance(entry, dict) and set(entry) <= {"re", "im", "n"}:
                    kappas.append(SpectralParameter.from_dict(entry))
                else:
                    raise ValueError(f"expected a number or {{re, im | n}}, got {entry!r}")
            except (KeyError, TypeError, ValueError) as e:
                raise self.error(f"Invalid determinant.kappa entry: {e}", "kappa")
        lattice = self.lattice()
        kappa0 = self.section("determinant").get("kappa0")
        if lattice is not None and isinstance(kappa0, (int, float)) and not isinstance(kappa0, bool):
            kappas.extend(SpectralParameter.lattice(float(kappa0), n) for n in range(lattice[0], lattice[1] + 1))
        return kappas

    def lattice(self) -> Optional[tuple]:
        value = self.section("determinant").get("lattice")
        if value is None:
            return None
        if (not isinstance(value, list) or len(value) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in value) or value[0] > value[1]):
            raise self.error("determinant.lattice must be [n_min, n_max] integers", "lattice")
        return value[0], value[1]

    def kappa0(self) -> Optional[float]:
        """Fixed kappa0, or None for the doubling search"""
        value = self.section("determinant").get("kappa0", "auto")
        if value == "auto":
            return None
        return self.number("determinant", "kappa0", minimum=1.0)

    def determinant_points(self) -> Optional[int]:
        if "points" not in self.section("determinant"):
            return None
        points = self.number("determinant", "points", positive=True, integer=True)
        if points % 2:
            raise self.error(f"determinant.points must be even, got {points}", "points")
        return points

    def ell_max(self) -> int:
        return self.number("determinant", "ell_max", DEFAULT_ELL_MAX, minimum=1, integer=True)

    def norm_params(self, kappa0: Optional[float] = None) -> NormParams:
        s = self.number("norms", "s", 0.5)
        q = self.number("norms", "q", 4.0, minimum=2.0)
        if kappa0 is None:
            kappa0 = self.number("norms", "kappa0", 1.0, minimum=1.0)
        return NormParams(s=s, q=q, kappa0=kappa0)

    def simulation_config(self) -> SimulationConfig:
        """SimulationConfig from the grid, data, physics and determinant sections"""
        self.require("physics")
        dt = self.number("physics", "dt", positive=True)
        horizon = self.number("physics", "horizon", positive=True)
        if horizon < dt:
            raise self.error(f"physics.horizon {horizon:g} is shorter than dt {dt:g}", "horizon")
        ratio = self.number("physics", "padding_ratio", DEFAULT_PADDING_RATIO, minimum=1.0)
        return SimulationConfig(
            box_length=self.box_length(),
            points=self.points(),
            profile=self.profile(),
            dt=dt,
            horizon=horizon,
            record_every=self.number("physics", "record_every", 1, minimum=1, integer=True),
            dealias=self.flag("physics", "dealias", True),
            padding_ratio=ratio,
            kappa_list=self.kappa_list(),
            nonlinear=self.flag("physics", "nonlinear", True),
            coefficients=self.coefficients(),
            determinant_points=self.determinant_points(),
            norm_params=self.norm_params(),
        )


def validate_document(document: Any, text: str = "") -> Dict[str, dict]:
    """Check sections and keys against SCHEMA; returns the section dicts"""
    if not isinstance(document, dict):
        raise ConfigError("Config root must be a JSON object", 1, 1)
    sections = {}
    for name, value in document.items():
        if name not in SCHEMA:
            line, column = _locate(text, name)
            raise ConfigError(f"Unknown section '{name}'", line, column)
        allowed = SCHEMA[name]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            line, column = _locate(text, name)
            raise ConfigError(f"Section '{name}' must be an object", line, column)
        for key in value:
            if key not in allowed:
                line, column = _locate(text, key)
                raise ConfigError(f"Unknown key '{name}.{key}'", line, column)
        sections[name] = value
    return sections


def validate_seed(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < SEED_LIMIT:
        raise ConfigError(f"Seed must be an integer in [0, 2^64), got {value!r}")
    return value


def parse_config(text: str, seed: Optional[int] = None, source: Optional[str] = None) -> ExperimentConfig:
    """
    Parse and validate a config document

    Args:
        text: JSON source
        seed: Seed override (the --seed flag); falls back to the document, then 0
        source: File name for messages

    Returns:
        ExperimentConfig

    Raises:
        ConfigError: malformed JSON, unknown keys or invalid values
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON: {e.msg}", e.lineno, e.colno)
    sections = validate_document(document, text)
    if seed is None:
        raw = document.get("seed", 0)
        try:
            seed = validate_seed(raw)
        except ConfigError as e:
            line, column = _locate(text, "seed")
            raise ConfigError(str(e), line, column)
    else:
        seed = validate_seed(seed)
    logger.debug(f"Parsed config {source or '<text>'}: sections {sorted(sections)}")
    return ExperimentConfig(document=document, text=text, seed=seed, source=source, sections=sections)


def load_config(path: str, seed: Optional[int] = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e.strerror}")
    return parse_config(text, seed, source=path)
