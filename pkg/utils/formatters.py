#!/usr/bin/env python3
"""
Formatting utilities for artifacts and console summaries

Floats are printed with 17 significant digits so that every CSV value
round-trips exactly; JSON payloads are sanitized so that non-finite
floats become null.
"""

import math
from typing import Any, Iterable, List

import numpy as np

from locales import get_text


def format_float(value: float) -> str:
    """Float with 17 significant digits ('nan', 'inf' and '-inf' kept as text)"""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def format_cell(value: Any) -> str:
    """
    One CSV cell

    Args:
        value: None, bool, int, float, numpy scalar or text

    Returns:
        Text representation; None becomes an empty cell
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    text = str(value)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def format_row(values: Iterable[Any]) -> str:
    return ",".join(format_cell(v) for v in values)


def sanitize(value: Any) -> Any:
    """JSON-safe copy: numpy types unwrapped, non-finite floats as None, tuples as lists"""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [sanitize(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return [sanitize(value.real), sanitize(value.imag)]
    return value


def format_sweep_line(summary: dict) -> str:
    """Console line for a sweep summary"""
    target = summary.get("target_slope")
    return get_text(
        "cli.sweep_result",
        name=summary["name"],
        slope=f"{summary['slope']:.4f}",
        target="-" if target is None else f"{target:g}",
        max_ratio=f"{summary['max_ratio']:.4g}",
    )


def format_drift_lines(summary: dict) -> List[str]:
    """Console lines for a conservation summary, one per kappa"""
    lines = [get_text("cli.mass_drift", drift=f"{summary['mass_drift']:.3e}")]
    for entry in summary["kappa"]:
        kappa = entry["kappa"]
        key = "cli.kappa_flagged" if entry["flagged"] else "cli.kappa_drift"
        lines.append(get_text(
            key,
            kappa=f"{kappa['re']:g}{kappa['im']:+g}i",
            drift=f"{entry['drift']:.3e}",
            hs=f"{entry['max_hs']:.4f}",
        ))
    return lines
