#!/usr/bin/env python3
"""
SVG plots for sweep fits and conservation time series

Rendered with the Agg backend; ids are salted and the date metadata is
dropped so repeated runs write identical files.
"""

import logging
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from config import LAB_NAME  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = LAB_NAME

SVG_METADATA = {"Date": None, "Creator": LAB_NAME}


def _save(fig, path: str) -> str:
    try:
        fig.savefig(path, format="svg", bbox_inches="tight", metadata=SVG_METADATA)
        logger.debug(f"Saved plot {path}")
    finally:
        plt.close(fig)
    return path


def plot_sweep(summary: dict, ratios: Sequence[Sequence[float]], path: str) -> str:
    """
    Log-log scatter of sweep ratios with the fitted line

    Args:
        summary: SweepReport.summary()
        ratios: Per-parameter ensembles
        path: Output .svg path
    """
    parameters = np.asarray(summary["parameters"], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    for value, row in zip(parameters, ratios):
        row = np.asarray(row, dtype=float)
        row = row[row > 0]
        ax.scatter(np.full(row.size, value), row, s=8, color="tab:blue", alpha=0.4)
    ax.plot(parameters, summary["mean_ratios"], "o", color="tab:blue", label="ensemble mean")

    span = np.geomspace(parameters.min(), parameters.max(), 50)
    fitted = np.exp(summary["intercept"]) * span ** summary["slope"]
    ax.plot(span, fitted, "-", color="tab:red", label=f"fit, slope {summary['slope']:.3f}")
    target = summary.get("target_slope")
    if target is not None:
        anchor = summary["mean_ratios"][0] * (span / parameters[0]) ** target
        ax.plot(span, anchor, "--", color="k", alpha=0.5, label=f"slope {target:g}")

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(summary["parameter"])
    ax.set_ylabel("ratio")
    ax.set_title(summary["name"])
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_drift(times: Sequence[float], series: List[dict], path: str,
               mass: Optional[Sequence[float]] = None) -> str:
    """Relative alpha drift per kappa (and mass drift) against time"""
    fig, ax = plt.subplots(figsize=(6, 4))
    times = np.asarray(times, dtype=float)
    floor = 1e-18
    for entry in series:
        values = np.asarray(entry["alpha"], dtype=float)
        reference = max(abs(values[0]), 1e-14)
        ax.semilogy(times, np.abs(values - values[0]) / reference + floor, label=entry["label"])
    if mass is not None and mass[0] > 0:
        mass = np.asarray(mass, dtype=float)
        ax.semilogy(times, np.abs(mass - mass[0]) / mass[0] + floor, "k--", label="mass")
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
