"""conservation-report subcommand and the shared conservation artifacts"""

import logging
import os

from locales import _
from services.dynamics import simulation_service
from services.errors import CriterionViolation
from storage.data_manager import ArtifactManager
from storage.models import ConservationReport, Trajectory
from utils.formatters import format_drift_lines

from .context import RunContext
from .errors import EXIT_OK

logger = logging.getLogger(__name__)


def write_conservation(context: RunContext, report: ConservationReport, prefix: str = "conservation"):
    """One CSV row per (t, kappa), a per-snapshot norm table and the JSON summary"""
    rows = []
    for entry in report.series:
        reference = max(abs(entry.alpha[0]), 1e-14)
        for t, value, hs in zip(report.times, entry.alpha, entry.hs):
            rows.append([
                t, entry.kappa.re, entry.kappa.im, entry.kappa.lattice_index,
                value, hs, abs(value - entry.alpha[0]) / reference, entry.flagged
            ])
    context.artifacts.write_csv(
        f"{prefix}.csv",
        ["t", "kappa_re", "kappa_im", "n", "alpha", "hs", "drift", "flagged"],
        rows
    )

    mass0 = report.mass[0] if report.mass else 0.0
    context.artifacts.write_csv(
        f"{prefix}_norms.csv",
        ["t", "mass", "mass_drift", "modulation", "z"],
        [
            [t, m, abs(m - mass0) / mass0 if mass0 > 0 else 0.0, mod, z]
            for t, m, mod, z in zip(report.times, report.mass, report.modulation, report.z)
        ]
    )

    summary = report.summary()
    context.write_summary(f"{prefix}.json", {"conservation": summary})
    for line in format_drift_lines(summary):
        context.say(line)
    context.say(_("cli.modulation_growth", growth=f"{report.modulation_growth:.4f}"))

    if context.plot and report.series:
        from utils.plotting import plot_drift

        path = plot_drift(
            report.times,
            [{"label": entry.kappa.label, "alpha": entry.alpha} for entry in report.series],
            context.artifacts.path(f"{prefix}_drift.svg"),
            mass=report.mass
        )
        context.say(_("cli.plot_saved", path=path))

    if report.flagged:
        raise CriterionViolation(
            f"{len(report.flagged)} kappa value(s) violate hs <= 1/2",
            flagged=[kappa.label for kappa in report.flagged]
        )


def _resolve(context: RunContext, path: str) -> str:
    if os.path.isabs(path) or os.path.exists(path) or not context.config.source:
        return path
    return os.path.join(os.path.dirname(os.path.abspath(context.config.source)), path)


def conservation_handler(context: RunContext) -> int:
    """Conservation report for a trajectory saved by simulate"""
    config = context.config
    data = config.require("data")
    if "trajectory" not in data:
        raise config.error("conservation-report needs data.trajectory", "data")
    path = _resolve(context, str(data["trajectory"]))
    try:
        document = ArtifactManager.read_json(path)
        trajectory = Trajectory.from_dict(document["trajectory"])
    except OSError as e:
        raise config.error(f"Cannot read trajectory {path}: {e.strerror}", "trajectory")
    except (KeyError, TypeError, ValueError) as e:
        raise config.error(f"{path} is not a trajectory artifact: {e}", "trajectory")

    kappa_list = config.kappa_list() if "determinant" in config.sections else None
    if kappa_list is not None and not kappa_list:
        kappa_list = None
    report = simulation_service.conservation_report(
        trajectory, kappa_list=kappa_list, determinant_points=config.determinant_points()
    )
    write_conservation(context, report)
    return EXIT_OK
