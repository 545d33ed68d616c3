import logging

from config import DEFAULT_EPSILON, MIN_ENSEMBLE
from locales import _
from services.estimates import ADMISSIBLE_WEIGHTS, sweep_service
from storage.models import SweepReport
from utils.formatters import format_sweep_line

from .context import RunContext
from .errors import EXIT_OK

logger = logging.getLogger(__name__)


def _common(context: RunContext) -> dict:
    config = context.config
    return {
        "ensemble": config.number("sweep", "ensemble", MIN_ENSEMBLE, integer=True),
        "seed": config.seed,
        "resolution": config.number("sweep", "resolution", 16, minimum=4, integer=True),
    }


def write_sweep(context: RunContext, report: SweepReport):
    """Rows per parameter x sample, the JSON summary and the optional log-log plot"""
    columns = [report.parameter_label, "sample", "ratio"]
    paired = [
        key for key in ("conjugate_ratios", "response")
        if key in report.extras and len(report.extras[key]) == len(report.ratios)
    ]
    columns += [key.replace("_ratios", "_ratio") for key in paired]
    rows = []
    for i, (parameter, row) in enumerate(zip(report.parameters, report.ratios)):
        for j, ratio in enumerate(row):
            rows.append([parameter, j, ratio] + [report.extras[key][i][j] for key in paired])
    context.artifacts.write_csv(f"{report.name}.csv", columns, rows)

    summary = report.summary()
    context.write_summary(f"{report.name}.json", {"sweep": summary})
    context.say(format_sweep_line(summary))

    if context.plot:
        from utils.plotting import plot_sweep

        path = plot_sweep(summary, report.ratios, context.artifacts.path(f"{report.name}.svg"))
        context.say(_("cli.plot_saved", path=path))


def strichartz_handler(context: RunContext) -> int:
    config = context.config
    report = sweep_service.strichartz_sweep(
        p=config.exponent("sweep", "p"),
        q=config.exponent("sweep", "q"),
        kind=config.text_value("sweep", "kind", "biharmonic", set(ADMISSIBLE_WEIGHTS)),
        frequencies=config.numbers("sweep", "frequencies", [4, 8, 16, 32]),
        horizon=config.number("sweep", "horizon", 1.0, positive=True),
        **_common(context)
    )
    write_sweep(context, report)
    return EXIT_OK


def bilinear_handler(context: RunContext) -> int:
    config = context.config
    report = sweep_service.bilinear_sweep(
        mode=config.text_value("sweep", "mode", "separated", {"separated", "comparable"}),
        frequencies=config.numbers("sweep", "frequencies", [8, 16, 32, 64]),
        low=config.number("sweep", "low", 64.0, positive=True),
        high=config.number("sweep", "high", 64.0, positive=True),
        separations=config.numbers("sweep", "separations", [1, 2, 4, 8]),
        **_common(context)
    )
    write_sweep(context, report)
    return EXIT_OK


def l4_handler(context: RunContext) -> int:
    config = context.config
    report = sweep_service.l4_interval_sweep(
        mode=config.text_value("sweep", "mode", "length", {"length", "offset"}),
        lengths=config.numbers("sweep", "lengths", [4, 16, 64]),
        offset=config.number("sweep", "offset", 32.0, minimum=0.0),
        offsets=config.numbers("sweep", "offsets", [8, 16, 32, 64]),
        length=config.number("sweep", "length", 4.0, minimum=1.0),
        q=config.exponent("sweep", "q", 4.0),
        horizon=config.number("sweep", "horizon", 0.5, positive=True),
        epsilon=config.number("sweep", "epsilon", DEFAULT_EPSILON, positive=True),
        **_common(context)
    )
    write_sweep(context, report)
    return EXIT_OK
