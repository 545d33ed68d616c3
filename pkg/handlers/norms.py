import logging

from locales import _
from services.dynamics import build_initial_field
from services.norms import (
    box_norms, critical_scaling_check, equivalence_ratio, lebesgue_norm, modulation_norm,
    scaling_check, sobolev_norm, z_norm, z_norm_tail_bound
)
from services.spectral import band_levels, band_project, make_grid

from .context import RunContext
from .errors import EXIT_OK

logger = logging.getLogger(__name__)

DEFAULT_SCALES = [0.125, 0.25, 0.5, 2.0, 4.0, 8.0]


def norms_handler(context: RunContext) -> int:
    """All norms of the configured field plus the scaling tables"""
    config = context.config
    grid = make_grid(config.box_length(), config.points())
    field, _localized = build_initial_field(config.profile(), grid)
    params = config.norm_params()

    values = {
        "l2": lebesgue_norm(field, 2.0),
        "l4": lebesgue_norm(field, 4.0),
        "linf": lebesgue_norm(field, float("inf")),
        "sobolev": sobolev_norm(field, params.s),
        "homogeneous_sobolev": sobolev_norm(field, params.s, homogeneous=True),
        "modulation": modulation_norm(field, params),
        "z": None,
        "z_tail_bound": None,
        "equivalence_ratio": None,
    }
    if grid.periods is not None:
        values["z"] = z_norm(field, params)
        values["z_tail_bound"] = max(z_norm_tail_bound(field, params), default=0.0)
        values["equivalence_ratio"] = equivalence_ratio(field, params)
    else:
        logger.warning(f"Box length {grid.box_length:g} is not a multiple of 2*pi: Z norm skipped")

    boxes, norms = box_norms(field)
    context.artifacts.write_csv("box_norms.csv", ["n", "norm"], zip(boxes.tolist(), norms.tolist()))
    context.artifacts.write_csv(
        "band_norms.csv", ["level", "norm"],
        [[level, band_project(field, level).mass ** 0.5] for level in band_levels(grid)]
    )

    scales = config.numbers("norms", "scales", DEFAULT_SCALES)
    scaling = [scaling_check(field, scale, params) for scale in scales]
    critical = [critical_scaling_check(field, scale) for scale in scales]
    context.artifacts.write_csv(
        "scaling.csv",
        ["lambda", "regime", "lhs", "rhs", "ratio", "critical_ratio"],
        [[r.scale, r.regime, r.lhs, r.rhs, r.ratio, c] for r, c in zip(scaling, critical)]
    )

    context.write_summary("norms.json", {
        "params": params.to_dict(),
        "norms": values,
        "scaling": [r.to_dict() for r in scaling],
        "max_scaling_ratio": max((r.ratio for r in scaling), default=0.0),
        "critical_scaling": dict(zip([f"{s:g}" for s in scales], critical)),
    })
    for name, value in values.items():
        if value is not None:
            context.say(_("cli.norm_value", name=name, value=f"{value:.6g}"))
    return EXIT_OK
