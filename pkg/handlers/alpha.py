import logging

from locales import _
from services.determinant import determinant_service, lattice_range, prepare_field
from services.dynamics import build_initial_field
from services.errors import CriterionViolation
from services.spectral import make_grid

from .context import RunContext
from .errors import EXIT_OK

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = [
    "n", "kappa_re", "kappa_im", "alpha_logdet", "alpha_series", "agreement", "tail_bound",
    "leading", "leading_lattice", "residual", "hs", "converged"
]


def alpha_handler(context: RunContext) -> int:
    """alpha(kappa0 + i n/2) over the lattice with both evaluation paths"""
    config = context.config
    grid = make_grid(config.box_length(), config.points())
    field, _localized = build_initial_field(config.profile(), grid)
    field = prepare_field(field, config.determinant_points())
    params = config.norm_params()

    lattice = config.lattice()
    n_values = list(range(lattice[0], lattice[1] + 1)) if lattice else list(lattice_range(field))
    delta = config.section("determinant").get("delta")

    kappa0 = config.kappa0()
    choice = None
    if kappa0 is None:
        choice = determinant_service.choose_kappa0(field, params.s, params.q, delta=delta, n_range=n_values)
        kappa0 = choice.kappa0
        context.say(_("cli.kappa0_chosen", kappa0=f"{kappa0:g}",
                      hs=f"{choice.max_hs:.4f}", delta=f"{choice.delta:g}"))

    profile = determinant_service.alpha_lattice_profile(
        field, kappa0, params.s, params.q, n_range=n_values, delta=delta, ell_max=config.ell_max()
    )
    context.artifacts.write_csv(
        "alpha_profile.csv",
        PROFILE_COLUMNS,
        [
            [row.n, kappa0, row.n / 2, row.alpha, row.alpha_series, row.agreement, row.tail_bound,
             row.leading, row.leading_lattice, row.residual, row.hs, row.converged]
            for row in profile.rows
        ]
    )
    context.write_summary("alpha_summary.json", {
        "kappa0_choice": choice.to_dict() if choice else None,
        "profile": profile.summary(),
    })
    context.say(_("cli.alpha_profile", count=len(profile.rows),
                  residual=f"{profile.residual_norm:.4e}", comparison=f"{profile.comparison:.4e}"))

    if profile.flagged:
        raise CriterionViolation(
            f"Series criterion fails at {len(profile.flagged)} lattice point(s)",
            flagged=[f"n={n}" for n in profile.flagged]
        )
    return EXIT_OK
