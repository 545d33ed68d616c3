import dataclasses
import logging

from locales import _
from services.determinant import determinant_service, prepare_field
from services.dynamics import build_initial_field, simulation_service
from storage.models import SimulationConfig, SpectralParameter, Trajectory

from .conservation import write_conservation
from .context import RunContext
from .errors import EXIT_OK

logger = logging.getLogger(__name__)


def _with_lattice(context: RunContext, sim_config: SimulationConfig) -> SimulationConfig:
    """Add kappa0 + i n/2 for the configured lattice when kappa0 is searched"""
    config = context.config
    lattice = config.lattice()
    if lattice is None or config.kappa0() is not None:
        return sim_config
    field, _localized = build_initial_field(sim_config.profile, sim_config.grid)
    params = sim_config.norm_params
    n_values = range(lattice[0], lattice[1] + 1)
    choice = determinant_service.choose_kappa0(
        prepare_field(field, sim_config.determinant_points), params.s, params.q,
        delta=config.section("determinant").get("delta"), n_range=n_values
    )
    context.say(_("cli.kappa0_chosen", kappa0=f"{choice.kappa0:g}",
                  hs=f"{choice.max_hs:.4f}", delta=f"{choice.delta:g}"))
    kappas = list(sim_config.kappa_list) + [SpectralParameter.lattice(choice.kappa0, n) for n in n_values]
    return dataclasses.replace(sim_config, kappa_list=kappas)


def _trajectory_rows(trajectory: Trajectory):
    for t, snapshot, diagnostics in zip(trajectory.times, trajectory.fields, trajectory.diagnostics):
        yield [
            t, snapshot.mass, snapshot.amplitude,
            diagnostics.get("sobolev"), diagnostics.get("modulation"), diagnostics.get("z")
        ]


def simulate_handler(context: RunContext) -> int:
    """Integrate the configured data and report conservation along the flow"""
    config = context.config
    sim_config = _with_lattice(context, config.simulation_config())
    trajectory = simulation_service.simulate(sim_config)

    context.artifacts.write_csv(
        "trajectory.csv",
        ["t", "mass", "max_abs", "sobolev", "modulation", "z"],
        _trajectory_rows(trajectory)
    )
    if config.flag("output", "trajectory", True):
        context.artifacts.write_json("trajectory.json", {"trajectory": trajectory.to_dict()})

    if config.flag("output", "padding_study", False):
        rows = simulation_service.padding_study(sim_config)
        context.artifacts.write_csv(
            "padding_study.csv", ["ratio", "points", "difference"],
            [[r["ratio"], r["points"], r["difference"]] for r in rows]
        )
        for r in rows:
            context.say(_("cli.padding_row", ratio=f"{r['ratio']:g}", points=r["points"],
                          difference=f"{r['difference']:.3e}"))

    scales = config.numbers("output", "scaling_symmetry")
    if scales:
        rows = [simulation_service.scaling_symmetry_check(sim_config, scale) for scale in scales]
        context.artifacts.write_csv(
            "scaling_symmetry.csv", ["lambda", "mismatch", "relative_mismatch"],
            [[r["lambda"], r["mismatch"], r["relative_mismatch"]] for r in rows]
        )
        for r in rows:
            context.say(_("cli.scaling_row", scale=f"{r['lambda']:g}", mismatch=f"{r['relative_mismatch']:.3e}"))

    report = simulation_service.conservation_report(trajectory)
    write_conservation(context, report)
    return EXIT_OK
