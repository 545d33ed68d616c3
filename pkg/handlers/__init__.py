from .simulate import simulate_handler
from .alpha import alpha_handler
from .norms import norms_handler
from .sweeps import strichartz_handler, bilinear_handler, l4_handler
from .conservation import conservation_handler
from .errors import error_handler
from .context import RunContext

__all__ = [
    'simulate_handler',
    'alpha_handler',
    'norms_handler',
    'strichartz_handler',
    'bilinear_handler',
    'l4_handler',
    'conservation_handler',
    'error_handler',
    'RunContext',
    'COMMANDS',
    'register_all_handlers'
]

COMMANDS = {
    "simulate": (simulate_handler, "Integrate the flow and report conservation"),
    "alpha": (alpha_handler, "Perturbation determinant over the kappa lattice"),
    "norms": (norms_handler, "Norms of the configured field and scaling tables"),
    "sweep-strichartz": (strichartz_handler, "Strichartz ratio sweep over dyadic bands"),
    "sweep-bilinear": (bilinear_handler, "Bilinear transversality sweep"),
    "sweep-l4": (l4_handler, "L4 interval estimate sweep"),
    "conservation-report": (conservation_handler, "Conservation report for a saved trajectory"),
}


def register_all_handlers(subparsers, add_common):
    """Register one subparser per command; add_common adds the shared flags"""
    for name, (handler, help_text) in COMMANDS.items():
        parser = subparsers.add_parser(name, help=help_text)
        add_common(parser)
        parser.set_defaults(handler=handler, command=name)
