from .formatters import *

__all__ = [
    'format_float',
    'format_cell',
    'format_row',
    'sanitize',
    'format_sweep_line',
    'format_drift_lines'
]
