"""
Domain exceptions

Validation-type errors also derive from ValueError so that callers
outside the lab can catch them generically.
"""

from typing import Optional


class LabError(Exception):
    """Base class for all lab errors"""


class GridError(LabError, ValueError):
    """Invalid grid parameters"""


class FieldError(LabError, ValueError):
    """Sample/spectrum mismatch or non-finite multiplier values"""


class NormParameterError(LabError, ValueError):
    """Invalid exponent or regularity parameters"""


class LatticeAlignmentError(LabError, ValueError):
    """A frequency shift does not land on the lattice"""


class OperatorError(LabError, ValueError):
    """Invalid spectral parameter or matrix request"""


class SingularOperatorError(LabError):
    """I - K is singular to working precision"""


class KappaSearchError(LabError):
    """Doubling search for kappa0 exceeded its cap"""


class CriterionViolation(LabError):
    """Hilbert-Schmidt criterion failed for some spectral parameters"""

    def __init__(self, message: str, flagged: Optional[list] = None):
        super().__init__(message)
        self.flagged = flagged or []


class BlowUpError(LabError):
    """Solution left the admissible amplitude range"""

    def __init__(self, message: str, time: float, amplitude: float):
        super().__init__(message)
        self.time = time
        self.amplitude = amplitude


class LocalizationError(LabError, ValueError):
    """Initial data is not localized inside the central half of the box"""


class InadmissiblePairError(LabError, ValueError):
    """Exponent pair violates the admissibility relation"""


class HypothesisViolation(LabError, ValueError):
    """Frequency supports violate the estimate's hypotheses"""


class ConfigError(LabError, ValueError):
    """Malformed experiment configuration"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
