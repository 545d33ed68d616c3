"""
Numerical services

Singletons live in their modules and are imported from there:
services.dynamics.simulation_service, services.determinant.determinant_service,
services.estimates.sweep_service and services.scheduler.scheduler_service.
Only the exception hierarchy is re-exported here, since storage.models
depends on it.
"""

from .errors import (
    LabError,
    GridError,
    FieldError,
    NormParameterError,
    LatticeAlignmentError,
    OperatorError,
    SingularOperatorError,
    KappaSearchError,
    CriterionViolation,
    BlowUpError,
    LocalizationError,
    InadmissiblePairError,
    HypothesisViolation,
    ConfigError
)

__all__ = [
    'LabError',
    'GridError',
    'FieldError',
    'NormParameterError',
    'LatticeAlignmentError',
    'OperatorError',
    'SingularOperatorError',
    'KappaSearchError',
    'CriterionViolation',
    'BlowUpError',
    'LocalizationError',
    'InadmissiblePairError',
    'HypothesisViolation',
    'ConfigError'
]
