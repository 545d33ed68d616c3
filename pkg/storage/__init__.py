from .data_manager import ArtifactManager, config_hash
from .models import (
    SpectralGrid,
    SpectralField,
    WindowFamily,
    NormParams,
    SpectralParameter,
    SimulationConfig,
    Trajectory,
    SweepReport
)

__all__ = [
    'ArtifactManager',
    'config_hash',
    'SpectralGrid',
    'SpectralField',
    'WindowFamily',
    'NormParams',
    'SpectralParameter',
    'SimulationConfig',
    'Trajectory',
    'SweepReport'
]
