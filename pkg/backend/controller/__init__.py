"""
Controller Package
Nelder-Mead exposure parameter search
"""
from backend.controller.models import (
    ExposureParams,
    ParamBounds,
    SweepProfile,
    PROFILES,
    get_profile,
    NMCoefficients,
    StoppingRule,
    Simplex,
    Vertex,
    ControlTrace,
)
from backend.controller.nelder_mead import initial_step, initial_simplex, should_stop, run

__all__ = [
    'ExposureParams',
    'ParamBounds',
    'SweepProfile',
    'PROFILES',
    'get_profile',
    'NMCoefficients',
    'StoppingRule',
    'Simplex',
    'Vertex',
    'ControlTrace',
    'initial_step',
    'initial_simplex',
    'should_stop',
    'run'
]
