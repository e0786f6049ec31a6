"""Photon gases in dye microcavities with 3D-printed polymer potentials."""

__version__ = "0.1.0"

from .cavity import CavityParams, derive_cavity, height_to_potential, thermal_frequency
from .eigensolver import ModeSet, assemble_hamiltonian, bound_filter, solve_lowest
from .errors import (
    CalibrationWarning,
    CavityError,
    ConfigError,
    DomainError,
    ExtractionError,
    FormatError,
    GeometryError,
    SolverError,
    ValidationError,
)
from .grid import Grid, HeightMap, PotentialMap

__all__ = [
    "CavityParams",
    "derive_cavity",
    "height_to_potential",
    "thermal_frequency",
    "ModeSet",
    "assemble_hamiltonian",
    "bound_filter",
    "solve_lowest",
    "Grid",
    "HeightMap",
    "PotentialMap",
    "CavityError",
    "ValidationError",
    "ConfigError",
    "GeometryError",
    "DomainError",
    "SolverError",
    "ExtractionError",
    "FormatError",
    "CalibrationWarning",
]
