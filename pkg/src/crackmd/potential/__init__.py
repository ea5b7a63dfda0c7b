from .eam import EamPotential, EnergyForceVirial, cohesive_scan, reference_energy
from .library import load_bundled, resolve_potential, synthetic_table, zhou_alloy_table
from .setfl import EamTable, ValidationError, parse_setfl, read_setfl, write_setfl
from .spline import Spline1D

__all__ = [
    "EamPotential",
    "EamTable",
    "EnergyForceVirial",
    "Spline1D",
    "ValidationError",
    "cohesive_scan",
    "load_bundled",
    "parse_setfl",
    "read_setfl",
    "reference_energy",
    "resolve_potential",
    "synthetic_table",
    "write_setfl",
    "zhou_alloy_table",
]
