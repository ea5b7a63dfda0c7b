"""Post-processing: stresses, structure labels, crack and curve metrics."""

from .crack import (
    BAND_HALF_WIDTH,
    CrackMetrics,
    SlipFit,
    StressProfile,
    binned_profile,
    crack_length,
    crack_surface,
    monotone,
    slip_plane_fit,
    tip_stress_profile,
)
from .curves import (
    NO_YIELD,
    SMOOTHING_WINDOW,
    StressStrain,
    crack_onset,
    first_local_max,
    global_stress_strain,
    moving_average,
    stress_strain,
)
from .stress import COMPONENTS, AtomStress, global_stress, kinetic_tensor, per_atom_stress, von_mises
from .structure import BCC, CLASS_NAMES, FCC, HCP, OTHER, StructureLabels, classify_structure, cna_cutoff

__all__ = [
    "AtomStress", "BAND_HALF_WIDTH", "BCC", "CLASS_NAMES", "COMPONENTS", "CrackMetrics", "FCC", "HCP",
    "NO_YIELD", "OTHER", "SMOOTHING_WINDOW", "SlipFit", "StressProfile", "StressStrain", "StructureLabels",
    "binned_profile", "classify_structure", "cna_cutoff", "crack_length", "crack_onset", "crack_surface", "first_local_max",
    "global_stress", "global_stress_strain", "kinetic_tensor", "moving_average", "monotone",
    "per_atom_stress", "slip_plane_fit", "stress_strain", "tip_stress_profile", "von_mises",
]
