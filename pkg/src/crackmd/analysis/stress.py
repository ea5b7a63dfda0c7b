"""Per-atom virial stress, von Mises scalar and box-averaged stress."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lattice import AtomSystem
from ..potential.eam import VOIGT, EnergyForceVirial
from ..units import EV_A3_TO_GPA, MVV2E

#: Voigt component names in storage order.
COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")


@dataclass
class AtomStress:
    """Per-atom stress times volume (eV), Voigt order ``xx yy zz xy xz yz``.

    Positive values are tensile. ``atom_volume`` (Å³) is the nominal volume
    used when a per-atom value in GPa is wanted.
    """

    tensor: np.ndarray  # (N, 6)
    atom_volume: float | None = None

    def __len__(self) -> int:
        return len(self.tensor)

    def component(self, name: str) -> np.ndarray:
        return self.tensor[:, COMPONENTS.index(name)]

    def gpa(self) -> np.ndarray:
        if not self.atom_volume:
            raise ValueError("no per-atom volume set")
        return self.tensor / self.atom_volume * EV_A3_TO_GPA


def kinetic_tensor(system: AtomSystem) -> np.ndarray:
    """``-m v_a v_b`` per atom, in eV."""
    v = system.velocities
    m = system.masses * MVV2E
    out = np.empty((system.n, 6))
    for c, (p, q) in enumerate(VOIGT):
        out[:, c] = -m * v[:, p] * v[:, q]
    return out


def per_atom_stress(system: AtomSystem, result: EnergyForceVirial) -> AtomStress:
    """Virial from the last force evaluation plus the kinetic term.

    Velocities enter as they are; the drive-induced flow is not subtracted.
    """
    if result.virial.shape != (system.n, 6):
        raise ValueError("force result does not match the system")
    a = system.lattice_constant
    return AtomStress(result.virial + kinetic_tensor(system), a**3 / 4.0 if a > 0 else None)


def von_mises(stress) -> np.ndarray:
    """Von Mises equivalent stress per row of a ``(N, 6)`` Voigt array."""
    s = stress.tensor if isinstance(stress, AtomStress) else np.asarray(stress, dtype=float)
    s = np.atleast_2d(s)
    sx, sy, sz, txy, txz, tyz = (s[:, k] for k in range(6))
    inner = (sx - sy) ** 2 + (sy - sz) ** 2 + (sz - sx) ** 2 + 6.0 * (txy**2 + tyz**2 + txz**2)
    return np.sqrt(0.5 * inner)


def global_stress(stress: AtomStress, volume: float) -> np.ndarray:
    """Box-averaged stress tensor in GPa: sum of per-atom σ·V over ``volume``."""
    if not volume > 0:
        raise ValueError("volume must be positive")
    return np.sum(stress.tensor, axis=0) / volume * EV_A3_TO_GPA
