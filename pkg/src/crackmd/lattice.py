"""FCC crystal construction, defect carving and boundary-layer tagging."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .geometry import OPEN, PERIODIC, Box, CylinderY, Region, SimBox
from .units import KB, MVV2E

MAX_ATOMS = 4_000_000

INTERIOR, TOP, BOTTOM = 0, 1, 2
GROUP_NAMES = {INTERIOR: "interior", TOP: "top", BOTTOM: "bottom"}

FCC_BASIS = np.array(
    [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]
)


@dataclass(frozen=True)
class Species:
    symbol: str
    mass: float  # g/mol
    lattice_constant: float  # Å

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigurationError(f"{self.symbol}: mass must be positive")
        if not self.lattice_constant > 0:
            raise ConfigurationError(f"{self.symbol}: lattice constant must be positive")


SPECIES = {
    "Ni": Species("Ni", 58.6934, 3.52),
    "Cu": Species("Cu", 63.546, 3.61),
    "Al": Species("Al", 26.981539, 4.05),
}


def get_species(symbol: str) -> Species:
    try:
        return SPECIES[symbol]
    except KeyError:
        raise ConfigurationError(
            f"unknown species {symbol!r}; registered: {', '.join(sorted(SPECIES))}"
        ) from None


@dataclass
class NotchInfo:
    """Build-time record of the edge notch, used by crack-length tracking."""

    root_x: float
    length: float
    width: float
    plane_z: float
    face_indices: np.ndarray


@dataclass
class AtomSystem:
    """Structure-of-arrays atomic state.

    ``velocities`` of immobile atoms hold their prescribed drive velocity.
    """

    positions: np.ndarray
    species: np.ndarray
    species_list: tuple[Species, ...]
    box: SimBox
    velocities: np.ndarray = None
    forces: np.ndarray = None
    mobile: np.ndarray = None
    group: np.ndarray = None
    lattice_constant: float = 0.0
    notch: NotchInfo | None = None

    def __post_init__(self):
        n = len(self.positions)
        self.positions = np.ascontiguousarray(self.positions, dtype=float).reshape(n, 3)
        self.species = np.ascontiguousarray(self.species, dtype=np.int64)
        if self.velocities is None:
            self.velocities = np.zeros((n, 3))
        if self.forces is None:
            self.forces = np.zeros((n, 3))
        if self.mobile is None:
            self.mobile = np.ones(n, dtype=bool)
        if self.group is None:
            self.group = np.full(n, INTERIOR, dtype=np.int8)
        for name in ("species", "velocities", "forces", "mobile", "group"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(f"array {name!r} has length {len(getattr(self, name))}, expected {n}")
        if n and (self.species.min() < 0 or self.species.max() >= len(self.species_list)):
            raise ConfigurationError("species index out of range")

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def masses(self) -> np.ndarray:
        table = np.array([s.mass for s in self.species_list])
        return table[self.species]

    def copy(self) -> "AtomSystem":
        notch = None
        if self.notch is not None:
            notch = dataclasses.replace(self.notch, face_indices=self.notch.face_indices.copy())
        return dataclasses.replace(
            self,
            positions=self.positions.copy(),
            species=self.species.copy(),
            velocities=self.velocities.copy(),
            forces=self.forces.copy(),
            mobile=self.mobile.copy(),
            group=self.group.copy(),
            notch=notch,
        )

    def subset(self, keep: np.ndarray) -> "AtomSystem":
        """New system holding atoms where ``keep`` is true, order preserved."""
        keep = np.asarray(keep, dtype=bool)
        notch = None
        if self.notch is not None:
            new_index = np.cumsum(keep) - 1
            faces = self.notch.face_indices
            faces = new_index[faces[keep[faces]]]
            notch = dataclasses.replace(self.notch, face_indices=faces)
        return dataclasses.replace(
            self,
            positions=self.positions[keep],
            species=self.species[keep],
            velocities=self.velocities[keep],
            forces=self.forces[keep],
            mobile=self.mobile[keep],
            group=self.group[keep],
            notch=notch,
        )

    def kinetic_energy(self, mask: np.ndarray | None = None) -> float:
        v2 = np.einsum("ij,ij->i", self.velocities, self.velocities)
        ke = 0.5 * MVV2E * self.masses * v2
        if mask is not None:
            ke = ke[mask]
        return float(ke.sum())

    def temperature(self) -> float:
        """Instantaneous temperature of the mobile atoms, 2·KE/(3·N·k_B)."""
        n_mobile = int(self.mobile.sum())
        if n_mobile == 0:
            return 0.0
        return 2.0 * self.kinetic_energy(self.mobile) / (3.0 * n_mobile * KB)

    def min_distance(self) -> float:
        if self.n < 2:
            return np.inf
        tree = cKDTree(self.positions)
        d, _ = tree.query(self.positions, k=2)
        return float(d[:, 1].min())


def build_fcc(
    extent: tuple[int, int, int],
    species: Species,
    lattice_constant: float | None = None,
    boundary: tuple[str, str, str] = (OPEN, OPEN, OPEN),
) -> AtomSystem:
    """Cubic-oriented FCC block of ``extent`` unit cells, origin at (0, 0, 0)."""
    nx, ny, nz = (int(v) for v in extent)
    if min(nx, ny, nz) < 1:
        raise ConfigurationError(f"cell counts must be >= 1, got {extent}")
    n_atoms = 4 * nx * ny * nz
    if n_atoms > MAX_ATOMS:
        raise ConfigurationError(f"{n_atoms} atoms exceeds the budget of {MAX_ATOMS}")
    a = species.lattice_constant if lattice_constant is None else float(lattice_constant)
    if not a > 0:
        raise ConfigurationError("lattice constant must be positive")

    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    cells = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(float)
    pos = (cells[:, None, :] + FCC_BASIS[None, :, :]).reshape(-1, 3) * a
    # z-major ordering: stable, layer-by-layer ids in dumps
    order = np.lexsort((pos[:, 0], pos[:, 1], pos[:, 2]))
    pos = pos[order]
    box = SimBox((0.0, 0.0, 0.0), (nx * a, ny * a, nz * a), boundary)
    return AtomSystem(
        positions=pos,
        species=np.zeros(len(pos), dtype=np.int64),
        species_list=(species,),
        box=box,
        lattice_constant=a,
    )


def carve(system: AtomSystem, region: Region) -> AtomSystem:
    inside = region.contains_many(system.positions) if system.n else np.zeros(0, bool)
    if inside.all():
        raise ConfigurationError("carving removes every atom")
    return system.subset(~inside)


def substitute(system: AtomSystem, region: Region, species: Species | str) -> AtomSystem:
    """Swap the species of atoms inside ``region``; positions untouched."""
    if isinstance(species, str):
        species = get_species(species)
    elif species.symbol not in SPECIES:
        raise ConfigurationError(f"species {species.symbol!r} is not registered")
    out = system.copy()
    inside = region.contains_many(out.positions)
    if not inside.any():
        return out
    if species in out.species_list:
        idx = out.species_list.index(species)
    else:
        out.species_list = out.species_list + (species,)
        idx = len(out.species_list) - 1
    out.species[inside] = idx
    return out


def tag_boundaries(system: AtomSystem, layer_thickness: float) -> AtomSystem:
    """Freeze atoms closer than ``layer_thickness`` to the top/bottom atom planes."""
    extent = system.box.lengths[2]
    if not 0 < layer_thickness < extent / 2:
        raise ConfigurationError(
            f"layer thickness {layer_thickness} must lie in (0, {extent / 2})"
        )
    out = system.copy()
    z = out.positions[:, 2]
    top = z > z.max() - layer_thickness
    bottom = z < z.min() + layer_thickness
    out.group[:] = INTERIOR
    out.group[top] = TOP
    out.group[bottom] = BOTTOM
    out.mobile = ~(top | bottom)
    return out


# ---------------------------------------------------------------------------
# Full edge-crack model


@dataclass(frozen=True)
class DefectSpec:
    """Cylindrical void or substitutional inclusion ahead of the notch.

    ``kind`` is ``"void"`` or ``"inclusion"``. Missing centre coordinates
    are placed on the crack plane, ``standoff`` (in lattice constants) in
    front of the notch tip.
    """

    kind: str
    radius: float
    species: str | None = None
    center_x: float | None = None
    center_z: float | None = None
    standoff: float = 10.0

    def __post_init__(self):
        if self.kind not in ("void", "inclusion"):
            raise ConfigurationError(f"defect kind must be void or inclusion, got {self.kind!r}")
        if not self.radius > 0:
            raise ConfigurationError("defect radius must be positive")
        if self.kind == "inclusion" and self.species is None:
            raise ConfigurationError("inclusion needs a species")


@dataclass(frozen=True)
class ModelSpec:
    cells: tuple[int, int, int] = (40, 8, 80)
    host: str = "Ni"
    lattice_constant: float | None = None
    crack_length: float = 8.0  # lattice constants
    crack_width: float = 5.0  # lattice constants
    boundary_layer: float = 1.0  # lattice constants
    periodic_y: bool = False
    defect: DefectSpec | None = None


def notch_region(box: SimBox, a: float, length: float, width: float, plane_z: float) -> Box:
    """Slot open at the left face; remaining faces sit ``length`` and ``width`` apart.

    Faces of the slot are inset by a/4 so that only whole atomic planes
    are removed.
    """
    root = box.lower[0]
    big = 1e9
    return Box(
        (root - a, -big, plane_z - 0.5 * width + 0.25 * a),
        (root + length - 0.25 * a, big, plane_z + 0.5 * width - 0.25 * a),
    )


def defect_region(spec: DefectSpec, box: SimBox, a: float, notch_tip_x: float, plane_z: float) -> CylinderY:
    cx = notch_tip_x + spec.standoff * a if spec.center_x is None else spec.center_x
    cz = plane_z if spec.center_z is None else spec.center_z
    cyl = CylinderY(cx, cz, spec.radius)
    lo, hi = box.lower, box.upper
    if cx - spec.radius < lo[0] or cx + spec.radius > hi[0] or cz - spec.radius < lo[2] or cz + spec.radius > hi[2]:
        raise ConfigurationError(
            f"{spec.kind} of radius {spec.radius} Å centred at x={cx:.3f}, z={cz:.3f} does not fit in the box"
        )
    return cyl


def build_model(spec: ModelSpec) -> AtomSystem:
    """Build, notch, add the defect and freeze the boundary layers."""
    host = get_species(spec.host)
    boundary = (OPEN, PERIODIC if spec.periodic_y else OPEN, OPEN)
    system = build_fcc(spec.cells, host, spec.lattice_constant, boundary)
    a = system.lattice_constant
    nz = spec.cells[2]
    plane_z = (nz // 2) * a
    length = spec.crack_length * a
    width = spec.crack_width * a
    if length <= 0 or width <= 0:
        raise ConfigurationError("crack length and width must be positive")
    if length >= system.box.lengths[0]:
        raise ConfigurationError("crack longer than the model")
    slot = notch_region(system.box, a, length, width, plane_z)
    removed = slot.contains_many(system.positions)
    if not removed.any():
        raise ConfigurationError("crack slot removes no atoms")
    removed_positions = system.positions[removed]
    system = carve(system, slot)

    tree = cKDTree(system.positions)
    near = tree.query_ball_point(removed_positions, r=a / np.sqrt(2.0) * 1.05)
    faces = np.unique(np.fromiter((i for lst in near for i in lst), dtype=np.int64))
    system.notch = NotchInfo(
        root_x=system.box.lower[0], length=length, width=width, plane_z=plane_z, face_indices=faces
    )

    if spec.defect is not None:
        region = defect_region(spec.defect, system.box, a, system.box.lower[0] + length, plane_z)
        if spec.defect.kind == "void":
            system = carve(system, region)
        else:
            system = substitute(system, region, spec.defect.species)
    return tag_boundaries(system, spec.boundary_layer * a)

