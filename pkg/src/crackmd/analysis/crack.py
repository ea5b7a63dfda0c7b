"""Crack-length tracking, crack-plane stress profiles and slip-plane fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import AnalysisError
from ..geometry import displacement
from ..lattice import AtomSystem
from .stress import AtomStress, von_mises
from .structure import HCP, StructureLabels

#: Atoms with at most this many CNA neighbors count as free surface.
SURFACE_MAX_COORDINATION = 9

#: Default half-width of the crack-plane band, in lattice constants.
BAND_HALF_WIDTH = 2.0


@dataclass
class CrackMetrics:
    tip_x: float
    length: float
    strain: float = float("nan")
    n_surface: int = 0


def _components(labels: StructureLabels, members: np.ndarray) -> np.ndarray:
    """Connected-component id per atom of the subgraph on ``members`` (-1 elsewhere)."""
    n = len(labels)
    rows = np.repeat(np.arange(n), np.diff(labels.start))
    cols = labels.neighbors
    sel = members[rows] & members[cols]
    graph = coo_matrix((np.ones(int(sel.sum()), dtype=np.int8), (rows[sel], cols[sel])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    comp = comp.astype(np.int64)
    comp[~members] = -1
    return comp


def crack_surface(system: AtomSystem, labels: StructureLabels) -> np.ndarray:
    """Free-surface atoms that face the crack rather than an open y face.

    An atom is free surface when its coordination is at most
    ``SURFACE_MAX_COORDINATION``. Surface atoms lacking neighbors on one
    side in y sit on the model's own ±y faces and are dropped, otherwise
    those faces would join every surface into one component.
    """
    n = system.n
    surface = labels.coordination <= SURFACE_MAX_COORDINATION
    if system.box.periodic[1]:
        return surface
    rows = np.repeat(np.arange(n), np.diff(labels.start))
    dy = system.positions[labels.neighbors, 1] - system.positions[rows, 1]
    tol = 0.1 * labels.cutoff
    up = np.zeros(n, dtype=bool)
    down = np.zeros(n, dtype=bool)
    up[rows[dy > tol]] = True
    down[rows[dy < -tol]] = True
    return surface & up & down


def crack_length(
    system: AtomSystem,
    labels: StructureLabels,
    band_half_width: float | None = None,
    strain: float = float("nan"),
) -> CrackMetrics:
    """Tip position of the notch-connected surface inside the crack-plane band.

    Connectivity is traced among crack-surface atoms lying within
    ``|z - z_plane| <= band_half_width`` (default 2a), seeded by the atoms
    that faced the notch at build time; the tip is the largest x reached.
    Tracing inside the band keeps the outer faces of the block from
    joining the component through the top and bottom surfaces.
    """
    notch = system.notch
    if notch is None:
        raise AnalysisError("system carries no notch record")
    a = system.lattice_constant
    half = BAND_HALF_WIDTH * a if band_half_width is None else band_half_width
    band = np.abs(system.positions[:, 2] - notch.plane_z) <= half
    surface = crack_surface(system, labels) & band
    seeds = notch.face_indices[surface[notch.face_indices]]
    if len(seeds) == 0:
        raise AnalysisError("notch surface component not found")
    comp = _components(labels, surface)
    member = np.isin(comp, np.unique(comp[seeds]))
    tip = float(system.positions[member, 0].max())
    return CrackMetrics(tip, tip - notch.root_x, strain, int(member.sum()))


def monotone(values) -> np.ndarray:
    """Running maximum, used to report a non-healing crack-length series."""
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return v
    return np.fmax.accumulate(v)


@dataclass
class StressProfile:
    x: np.ndarray  # bin centres, Å
    mean_von_mises: np.ndarray  # eV (stress×volume)
    counts: np.ndarray

    @property
    def peak_x(self) -> float:
        return float(self.x[int(np.argmax(self.mean_von_mises))])

    @property
    def bin_width(self) -> float:
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else float("nan")


def tip_stress_profile(
    system: AtomSystem,
    stress: AtomStress,
    band_half_width: float | None = None,
    bin_width: float | None = None,
    plane_z: float | None = None,
) -> StressProfile:
    """Mean von Mises (stress×volume) in x bins across the crack-plane band.

    Bins without atoms are omitted.
    """
    a = system.lattice_constant
    half = BAND_HALF_WIDTH * a if band_half_width is None else band_half_width
    width = a if bin_width is None else bin_width
    if width < a * (1 - 1e-12):
        raise AnalysisError("bin width must be at least one lattice constant")
    if plane_z is None:
        if system.notch is None:
            raise AnalysisError("no crack plane given and no notch record")
        plane_z = system.notch.plane_z
    return binned_profile(
        system.positions[:, 0], system.positions[:, 2], von_mises(stress), plane_z, half, width,
        system.box.lower[0], system.box.upper[0],
    )


def binned_profile(x, z, values, plane_z: float, half_width: float, bin_width: float, x_lo: float, x_hi: float) -> StressProfile:
    """Mean of ``values`` in x bins over atoms with ``|z - plane_z| <= half_width``."""
    x = np.asarray(x, dtype=float)
    sel = np.abs(np.asarray(z, dtype=float) - plane_z) <= half_width
    if not sel.any():
        raise AnalysisError("crack-plane band contains no atoms")
    vals = np.asarray(values, dtype=float)[sel]
    xs = x[sel]
    nbins = max(1, int(math.ceil((x_hi - x_lo) / bin_width)))
    idx = np.clip(((xs - x_lo) / bin_width).astype(np.int64), 0, nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    sums = np.bincount(idx, weights=vals, minlength=nbins)
    keep = counts > 0
    centres = x_lo + (np.arange(nbins) + 0.5) * bin_width
    return StressProfile(centres[keep], sums[keep] / counts[keep], counts[keep])


# ---------------------------------------------------------------------------
# Slip plane


def _family_111(orientation: np.ndarray | None) -> np.ndarray:
    base = np.array([[1, 1, 1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=float) / math.sqrt(3.0)
    if orientation is None:
        return base
    return base @ np.asarray(orientation, dtype=float)


def _refine_with_bonds(system: AtomSystem, labels: StructureLabels, members: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Sharpen a position-fit normal using bonds that lie within one fault layer.

    A position fit tilts when the layers of a band have different
    outlines. Bonds between two atoms of the same close-packed layer are
    exactly in-plane, so the direction least represented among them is
    the layer normal whatever the cluster shape. Inter-layer bonds sit at
    about 55° to the plane and are excluded by a 30° cut.
    """
    n = len(labels)
    rows = np.repeat(np.arange(n), np.diff(labels.start))
    cols = labels.neighbors
    sel = members[rows] & members[cols] & (rows < cols)
    if not sel.any():
        return normal
    bonds = displacement(system.positions[rows[sel]], system.positions[cols[sel]], system.box)
    lengths = np.linalg.norm(bonds, axis=1)
    in_layer = np.abs(bonds @ normal) < 0.5 * lengths
    if in_layer.sum() < 3:
        return normal
    b = bonds[in_layer]
    _, vecs = np.linalg.eigh(b.T @ b)
    refined = vecs[:, 0]
    return refined * np.sign(refined @ normal or 1.0)


@dataclass
class SlipFit:
    normal: np.ndarray  # fitted unit normal, lab frame
    family_normal: np.ndarray  # nearest <111> member, same sign as ``normal``
    deviation_deg: float
    n_atoms: int
    miller: tuple[int, int, int]


def slip_plane_fit(
    system: AtomSystem,
    labels: StructureLabels,
    tip: tuple[float, float] | None = None,
    radius: float | None = None,
    min_atoms: int = 10,
    orientation: np.ndarray | None = None,
) -> SlipFit:
    """Least-squares plane through the largest HCP cluster near the crack tip.

    ``tip`` is an ``(x, z)`` point and ``radius`` (Å) limits the search in
    the xz plane. ``orientation`` maps crystal axes to lab axes (rows are
    the lab images of [100], [010], [001]); identity when omitted.
    """
    hcp = labels.structure == HCP
    if tip is not None:
        r = radius if radius is not None else 10.0 * system.lattice_constant
        dx = system.positions[:, 0] - tip[0]
        dz = system.positions[:, 2] - tip[1]
        hcp &= dx * dx + dz * dz <= r * r
    if hcp.sum() < min_atoms:
        raise AnalysisError("no slip band detected")
    comp = _components(labels, hcp)
    ids, sizes = np.unique(comp[hcp], return_counts=True)
    best = ids[np.argmax(sizes)]
    pts = system.positions[comp == best]
    if len(pts) < min_atoms:
        raise AnalysisError("no slip band detected")
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    normal = _refine_with_bonds(system, labels, comp == best, vt[-1] / np.linalg.norm(vt[-1]))
    family = _family_111(orientation)
    dots = family @ normal
    k = int(np.argmax(np.abs(dots)))
    member = family[k] * np.sign(dots[k] or 1.0)
    deviation = math.degrees(math.acos(min(1.0, abs(float(dots[k])))))
    crystal = member if orientation is None else np.asarray(orientation, dtype=float) @ member
    miller = tuple(int(v) for v in np.rint(crystal * math.sqrt(3.0)))
    return SlipFit(normal * np.sign(dots[k] or 1.0), member, deviation, len(pts), miller)
