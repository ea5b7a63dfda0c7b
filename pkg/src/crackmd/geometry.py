"""Simulation box, minimum-image displacements and region predicates.

Positions are plain ``numpy`` arrays of shape ``(3,)`` or ``(N, 3)`` in Å.
Regions are immutable and compose with ``|`` (union), ``&``
(intersection) and ``~`` (complement).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

OPEN = "open"
PERIODIC = "periodic"


class GeometryError(ValueError):
    pass


def vec3(x: float, y: float, z: float) -> np.ndarray:
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise GeometryError(f"non-finite vector {v}")
    return v


@dataclass(frozen=True)
class SimBox:
    """Orthorhombic box with per-axis open/periodic boundaries."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]
    boundary: tuple[str, str, str] = (OPEN, OPEN, OPEN)

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise GeometryError("box corners must have three components")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise GeometryError("box corners must be finite")
        if np.any(hi <= lo):
            raise GeometryError(f"upper corner {tuple(hi)} must exceed lower {tuple(lo)} on every axis")
        for kind in self.boundary:
            if kind not in (OPEN, PERIODIC):
                raise GeometryError(f"unknown boundary kind {kind!r}")
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))
        object.__setattr__(self, "boundary", tuple(self.boundary))

    @property
    def lengths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def periodic(self) -> np.ndarray:
        return np.array([b == PERIODIC for b in self.boundary])

    def with_bounds(self, lower: Sequence[float], upper: Sequence[float]) -> "SimBox":
        return SimBox(tuple(lower), tuple(upper), self.boundary)

    def with_boundary(self, boundary: Sequence[str]) -> "SimBox":
        return SimBox(self.lower, self.upper, tuple(boundary))


def displacement(a: np.ndarray, b: np.ndarray, box: SimBox) -> np.ndarray:
    """Return ``b - a`` wrapped to the nearest image along periodic axes.

    Works on single vectors or broadcastable ``(..., 3)`` arrays.
    """
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    per = box.periodic
    if per.any():
        lengths = box.lengths
        d = np.array(d, copy=True)
        d[..., per] -= lengths[per] * np.round(d[..., per] / lengths[per])
    return d


def wrap_positions(positions: np.ndarray, box: SimBox) -> tuple[np.ndarray, np.ndarray]:
    """Map positions into the primary cell along periodic axes.

    Returns ``(wrapped, image)`` where ``positions = wrapped + image * L``.
    """
    pos = np.asarray(positions, dtype=float)
    lo = np.asarray(box.lower)
    lengths = box.lengths
    image = np.zeros(pos.shape, dtype=np.int64)
    per = box.periodic
    if per.any():
        image[:, per] = np.floor((pos[:, per] - lo[per]) / lengths[per]).astype(np.int64)
    wrapped = pos - image * lengths
    return wrapped, image


# ---------------------------------------------------------------------------
# Regions


class Region:
    """Closed point set; subclasses implement :meth:`contains_many`."""

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, p: Sequence[float]) -> bool:
        return bool(self.contains_many(np.asarray(p, dtype=float).reshape(1, 3))[0])

    def __or__(self, other: "Region") -> "Region":
        return Union((self, other))

    def __and__(self, other: "Region") -> "Region":
        return Intersection((self, other))

    def __invert__(self) -> "Region":
        return Complement(self)


@dataclass(frozen=True)
class Box(Region):
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def contains_many(self, points):
        pts = np.atleast_2d(points)
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        return np.all((pts >= lo) & (pts <= hi), axis=1)


@dataclass(frozen=True)
class CylinderY(Region):
    """Infinite cylinder with its axis along y."""

    center_x: float
    center_z: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"cylinder radius must be positive, got {self.radius}")

    def contains_many(self, points):
        pts = np.atleast_2d(points)
        dx = pts[:, 0] - self.center_x
        dz = pts[:, 2] - self.center_z
        return dx * dx + dz * dz <= self.radius * self.radius


@dataclass(frozen=True)
class HalfSpace(Region):
    """``side='below'`` keeps ``p[axis] <= threshold``, ``'above'`` keeps ``>=``."""

    axis: int
    threshold: float
    side: str = "below"

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise GeometryError(f"axis must be 0, 1 or 2, got {self.axis}")
        if self.side not in ("below", "above"):
            raise GeometryError(f"side must be 'below' or 'above', got {self.side!r}")

    def contains_many(self, points):
        pts = np.atleast_2d(points)
        if self.side == "below":
            return pts[:, self.axis] <= self.threshold
        return pts[:, self.axis] >= self.threshold


@dataclass(frozen=True)
class Empty(Region):
    def contains_many(self, points):
        return np.zeros(len(np.atleast_2d(points)), dtype=bool)


@dataclass(frozen=True)
class Union(Region):
    parts: tuple[Region, ...] = field(default_factory=tuple)

    def contains_many(self, points):
        pts = np.atleast_2d(points)
        out = np.zeros(len(pts), dtype=bool)
        for part in self.parts:
            out |= part.contains_many(pts)
        return out


@dataclass(frozen=True)
class Intersection(Region):
    parts: tuple[Region, ...] = field(default_factory=tuple)

    def contains_many(self, points):
        pts = np.atleast_2d(points)
        out = np.ones(len(pts), dtype=bool)
        for part in self.parts:
            out &= part.contains_many(pts)
        return out


@dataclass(frozen=True)
class Complement(Region):
    inner: Region

    def contains_many(self, points):
        return ~self.inner.contains_many(points)


def region_contains(region: Region, p: Sequence[float]) -> bool:
    return region.contains(p)
