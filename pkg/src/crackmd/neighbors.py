"""Cell-binned half neighbor lists with a displacement-triggered rebuild.

Pairs are stored once, as ``(i, j, shift)`` with ``j > i``; the separation
vector is ``x[j] - x[i] + shift * L`` with ``L`` the periodic box lengths.
Each atom's partners are sorted by ``(j, shift)``, so the pair order does
not depend on how atoms fall into cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import ConfigurationError
from .geometry import SimBox, wrap_positions

DEFAULT_SKIN = 1.0


@dataclass
class NeighborList:
    start: np.ndarray  # (N + 1,) CSR offsets
    neighbors: np.ndarray  # (M,) partner index j > i
    shifts: np.ndarray  # (M, 3) integer image shifts
    cutoff: float
    skin: float
    snapshot: np.ndarray  # positions at build time
    lengths: np.ndarray  # box lengths used for shifts

    @property
    def n_atoms(self) -> int:
        return len(self.start) - 1

    @property
    def n_pairs(self) -> int:
        return len(self.neighbors)

    @property
    def radius(self) -> float:
        return self.cutoff + self.skin

    def pair_set(self) -> set[tuple[int, int, tuple[int, int, int]]]:
        out = set()
        for i in range(self.n_atoms):
            for k in range(self.start[i], self.start[i + 1]):
                out.add((i, int(self.neighbors[k]), tuple(int(s) for s in self.shifts[k])))
        return out

    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flat ``(i, j, shift)`` arrays, one entry per stored pair."""
        counts = np.diff(self.start)
        i = np.repeat(np.arange(self.n_atoms), counts)
        return i, self.neighbors, self.shifts


def _ghosts(wrapped: np.ndarray, box: SimBox, radius: float):
    """Periodic images of atoms lying within ``radius`` of a face."""
    n = len(wrapped)
    pts = wrapped
    owner = np.arange(n)
    shift = np.zeros((n, 3), dtype=np.int64)
    lo = np.asarray(box.lower)
    hi = np.asarray(box.upper)
    lengths = box.lengths
    for axis in range(3):
        if not box.periodic[axis]:
            continue
        add_pts, add_owner, add_shift = [], [], []
        for s in (1, -1):
            if s == 1:
                sel = pts[:, axis] - lo[axis] <= radius
            else:
                sel = hi[axis] - pts[:, axis] <= radius
            p = pts[sel].copy()
            p[:, axis] += s * lengths[axis]
            sh = shift[sel].copy()
            sh[:, axis] += s
            add_pts.append(p)
            add_owner.append(owner[sel])
            add_shift.append(sh)
        pts = np.concatenate([pts] + add_pts)
        owner = np.concatenate([owner] + add_owner)
        shift = np.concatenate([shift] + add_shift)
    return pts, owner, shift


@nb.njit(cache=True)
def _bin(pts, origin, inv_cell, ncell):
    n = pts.shape[0]
    cell_of = np.empty(n, dtype=np.int64)
    for k in range(n):
        c = np.empty(3, dtype=np.int64)
        for d in range(3):
            v = int((pts[k, d] - origin[d]) * inv_cell[d])
            if v < 0:
                v = 0
            elif v >= ncell[d]:
                v = ncell[d] - 1
            c[d] = v
        cell_of[k] = (c[0] * ncell[1] + c[1]) * ncell[2] + c[2]
    order = np.argsort(cell_of, kind="mergesort")
    ntot = ncell[0] * ncell[1] * ncell[2]
    head = np.zeros(ntot + 1, dtype=np.int64)
    for k in range(n):
        head[cell_of[k] + 1] += 1
    for c in range(ntot):
        head[c + 1] += head[c]
    return order, head, cell_of


@nb.njit(cache=True)
def _scan(n_real, pts, owner, gshift, image, order, head, cell_of, ncell, r2max, fill, start, out_j, out_s):
    counts = np.zeros(n_real, dtype=np.int64)
    for i in range(n_real):
        ci = cell_of[i]
        cz = ci % ncell[2]
        cy = (ci // ncell[2]) % ncell[1]
        cx = ci // (ncell[2] * ncell[1])
        pos = start[i] if fill else 0
        for dx in range(-1, 2):
            x = cx + dx
            if x < 0 or x >= ncell[0]:
                continue
            for dy in range(-1, 2):
                y = cy + dy
                if y < 0 or y >= ncell[1]:
                    continue
                for dz in range(-1, 2):
                    z = cz + dz
                    if z < 0 or z >= ncell[2]:
                        continue
                    c = (x * ncell[1] + y) * ncell[2] + z
                    for m in range(head[c], head[c + 1]):
                        k = order[m]
                        j = owner[k]
                        if j <= i:
                            continue
                        r2 = 0.0
                        for d in range(3):
                            t = pts[k, d] - pts[i, d]
                            r2 += t * t
                        if r2 > r2max:
                            continue
                        if fill:
                            out_j[pos] = j
                            for d in range(3):
                                out_s[pos, d] = gshift[k, d] - image[j, d] + image[i, d]
                            pos += 1
                        else:
                            counts[i] += 1
    return counts


@nb.njit(cache=True)
def _sort_rows(start, out_j, out_s):
    n = start.shape[0] - 1
    for i in range(n):
        a, b = start[i], start[i + 1]
        if b - a < 2:
            continue
        key = np.empty(b - a, dtype=np.int64)
        for k in range(a, b):
            key[k - a] = ((out_j[k] * 2048 + (out_s[k, 0] + 1024)) * 2048 + (out_s[k, 1] + 1024)) * 2048 + (out_s[k, 2] + 1024)
        perm = np.argsort(key)
        tj = out_j[a:b].copy()
        ts = out_s[a:b].copy()
        for k in range(b - a):
            out_j[a + k] = tj[perm[k]]
            for d in range(3):
                out_s[a + k, d] = ts[perm[k], d]


def build(positions: np.ndarray, box: SimBox, cutoff: float, skin: float = DEFAULT_SKIN) -> NeighborList:
    """Half list of all pairs within ``cutoff + skin``."""
    if not cutoff > 0:
        raise ConfigurationError("neighbor cutoff must be positive")
    if skin < 0:
        raise ConfigurationError("skin must be non-negative")
    radius = cutoff + skin
    lengths = box.lengths
    for axis in range(3):
        if box.periodic[axis] and lengths[axis] < radius:
            raise ConfigurationError(
                f"periodic box length {lengths[axis]:.4f} Å on axis {'xyz'[axis]} is below cutoff+skin {radius:.4f} Å"
            )
    positions = np.ascontiguousarray(positions, dtype=float)
    n = len(positions)
    if n == 0:
        return NeighborList(np.zeros(1, np.int64), np.zeros(0, np.int64), np.zeros((0, 3), np.int64),
                            cutoff, skin, positions.copy(), lengths)
    wrapped, image = wrap_positions(positions, box)
    pts, owner, gshift = _ghosts(wrapped, box, radius)
    origin = pts.min(axis=0)
    extent = pts.max(axis=0) - origin
    ncell = np.maximum(1, np.floor(extent / radius).astype(np.int64))
    # bound the cell count for sparse systems
    while ncell.prod() > 8 * len(pts) + 27:
        ncell = np.maximum(1, ncell // 2)
    inv_cell = ncell / np.maximum(extent, 1e-12)
    order, head, cell_of = _bin(pts, origin, inv_cell, ncell)
    r2max = radius * radius
    dummy_j = np.zeros(0, np.int64)
    dummy_s = np.zeros((0, 3), np.int64)
    counts = _scan(n, pts, owner, gshift, image, order, head, cell_of, ncell, r2max, False,
                   np.zeros(n + 1, np.int64), dummy_j, dummy_s)
    start = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    out_j = np.empty(start[-1], dtype=np.int64)
    out_s = np.empty((start[-1], 3), dtype=np.int64)
    _scan(n, pts, owner, gshift, image, order, head, cell_of, ncell, r2max, True, start, out_j, out_s)
    _sort_rows(start, out_j, out_s)
    return NeighborList(start, out_j, out_s, float(cutoff), float(skin), positions.copy(), lengths.copy())


def needs_rebuild(nlist: NeighborList, positions: np.ndarray) -> bool:
    """True once any atom has moved at least skin/2 since the build."""
    positions = np.asarray(positions)
    if positions.shape != nlist.snapshot.shape:
        raise RuntimeError(
            f"neighbor list built for {len(nlist.snapshot)} atoms, system has {len(positions)}"
        )
    if len(positions) == 0:
        return False
    d = positions - nlist.snapshot
    return bool(np.einsum("ij,ij->i", d, d).max() >= (0.5 * nlist.skin) ** 2)


def brute_force_pairs(positions: np.ndarray, box: SimBox, radius: float) -> set[tuple[int, int, tuple[int, int, int]]]:
    """O(N²) reference pair set with explicit image enumeration."""
    positions = np.asarray(positions, dtype=float)
    lengths = box.lengths
    ranges = [range(-1, 2) if p else range(0, 1) for p in box.periodic]
    out = set()
    r2 = radius * radius
    for sx in ranges[0]:
        for sy in ranges[1]:
            for sz in ranges[2]:
                s = np.array([sx, sy, sz])
                offset = s * lengths
                d = positions[None, :, :] + offset - positions[:, None, :]
                dist2 = np.einsum("ijk,ijk->ij", d, d)
                ii, jj = np.nonzero(dist2 <= r2)
                for i, j in zip(ii, jj):
                    if j > i:
                        out.add((int(i), int(j), (sx, sy, sz)))
    return out
