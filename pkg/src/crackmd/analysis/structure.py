"""Fixed-cutoff common neighbor analysis, coordination and centro-symmetry.

Class codes follow the usual convention: 0 other, 1 FCC, 2 HCP, 3 BCC.
The neighbor cutoff sits midway between the first and second FCC shells,
``a (1 + sqrt 2) / (2 sqrt 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from ..lattice import AtomSystem
from ..neighbors import build as build_neighbors

OTHER, FCC, HCP, BCC = 0, 1, 2, 3
CLASS_NAMES = {OTHER: "other", FCC: "fcc", HCP: "hcp", BCC: "bcc"}

#: Centro-symmetry search radius, in lattice constants. Wide enough to
#: hold the 12 nearest neighbors of a moderately strained FCC atom.
CSP_RADIUS = 1.2


def cna_cutoff(a: float) -> float:
    return a * (1.0 + math.sqrt(2.0)) / (2.0 * math.sqrt(2.0))


@dataclass
class StructureLabels:
    structure: np.ndarray  # (N,) int8 class code
    coordination: np.ndarray  # (N,) neighbors within the CNA cutoff
    centrosymmetry: np.ndarray  # (N,) Å²
    start: np.ndarray  # CSR offsets of the full CNA adjacency
    neighbors: np.ndarray  # CSR neighbor indices, sorted per atom
    cutoff: float

    def __len__(self) -> int:
        return len(self.structure)

    def fractions(self) -> dict[str, float]:
        n = max(1, len(self.structure))
        return {name: float(np.count_nonzero(self.structure == code)) / n for code, name in CLASS_NAMES.items()}


def _full_lists(system: AtomSystem, radius: float):
    """Full neighbor CSR with separation vectors, from the half list."""
    nl = build_neighbors(system.positions, system.box, radius, 0.0)
    i, j, s = nl.pair_arrays()
    d = system.positions[j] - system.positions[i] + s * nl.lengths
    ii = np.concatenate([i, j])
    jj = np.concatenate([j, i])
    dd = np.concatenate([d, -d])
    r = np.sqrt(np.einsum("ij,ij->i", dd, dd))
    order = np.lexsort((jj, r, ii))
    ii, jj, dd, r = ii[order], jj[order], dd[order], r[order]
    start = np.zeros(system.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(ii, minlength=system.n), out=start[1:])
    return start, jj, dd, r


@nb.njit(cache=True)
def _contains(arr, lo, hi, value):
    a, b = lo, hi
    while a < b:
        mid = (a + b) // 2
        if arr[mid] < value:
            a = mid + 1
        else:
            b = mid
    return a < hi and arr[a] == value


@nb.njit(cache=True)
def _cna_kernel(start, nbr, out):
    n = start.shape[0] - 1
    common = np.empty(64, dtype=np.int64)
    parent = np.empty(64, dtype=np.int64)
    nbonds = np.empty(64, dtype=np.int64)
    for i in range(n):
        deg = start[i + 1] - start[i]
        if deg != 12 and deg != 14:
            out[i] = 0
            continue
        n421 = 0
        n422 = 0
        n444 = 0
        n666 = 0
        for k in range(start[i], start[i + 1]):
            j = nbr[k]
            # common neighbors of i and j
            nc = 0
            for m in range(start[i], start[i + 1]):
                c = nbr[m]
                if c != j and _contains(nbr, start[j], start[j + 1], c):
                    if nc < 64:
                        common[nc] = c
                    nc += 1
            if nc > 64:
                nc = 64
            # bonds among the common neighbors and the longest bonded cluster
            for a in range(nc):
                parent[a] = a
                nbonds[a] = 0
            total = 0
            for a in range(nc):
                for b in range(a + 1, nc):
                    if _contains(nbr, start[common[a]], start[common[a] + 1], common[b]):
                        total += 1
                        ra = a
                        while parent[ra] != ra:
                            ra = parent[ra]
                        rb = b
                        while parent[rb] != rb:
                            rb = parent[rb]
                        if ra != rb:
                            parent[rb] = ra
                            nbonds[ra] += nbonds[rb] + 1
                        else:
                            nbonds[ra] += 1
            longest = 0
            for a in range(nc):
                if parent[a] == a and nbonds[a] > longest:
                    longest = nbonds[a]
            if nc == 4 and total == 2 and longest == 1:
                n421 += 1
            elif nc == 4 and total == 2 and longest == 2:
                n422 += 1
            elif nc == 4 and total == 4 and longest == 4:
                n444 += 1
            elif nc == 6 and total == 6 and longest == 6:
                n666 += 1
        if deg == 12 and n421 == 12:
            out[i] = 1
        elif deg == 12 and n421 == 6 and n422 == 6:
            out[i] = 2
        elif deg == 14 and n444 == 6 and n666 == 8:
            out[i] = 3
        else:
            out[i] = 0


@nb.njit(cache=True)
def _csp_kernel(start, vec, n_nearest, out):
    n = start.shape[0] - 1
    for i in range(n):
        m = min(n_nearest, start[i + 1] - start[i])
        npair = m * (m - 1) // 2
        if m < 2:
            out[i] = 0.0
            continue
        vals = np.empty(npair)
        p = 0
        base = start[i]
        for a in range(m):
            for b in range(a + 1, m):
                s = 0.0
                for d in range(3):
                    t = vec[base + a, d] + vec[base + b, d]
                    s += t * t
                vals[p] = s
                p += 1
        vals.sort()
        total = 0.0
        for k in range(m // 2):
            total += vals[k]
        out[i] = total


def classify_structure(system: AtomSystem, lattice_constant: float | None = None) -> StructureLabels:
    """CNA class, coordination and 12-neighbor centro-symmetry per atom.

    Centro-symmetry sums the N/2 smallest ``|R_a + R_b|²`` over pairs of
    the N = 12 nearest neighbors; atoms with fewer than 12 neighbors
    within ``CSP_RADIUS * a`` use those they have.
    """
    a = lattice_constant or system.lattice_constant
    if not a > 0:
        raise ValueError("a positive lattice constant is required")
    n = system.n
    rc = cna_cutoff(a)
    start_w, nbr_w, vec_w, r_w = _full_lists(system, CSP_RADIUS * a)

    csp = np.zeros(n)
    if n:
        _csp_kernel(start_w, np.ascontiguousarray(vec_w), 12, csp)

    # CNA adjacency: the distance-sorted rows truncated at rc, re-sorted by index
    keep = r_w <= rc
    rows = np.repeat(np.arange(n), np.diff(start_w))
    sel_rows = rows[keep]
    counts = np.bincount(sel_rows, minlength=n)
    start = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    sel_nbr = nbr_w[keep]
    order = np.lexsort((sel_nbr, sel_rows))
    nbr = np.ascontiguousarray(sel_nbr[order])

    structure = np.zeros(n, dtype=np.int8)
    if n:
        _cna_kernel(start, nbr, structure)
    return StructureLabels(structure, counts.astype(np.int64), csp, start, nbr, rc)
