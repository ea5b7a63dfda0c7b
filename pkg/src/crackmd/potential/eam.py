"""EAM energy, forces and per-atom virials from a tabulated setfl table.

Energy of atom i is ``F_i(rho_i) + 1/2 sum_j phi_ij(r_ij)`` with
``rho_i = sum_j rho_j(r_ij)``. Pair contributions vanish for
``r >= cutoff``. Per-atom virials use the pair split
``1/2 (r_j - r_i) (x) f_ij`` credited to both partners, components ordered
``xx, yy, zz, xy, xz, yz``; positive values are tensile.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba as nb
import numpy as np

from ..errors import ConfigurationError, NumericalRangeError
from ..geometry import PERIODIC, SimBox
from ..neighbors import NeighborList
from .setfl import EamTable
from .spline import spline_coefficients, spline_eval

VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass
class EnergyForceVirial:
    energy: float
    per_atom_energy: np.ndarray
    forces: np.ndarray
    virial: np.ndarray  # (N, 6), eV

    @property
    def total_virial(self) -> np.ndarray:
        return self.virial.sum(axis=0)


@nb.njit(cache=True)
def _eam_kernel(pos, types, start, nbr, shifts, lengths,
                f_coef, rho_coef, rphi_coef, inv_drho, drho, inv_dr, dr, rc,
                energy, forces, virial, rho, fprime, err):
    n = pos.shape[0]
    rc2 = rc * rc
    dr2 = dr * dr
    for i in range(n):
        rho[i] = 0.0
        energy[i] = 0.0
        for d in range(3):
            forces[i, d] = 0.0
        for c in range(6):
            virial[i, c] = 0.0

    for i in range(n):
        ti = types[i]
        for k in range(start[i], start[i + 1]):
            j = nbr[k]
            dx = pos[j, 0] - pos[i, 0] + shifts[k, 0] * lengths[0]
            dy = pos[j, 1] - pos[i, 1] + shifts[k, 1] * lengths[1]
            dz = pos[j, 2] - pos[i, 2] + shifts[k, 2] * lengths[2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 >= rc2:
                continue
            if r2 < dr2:
                err[0] = i
                err[1] = j
                return
            r = math.sqrt(r2)
            tj = types[j]
            vj, _ = spline_eval(rho_coef[tj], r, inv_dr, dr)
            rho[i] += vj
            if tj == ti:
                rho[j] += vj
            else:
                vi, _ = spline_eval(rho_coef[ti], r, inv_dr, dr)
                rho[j] += vi

    for i in range(n):
        f, fp = spline_eval(f_coef[types[i]], rho[i], inv_drho, drho)
        energy[i] = f
        fprime[i] = fp

    for i in range(n):
        ti = types[i]
        for k in range(start[i], start[i + 1]):
            j = nbr[k]
            dx = pos[j, 0] - pos[i, 0] + shifts[k, 0] * lengths[0]
            dy = pos[j, 1] - pos[i, 1] + shifts[k, 1] * lengths[1]
            dz = pos[j, 2] - pos[i, 2] + shifts[k, 2] * lengths[2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 >= rc2:
                continue
            r = math.sqrt(r2)
            tj = types[j]
            _, drho_j = spline_eval(rho_coef[tj], r, inv_dr, dr)
            if tj == ti:
                drho_i = drho_j
            else:
                _, drho_i = spline_eval(rho_coef[ti], r, inv_dr, dr)
            z, dz_ = spline_eval(rphi_coef[ti, tj], r, inv_dr, dr)
            phi = z / r
            dphi = (dz_ - phi) / r
            fpair = (fprime[i] * drho_j + fprime[j] * drho_i + dphi) / r
            energy[i] += 0.5 * phi
            energy[j] += 0.5 * phi
            fx = fpair * dx
            fy = fpair * dy
            fz = fpair * dz
            forces[i, 0] += fx
            forces[i, 1] += fy
            forces[i, 2] += fz
            forces[j, 0] -= fx
            forces[j, 1] -= fy
            forces[j, 2] -= fz
            hx = 0.5 * dx
            hy = 0.5 * dy
            hz = 0.5 * dz
            w0 = hx * fx
            w1 = hy * fy
            w2 = hz * fz
            w3 = hx * fy
            w4 = hx * fz
            w5 = hy * fz
            virial[i, 0] += w0
            virial[i, 1] += w1
            virial[i, 2] += w2
            virial[i, 3] += w3
            virial[i, 4] += w4
            virial[i, 5] += w5
            virial[j, 0] += w0
            virial[j, 1] += w1
            virial[j, 2] += w2
            virial[j, 3] += w3
            virial[j, 4] += w4
            virial[j, 5] += w5


@nb.njit(cache=True, parallel=True)
def _eam_kernel_chunked(pos, types, start, nbr, shifts, lengths,
                        f_coef, rho_coef, rphi_coef, inv_drho, drho, inv_dr, dr, rc,
                        n_chunks, energy, forces, virial, rho, fprime, err):
    """Same sums as :func:`_eam_kernel`, split over ``n_chunks`` workers.

    Each chunk scatters into a private buffer; buffers are reduced in chunk
    order, so results depend on ``n_chunks`` but not on thread timing.
    """
    n = pos.shape[0]
    rc2 = rc * rc
    dr2 = dr * dr
    rho_buf = np.zeros((n_chunks, n))
    e_buf = np.zeros((n_chunks, n))
    f_buf = np.zeros((n_chunks, n, 3))
    w_buf = np.zeros((n_chunks, n, 6))
    bad = np.full((n_chunks, 2), -1, dtype=np.int64)
    size = (n + n_chunks - 1) // n_chunks

    for c in nb.prange(n_chunks):
        for i in range(c * size, min(n, (c + 1) * size)):
            ti = types[i]
            for k in range(start[i], start[i + 1]):
                j = nbr[k]
                dx = pos[j, 0] - pos[i, 0] + shifts[k, 0] * lengths[0]
                dy = pos[j, 1] - pos[i, 1] + shifts[k, 1] * lengths[1]
                dz = pos[j, 2] - pos[i, 2] + shifts[k, 2] * lengths[2]
                r2 = dx * dx + dy * dy + dz * dz
                if r2 >= rc2:
                    continue
                if r2 < dr2:
                    bad[c, 0] = i
                    bad[c, 1] = j
                    continue
                r = math.sqrt(r2)
                v, _ = spline_eval(rho_coef[types[j]], r, inv_dr, dr)
                rho_buf[c, i] += v
                v, _ = spline_eval(rho_coef[ti], r, inv_dr, dr)
                rho_buf[c, j] += v
    for c in range(n_chunks):
        if bad[c, 0] >= 0:
            err[0] = bad[c, 0]
            err[1] = bad[c, 1]
            return
    for i in range(n):
        s = 0.0
        for c in range(n_chunks):
            s += rho_buf[c, i]
        rho[i] = s
        f, fp = spline_eval(f_coef[types[i]], s, inv_drho, drho)
        energy[i] = f
        fprime[i] = fp

    for c in nb.prange(n_chunks):
        for i in range(c * size, min(n, (c + 1) * size)):
            ti = types[i]
            for k in range(start[i], start[i + 1]):
                j = nbr[k]
                dx = pos[j, 0] - pos[i, 0] + shifts[k, 0] * lengths[0]
                dy = pos[j, 1] - pos[i, 1] + shifts[k, 1] * lengths[1]
                dz = pos[j, 2] - pos[i, 2] + shifts[k, 2] * lengths[2]
                r2 = dx * dx + dy * dy + dz * dz
                if r2 >= rc2:
                    continue
                r = math.sqrt(r2)
                tj = types[j]
                _, drho_j = spline_eval(rho_coef[tj], r, inv_dr, dr)
                _, drho_i = spline_eval(rho_coef[ti], r, inv_dr, dr)
                z, dz_ = spline_eval(rphi_coef[ti, tj], r, inv_dr, dr)
                phi = z / r
                dphi = (dz_ - phi) / r
                fpair = (fprime[i] * drho_j + fprime[j] * drho_i + dphi) / r
                e_buf[c, i] += 0.5 * phi
                e_buf[c, j] += 0.5 * phi
                fx = fpair * dx
                fy = fpair * dy
                fz = fpair * dz
                f_buf[c, i, 0] += fx
                f_buf[c, i, 1] += fy
                f_buf[c, i, 2] += fz
                f_buf[c, j, 0] -= fx
                f_buf[c, j, 1] -= fy
                f_buf[c, j, 2] -= fz
                w = (0.5 * dx * fx, 0.5 * dy * fy, 0.5 * dz * fz,
                     0.5 * dx * fy, 0.5 * dx * fz, 0.5 * dy * fz)
                for m in range(6):
                    w_buf[c, i, m] += w[m]
                    w_buf[c, j, m] += w[m]
    for i in nb.prange(n):
        for c in range(n_chunks):
            energy[i] += e_buf[c, i]
            for d in range(3):
                forces[i, d] += f_buf[c, i, d]
            for m in range(6):
                virial[i, m] += w_buf[c, i, m]


class EamPotential:
    """Spline-interpolated view of an :class:`EamTable`, ready for force evaluation."""

    def __init__(self, table: EamTable, threads: int = 1):
        self.table = table
        self.threads = max(1, int(threads))
        nel = table.n_elements
        self.f_coef = np.stack([spline_coefficients(table.embedding[e], table.drho) for e in range(nel)])
        self.rho_coef = np.stack([spline_coefficients(table.density[e], table.dr) for e in range(nel)])
        rphi = np.empty((nel, nel, table.nr, 4))
        for i in range(nel):
            for j in range(i + 1):
                c = spline_coefficients(table.pair_rphi[i, j], table.dr)
                rphi[i, j] = c
                rphi[j, i] = c
        self.rphi_coef = rphi

    @property
    def cutoff(self) -> float:
        return self.table.cutoff

    def type_map(self, species_symbols) -> np.ndarray:
        return np.array([self.table.index(s) for s in species_symbols], dtype=np.int64)

    def atom_types(self, system) -> np.ndarray:
        mapping = self.type_map([s.symbol for s in system.species_list])
        return mapping[system.species]

    def compute(self, system, neighbors: NeighborList) -> EnergyForceVirial:
        return self.compute_arrays(system.positions, self.atom_types(system), neighbors)

    def compute_arrays(self, positions, types, neighbors: NeighborList) -> EnergyForceVirial:
        pos = np.ascontiguousarray(positions, dtype=float)
        n = len(pos)
        if neighbors.n_atoms != n:
            raise RuntimeError("neighbor list does not match the system size")
        if neighbors.cutoff < self.cutoff:
            raise ConfigurationError("neighbor list cutoff is shorter than the potential cutoff")
        energy = np.empty(n)
        forces = np.empty((n, 3))
        virial = np.empty((n, 6))
        rho = np.empty(n)
        fprime = np.empty(n)
        err = np.full(2, -1, dtype=np.int64)
        t = self.table
        args = (pos, np.ascontiguousarray(types, dtype=np.int64), neighbors.start, neighbors.neighbors,
                neighbors.shifts, np.asarray(neighbors.lengths, dtype=float),
                self.f_coef, self.rho_coef, self.rphi_coef,
                1.0 / t.drho, t.drho, 1.0 / t.dr, t.dr, t.cutoff)
        if self.threads > 1 and n > 0:
            energy[:] = 0.0
            forces[:] = 0.0
            virial[:] = 0.0
            _eam_kernel_chunked(*args, self.threads, energy, forces, virial, rho, fprime, err)
        else:
            _eam_kernel(*args, energy, forces, virial, rho, fprime, err)
        if err[0] >= 0:
            i, j = int(err[0]), int(err[1])
            raise NumericalRangeError(
                f"atoms {i} and {j} are closer than the first table knot ({t.dr:g} Å)"
            )
        total = math.fsum(energy)
        if not math.isfinite(total):
            raise NumericalRangeError("non-finite potential energy")
        return EnergyForceVirial(total, energy, forces, virial)


def reference_energy(potential: EamPotential, positions: np.ndarray, types: np.ndarray, box: SimBox):
    """O(N²) evaluator without neighbor lists.

    Returns ``(energy, global_virial)`` where the virial is the 6-component
    pair sum ``sum_pairs (r_j - r_i) (x) f_ij``.
    """
    pos = np.asarray(positions, dtype=float)
    types = np.asarray(types)
    t = potential.table
    rc = t.cutoff
    lengths = box.lengths
    ranges = []
    for axis in range(3):
        if box.boundary[axis] == PERIODIC:
            m = int(math.ceil(rc / lengths[axis]))
            ranges.append(range(-m, m + 1))
        else:
            ranges.append(range(0, 1))
    n = len(pos)
    from .spline import Spline1D  # local: only used by this slow path

    rho_spl = [Spline1D(t.density[e], t.dr) for e in range(t.n_elements)]
    f_spl = [Spline1D(t.embedding[e], t.drho) for e in range(t.n_elements)]
    pair_spl = {(i, j): Spline1D(t.pair_rphi[i, j], t.dr) for i in range(t.n_elements) for j in range(t.n_elements)}

    rho = np.zeros(n)
    pair_energy = 0.0
    dudr_terms = []
    records = []
    for sx in ranges[0]:
        for sy in ranges[1]:
            for sz in ranges[2]:
                off = np.array([sx, sy, sz]) * lengths
                d = pos[None, :, :] + off - pos[:, None, :]
                r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
                mask = (r < rc) & (r > 0)
                ii, jj = np.nonzero(mask)
                rr = r[ii, jj]
                for e in range(t.n_elements):
                    sel = types[jj] == e
                    np.add.at(rho, ii[sel], rho_spl[e](rr[sel]))
                records.append((ii, jj, rr, d[ii, jj]))
    embed = np.array([f_spl[types[i]](rho[i]) for i in range(n)]) if n else np.zeros(0)
    fprime = np.array([f_spl[types[i]](rho[i], 1) for i in range(n)]) if n else np.zeros(0)
    virial = np.zeros(6)
    for ii, jj, rr, dd in records:
        for a in range(t.n_elements):
            for b in range(t.n_elements):
                sel = (types[ii] == a) & (types[jj] == b)
                if not sel.any():
                    continue
                r = rr[sel]
                z = pair_spl[(a, b)](r)
                dz = pair_spl[(a, b)](r, 1)
                phi = z / r
                pair_energy += 0.5 * math.fsum(phi)
                dudr = fprime[ii[sel]] * rho_spl[b](r, 1) + fprime[jj[sel]] * rho_spl[a](r, 1) + (dz - phi) / r
                fpair = dudr / r
                dv = dd[sel]
                for c, (p, q) in enumerate(VOIGT):
                    # each unordered pair is visited twice; halve
                    virial[c] += 0.5 * np.sum(fpair * dv[:, p] * dv[:, q])
    return math.fsum(embed) + pair_energy, virial


def fcc_energy_per_atom(potential: EamPotential, symbol: str, a: float) -> tuple[float, float]:
    """Energy/atom and virial trace/atom of a periodic perfect FCC crystal."""
    from ..lattice import Species, build_fcc
    from ..neighbors import build as build_neighbors

    idx = potential.table.index(symbol)
    species = Species(symbol, potential.table.masses[idx], a)
    ncell = max(1, int(math.ceil(potential.cutoff / a)) + 1)
    system = build_fcc((ncell, ncell, ncell), species, a, boundary=(PERIODIC,) * 3)
    nl = build_neighbors(system.positions, system.box, potential.cutoff, 0.0)
    types = np.full(system.n, idx, dtype=np.int64)
    res = potential.compute_arrays(system.positions, types, nl)
    trace = res.virial[:, :3].sum()
    return res.energy / system.n, trace / system.n


def cohesive_scan(potential: EamPotential, symbol: str, a_range: tuple[float, float], steps: int = 21):
    """Lattice constant minimising the FCC energy per atom over ``a_range``.

    A grid scan is refined by a parabola through the lowest three points
    and polished by a root search on the virial trace, which is
    proportional to dE/da.
    """
    from scipy.optimize import brentq

    lo, hi = float(a_range[0]), float(a_range[1])
    if steps < 3:
        raise ConfigurationError("cohesive scan needs at least 3 steps")
    if hi < lo:
        raise ConfigurationError("empty lattice-constant range")
    if hi == lo:
        e, _ = fcc_energy_per_atom(potential, symbol, lo)
        return lo, e
    grid = np.linspace(lo, hi, steps)
    energies = np.array([fcc_energy_per_atom(potential, symbol, a)[0] for a in grid])
    k = int(np.argmin(energies))
    if k == 0 or k == steps - 1:
        warnings.warn(
            f"cohesive scan minimum sits at the range edge (a={grid[k]:.4f} Å); widen the range",
            RuntimeWarning,
            stacklevel=2,
        )
        return float(grid[k]), float(energies[k])
    x0, x1, x2 = grid[k - 1 : k + 2]
    y0, y1, y2 = energies[k - 1 : k + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    a_min = -B / (2 * A) if A > 0 else x1

    def trace(a):
        return fcc_energy_per_atom(potential, symbol, a)[1]

    t0, t2 = trace(x0), trace(x2)
    if t0 < 0 < t2 or t0 > 0 > t2:
        a_min = brentq(trace, x0, x2, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    e_min, _ = fcc_energy_per_atom(potential, symbol, a_min)
    return float(a_min), float(e_min)
