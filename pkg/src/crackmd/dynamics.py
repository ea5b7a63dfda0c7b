"""Velocity-Verlet integration, thermostat, FIRE relaxation and mode-I loading."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .analysis.stress import per_atom_stress
from .errors import ConfigurationError, NumericalBlowup, NumericalError
from .io import ThermoRecord
from .lattice import BOTTOM, TOP, AtomSystem
from .neighbors import DEFAULT_SKIN, build as build_neighbors, needs_rebuild
from .potential.eam import EamPotential, EnergyForceVirial
from .units import EV_A3_TO_GPA, FTM2V, KB, MVV2E, PER_S_TO_PER_PS

log = logging.getLogger(__name__)

ForceProvider = Callable[[AtomSystem], EnergyForceVirial]


class ForceField:
    """Force provider that owns a neighbor list and rebuilds it on demand.

    The list is rebuilt when any atom has moved half the skin, when a
    periodic box length changes, or on every call with
    ``rebuild_every_step``.
    """

    def __init__(self, potential: EamPotential, skin: float = DEFAULT_SKIN, rebuild_every_step: bool = False):
        self.potential = potential
        self.skin = float(skin)
        self.rebuild_every_step = rebuild_every_step
        self.nlist = None
        self.rebuilds = 0
        self.evaluations = 0
        self._types = None
        self._types_key = None

    def _stale(self, system: AtomSystem) -> bool:
        nl = self.nlist
        if nl is None or self.rebuild_every_step or nl.n_atoms != system.n:
            return True
        per = system.box.periodic
        if np.any(system.box.lengths[per] != nl.lengths[per]):
            return True
        return needs_rebuild(nl, system.positions)

    def types(self, system: AtomSystem) -> np.ndarray:
        key = (id(system.species), system.species_list)
        if self._types_key != key or len(self._types) != system.n:
            self._types = self.potential.atom_types(system)
            self._types_key = key
        return self._types

    def __call__(self, system: AtomSystem) -> EnergyForceVirial:
        if self._stale(system):
            self.nlist = build_neighbors(system.positions, system.box, self.potential.cutoff, self.skin)
            self.rebuilds += 1
        self.evaluations += 1
        return self.potential.compute_arrays(system.positions, self.types(system), self.nlist)


# ---------------------------------------------------------------------------
# Settings


@dataclass(frozen=True)
class Thermostat:
    temperature: float = 50.0  # K
    tau: float = 0.1  # ps
    scheme: str = "berendsen"  # or "none"
    seed: int = 0  # used to reseed a frozen system

    def __post_init__(self):
        if self.scheme not in ("none", "berendsen"):
            raise ConfigurationError(f"unknown thermostat scheme {self.scheme!r}")
        if self.scheme != "none" and not self.tau > 0:
            raise ConfigurationError("thermostat tau must be positive")
        if self.temperature < 0:
            raise ConfigurationError("thermostat temperature must be non-negative")


@dataclass(frozen=True)
class LoadingProtocol:
    """Constant-velocity tension along z on the frozen layers.

    The top layer moves at ``+v/2`` and the bottom at ``-v/2`` with
    ``v = strain_rate * L_z``. With ``velocity_profile`` the mobile atoms
    start with the matching linear ``v_z(z)`` profile, so loading does not
    launch a stress wave from the layers.
    """

    strain_rate: float  # 1/s
    reference_length: float  # Å, L_z at the start of loading
    velocity_profile: bool = True

    def __post_init__(self):
        if not self.strain_rate > 0:
            raise ConfigurationError("strain rate must be positive")
        if not self.reference_length > 0:
            raise ConfigurationError("reference length must be positive")

    @property
    def rate_per_ps(self) -> float:
        return self.strain_rate * PER_S_TO_PER_PS

    @property
    def velocity(self) -> float:
        """Relative velocity of the two layers, Å/ps."""
        return self.rate_per_ps * self.reference_length

    def strain(self, time_ps: float) -> float:
        return self.rate_per_ps * time_ps


@dataclass(frozen=True)
class MinimizerSettings:
    tolerance: float = 1e-3  # eV/Å
    max_iterations: int = 10000
    dt0: float = 0.001  # ps
    dt_max: float = 0.01  # ps
    n_min: int = 5
    f_inc: float = 1.1
    f_dec: float = 0.5
    alpha0: float = 0.1
    f_alpha: float = 0.99

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigurationError("minimizer tolerance must be positive")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be non-negative")
        if not 0 < self.dt0 <= self.dt_max:
            raise ConfigurationError("need 0 < dt0 <= dt_max")


# ---------------------------------------------------------------------------
# Integration


@dataclass
class Drive:
    """Prescribed motion of the immobile atoms: ``r(t) = r0 + t * v``.

    Positions are recomputed from the anchor each step rather than
    accumulated, so each frozen layer moves rigidly to the last bit.
    """

    anchor: np.ndarray  # (M, 3) positions at t = 0
    velocity: np.ndarray  # (M, 3)
    index: np.ndarray  # (M,) atom indices
    steps: int = 0

    @classmethod
    def from_system(cls, system: AtomSystem) -> "Drive":
        idx = np.nonzero(~system.mobile)[0]
        return cls(system.positions[idx].copy(), system.velocities[idx].copy(), idx)


def _accel(system: AtomSystem, forces: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return forces[mask] * (FTM2V / system.masses[mask])[:, None]


def _check_finite(system: AtomSystem, step: int | None = None) -> None:
    if not (np.all(np.isfinite(system.positions)) and np.all(np.isfinite(system.velocities))):
        bad = np.nonzero(~np.isfinite(system.positions).all(axis=1) | ~np.isfinite(system.velocities).all(axis=1))[0]
        err = NumericalBlowup(
            f"non-finite position or velocity on {len(bad)} atom(s), first index {int(bad[0])}"
            + (f" at step {step}" if step is not None else "")
        )
        err.system = system
        err.step = step
        raise err


def vv_step(
    system: AtomSystem,
    dt: float,
    forces_provider: ForceProvider,
    drive: Drive | None = None,
) -> tuple[AtomSystem, EnergyForceVirial]:
    """Advance one Velocity-Verlet step in place.

    ``system.forces`` must hold the forces of the entering positions.
    Immobile atoms follow their prescribed velocity (from ``drive`` when
    given) and are not integrated. Returns the system and the new force
    result.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    m = system.mobile
    v = system.velocities
    x = system.positions
    v[m] += 0.5 * dt * _accel(system, system.forces, m)
    x[m] += dt * v[m]
    if drive is not None:
        drive.steps += 1
        x[drive.index] = drive.anchor + (drive.steps * dt) * drive.velocity
        v[drive.index] = drive.velocity
    else:
        x[~m] += dt * v[~m]
    try:
        result = forces_provider(system)
    except NumericalError as exc:
        exc.system = system
        raise
    system.forces = result.forces
    v[m] += 0.5 * dt * _accel(system, result.forces, m)
    _check_finite(system)
    return system, result


def apply_thermostat(system: AtomSystem, thermostat: Thermostat, dt: float) -> AtomSystem:
    """Berendsen rescale of the mobile velocities, ``lambda`` clamped to [0.9, 1.1]."""
    if thermostat.scheme == "none":
        return system
    m = system.mobile
    if m.sum() < 2:
        raise ConfigurationError("thermostat needs at least two mobile atoms")
    t_inst = system.temperature()
    if t_inst == 0.0:
        if thermostat.temperature > 0:
            init_velocities(system, thermostat.temperature, thermostat.seed)
        return system
    lam2 = 1.0 + (dt / thermostat.tau) * (thermostat.temperature / t_inst - 1.0)
    lam = math.sqrt(max(lam2, 0.0))
    lam = min(1.1, max(0.9, lam))
    system.velocities[m] *= lam
    return system


def init_velocities(system: AtomSystem, temperature: float, seed: int) -> AtomSystem:
    """Maxwell-Boltzmann velocities on mobile atoms, zero net momentum, exact ``temperature``."""
    if temperature < 0:
        raise ConfigurationError("temperature must be non-negative")
    m = system.mobile
    n_mobile = int(m.sum())
    system.velocities[m] = 0.0
    if temperature == 0 or n_mobile == 0:
        return system
    rng = np.random.default_rng(seed)
    mass = system.masses[m]
    sigma = np.sqrt(KB * temperature / (mass * MVV2E))
    v = rng.standard_normal((n_mobile, 3)) * sigma[:, None]
    if n_mobile > 1:
        v -= (mass[:, None] * v).sum(axis=0) / mass.sum()
    system.velocities[m] = v
    t_now = system.temperature()
    if t_now > 0:
        system.velocities[m] *= math.sqrt(temperature / t_now)
    return system


# ---------------------------------------------------------------------------
# Relaxation


@dataclass
class MinimizeResult:
    system: AtomSystem
    converged: bool
    iterations: int
    energy: float
    max_force: float
    energies: list[float] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max-iterations"


def _max_force(forces: np.ndarray, mask: np.ndarray) -> float:
    f = forces[mask]
    return float(np.sqrt(np.einsum("ij,ij->i", f, f).max())) if len(f) else 0.0


def minimize(system: AtomSystem, settings: MinimizerSettings, forces_provider: ForceProvider) -> MinimizeResult:
    """FIRE relaxation of the mobile atoms; immobile atoms stay put.

    A step that would raise the energy is undone and treated like an
    uphill FIRE step (velocities zeroed, timestep cut), so the energies of
    accepted configurations never increase.
    """
    m = system.mobile
    s = settings
    res = forces_provider(system)
    if not math.isfinite(res.energy):
        raise NumericalError("non-finite energy at the start of minimization")
    system.forces = res.forces
    energy = res.energy
    energies = [energy]
    v = np.zeros((int(m.sum()), 3))
    inv_m = FTM2V / system.masses[m]
    dt, alpha, n_pos = s.dt0, s.alpha0, 0
    it = 0
    fmax = _max_force(system.forces, m)
    while fmax >= s.tolerance and it < s.max_iterations:
        it += 1
        f = system.forces[m]
        power = float(np.sum(f * v))
        if power > 0:
            vnorm = math.sqrt(float(np.sum(v * v)))
            fnorm = math.sqrt(float(np.sum(f * f)))
            v = (1.0 - alpha) * v + alpha * vnorm * f / fnorm
            if n_pos > s.n_min:
                dt = min(dt * s.f_inc, s.dt_max)
                alpha *= s.f_alpha
            n_pos += 1
        else:
            v[:] = 0.0
            dt *= s.f_dec
            alpha = s.alpha0
            n_pos = 0
        v += dt * f * inv_m[:, None]
        old_x = system.positions[m].copy()
        system.positions[m] = old_x + dt * v
        trial = forces_provider(system)
        if not math.isfinite(trial.energy):
            raise NumericalError(f"non-finite energy in minimization at iteration {it}")
        if trial.energy > energy:
            system.positions[m] = old_x
            v[:] = 0.0
            dt *= s.f_dec
            alpha = s.alpha0
            n_pos = 0
            if dt < 1e-10 * s.dt0:
                break
            continue
        energy = trial.energy
        system.forces = trial.forces
        energies.append(energy)
        fmax = _max_force(system.forces, m)
    # leave the provider state consistent with the returned positions
    final = forces_provider(system)
    system.forces = final.forces
    system.velocities[m] = 0.0
    return MinimizeResult(system, fmax < s.tolerance, it, final.energy, fmax, energies)


# ---------------------------------------------------------------------------
# Loading run


@dataclass
class Observer:
    """Callback ``fn(step, system, result)`` run every ``every`` steps."""

    every: int
    fn: Callable[[int, AtomSystem, EnergyForceVirial], None]
    copy: bool = True


def global_sigma_zz(system: AtomSystem, result: EnergyForceVirial) -> float:
    """Box-averaged sigma_zz in GPa over the current box volume."""
    stress = per_atom_stress(system, result)
    return float(np.sum(stress.tensor[:, 2]) / system.box.volume * EV_A3_TO_GPA)


def start_loading(system: AtomSystem, protocol: LoadingProtocol) -> Drive:
    """Set the layer velocities (and optional interior profile); return the drive."""
    v = protocol.velocity
    top = system.group == TOP
    bottom = system.group == BOTTOM
    if not (top.any() and bottom.any()):
        raise ConfigurationError("loading needs tagged top and bottom layers")
    if np.any(system.mobile & (top | bottom)) or np.any(~system.mobile & ~(top | bottom)):
        raise ConfigurationError("only the top and bottom layers may be immobile")
    system.velocities[~system.mobile] = 0.0
    system.velocities[top, 2] = 0.5 * v
    system.velocities[bottom, 2] = -0.5 * v
    if protocol.velocity_profile:
        z = system.positions[:, 2]
        z_top = z[top].mean()
        z_bot = z[bottom].mean()
        mid = 0.5 * (z_top + z_bot)
        m = system.mobile
        system.velocities[m, 2] += v * (z[m] - mid) / (z_top - z_bot)
    return Drive.from_system(system)


def run_loading(
    system: AtomSystem,
    forces_provider: ForceProvider,
    protocol: LoadingProtocol,
    thermostat: Thermostat,
    dt: float,
    n_steps: int,
    observers: Iterable[Observer] = (),
    thermo_every: int = 100,
    crack_probe: Callable[[AtomSystem], float] | None = None,
    progress: Callable[[ThermoRecord], None] | None = None,
) -> tuple[AtomSystem, list[ThermoRecord]]:
    """Drive the frozen layers apart for ``n_steps`` steps.

    Each step is a Velocity-Verlet step followed by the thermostat. The
    box z bounds follow the layers. Thermo records are taken every
    ``thermo_every`` steps and at the final step; ``crack_probe`` (if
    given) supplies the crack length for each record.
    """
    if n_steps < 0:
        raise ConfigurationError("n_steps must be non-negative")
    records: list[ThermoRecord] = []
    if n_steps == 0:
        return system, records
    observers = list(observers)
    drive = start_loading(system, protocol)
    half_v = 0.5 * protocol.velocity
    lo0 = np.array(system.box.lower, dtype=float)
    hi0 = np.array(system.box.upper, dtype=float)
    result = forces_provider(system)
    system.forces = result.forces
    for step in range(1, n_steps + 1):
        try:
            _, result = vv_step(system, dt, forces_provider, drive)
        except NumericalError as exc:
            exc.step = step
            exc.system = system
            raise
        t = step * dt
        lo, hi = lo0.copy(), hi0.copy()
        lo[2] -= half_v * t
        hi[2] += half_v * t
        system.box = system.box.with_bounds(lo, hi)
        apply_thermostat(system, thermostat, dt)
        for obs in observers:
            if step % obs.every == 0:
                obs.fn(step, system.copy() if obs.copy else system, result)
        if step % thermo_every == 0 or step == n_steps:
            ke = system.kinetic_energy()
            rec = ThermoRecord(
                step=step,
                time=t,
                strain=protocol.strain(t),
                temperature=system.temperature(),
                potential_energy=result.energy,
                kinetic_energy=ke,
                sigma_zz=global_sigma_zz(system, result),
                crack_length=crack_probe(system) if crack_probe is not None else float("nan"),
            )
            records.append(rec)
            if progress is not None:
                progress(rec)
    return system, records
