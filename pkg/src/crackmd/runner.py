"""The relax-then-load pipeline behind ``crackmd run``."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .analysis import (
    NO_YIELD,
    classify_structure,
    crack_length,
    global_stress_strain,
    per_atom_stress,
    von_mises,
)
from .dynamics import (
    ForceField,
    LoadingProtocol,
    MinimizerSettings,
    Observer,
    Thermostat,
    init_velocities,
    minimize,
    run_loading,
)
from .errors import AnalysisError
from .io import ScenarioConfig, ThermoRecord, dump_config, write_dump, write_thermo
from .lattice import AtomSystem, build_model
from .potential import EamPotential, resolve_potential

log = logging.getLogger(__name__)

DUMP_NAME = "dump.lammpstrj"
THERMO_NAME = "thermo.csv"
SUMMARY_NAME = "summary.json"
BLOWUP_NAME = "blowup.lammpstrj"


@dataclass
class RunSummary:
    n_atoms: int
    n_steps: int
    relax_converged: bool
    relax_iterations: int
    relax_energy: float
    critical_stress_GPa: float | None
    critical_strain: float | None
    yield_status: str
    initial_crack_length_A: float
    final_crack_length_A: float | None
    fracture_strain: float | None
    wall_time_s: float
    dry_run: bool = False

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")


def write_frame(system: AtomSystem, result, path: Path, step: int) -> None:
    labels = classify_structure(system)
    vm = von_mises(per_atom_stress(system, result))
    write_dump(system, vm, labels.structure, labels.coordination, path, step)


def measure_crack(system: AtomSystem) -> float:
    try:
        return crack_length(system, classify_structure(system)).length
    except AnalysisError:
        return float("nan")


def fracture_strain(records: list[ThermoRecord], severed_length: float) -> float | None:
    for rec in records:
        if math.isfinite(rec.crack_length) and rec.crack_length >= severed_length:
            return rec.strain
    return None


def run_scenario(
    cfg: ScenarioConfig,
    output_dir: str | Path,
    threads: int = 1,
    dry_run: bool = False,
    base_dir: str | Path | None = None,
    progress: Callable[[ThermoRecord], None] | None = None,
    n_steps: int | None = None,
) -> RunSummary:
    """Build, relax and load one scenario, writing all outputs to ``output_dir``.

    ``n_steps`` overrides the step count derived from the target strain.
    """
    started = time.perf_counter()
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(dump_config(cfg))
    dump_path = out / DUMP_NAME
    if dump_path.exists():
        dump_path.unlink()

    table = resolve_potential(cfg.potential.file, base_dir)
    potential = EamPotential(table, threads=threads)
    system = build_model(cfg.model_spec())
    ff = ForceField(potential, skin=cfg.potential.skin)
    result = ff(system)
    system.forces = result.forces
    initial_length = measure_crack(system)
    log.info("built %d atoms, initial crack length %.3f Å", system.n, initial_length)
    steps = cfg.n_steps if n_steps is None else int(n_steps)

    if dry_run:
        write_frame(system, result, dump_path, 0)
        summary = RunSummary(system.n, 0, False, 0, result.energy, None, None, "dry run",
                             initial_length, None, None, time.perf_counter() - started, dry_run=True)
        summary.write(out / SUMMARY_NAME)
        return summary

    loading = cfg.loading
    relax = minimize(
        system,
        MinimizerSettings(tolerance=loading.relax_tolerance, max_iterations=loading.relax_max_iterations),
        ff,
    )
    log.info("relaxation %s after %d iterations, E = %.6f eV", relax.status, relax.iterations, relax.energy)
    result = ff(system)
    write_frame(system, result, dump_path, 0)

    init_velocities(system, cfg.thermostat.temperature, loading.seed)
    th = cfg.thermostat
    scheme = th.scheme if th.during_loading else "none"
    thermostat = Thermostat(th.temperature, th.tau, scheme, seed=loading.seed)
    protocol = LoadingProtocol(loading.strain_rate, float(system.box.lengths[2]))

    observers = []
    if cfg.output.dump_every > 0:
        observers.append(Observer(
            cfg.output.dump_every,
            lambda step, snap, res: write_frame(snap, res, dump_path, step),
            copy=False,
        ))

    thermo_path = out / THERMO_NAME
    write_thermo([], thermo_path)

    def on_record(rec: ThermoRecord) -> None:
        # append as we go so an interrupted run keeps its series
        with open(thermo_path, "a") as fh:
            fh.write(",".join(rec.row()) + "\n")
        if progress is not None:
            progress(rec)

    x_max = float(system.positions[:, 0].max())
    severed = x_max - system.notch.root_x - 0.5 * system.lattice_constant
    try:
        system, records = run_loading(
            system, ff, protocol, thermostat, loading.dt, steps, observers,
            thermo_every=cfg.output.thermo_every, crack_probe=measure_crack, progress=on_record,
        )
    except Exception as exc:
        snap = getattr(exc, "system", None)
        if snap is not None:
            _write_blowup(snap, out / BLOWUP_NAME, getattr(exc, "step", -1) or -1)
        raise
    write_thermo(records, thermo_path)

    if records:
        curve = global_stress_strain(records)
        crit_s, crit_e, status = curve.critical_stress, curve.critical_strain, curve.status
        finite = [r.crack_length for r in records if math.isfinite(r.crack_length)]
        final = finite[-1] if finite else None
    else:
        crit_s, crit_e, status, final = None, None, NO_YIELD, None
    summary = RunSummary(
        system.n, steps, relax.converged, relax.iterations, relax.energy, crit_s, crit_e, status,
        initial_length, final, fracture_strain(records, severed), time.perf_counter() - started,
    )
    summary.write(out / SUMMARY_NAME)
    return summary


def _write_blowup(system: AtomSystem, path: Path, step: int) -> None:
    """Diagnostic frame: positions as they are, zero stress and labels."""
    n = system.n
    zeros = np.zeros(n)
    if path.exists():
        path.unlink()
    write_dump(system, zeros, zeros.astype(int), zeros.astype(int), path, step)
