"""Scenario configuration, trajectory dumps and thermo CSV files.

Config text is sectioned ``key = value``::

    # comment
    [geometry]
    nx = 20
    ...

Sections: ``[geometry]``, ``[potential]``, ``[loading]``, ``[thermostat]``,
``[output]`` and at most one defect section: ``[void]``, ``[inclusion]``,
or the generic ``[defect]`` with a ``kind`` key. Unknown sections or keys are rejected with their line
number. See ``docs/formats.md`` for every key and default.
"""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, ParseError
from .lattice import SPECIES, AtomSystem, DefectSpec, ModelSpec

BUILTIN_POTENTIAL = "builtin:NiCuAl_zhou04.eam.alloy"


# ---------------------------------------------------------------------------
# Config schema


@dataclass
class GeometryConfig:
    nx: int
    ny: int
    nz: int
    species: str = "Ni"
    lattice_constant: float | None = None
    crack_length: float = 8.0
    crack_width: float = 5.0
    boundary_layer: float = 1.0
    periodic_y: bool = False


@dataclass
class DefectConfig:
    kind: str
    radius: float
    species: str | None = None
    center_x: float | None = None
    center_z: float | None = None
    standoff: float = 10.0


@dataclass
class PotentialConfig:
    file: str
    skin: float = 1.0


@dataclass
class LoadingConfig:
    strain_rate: float
    target_strain: float
    dt: float = 0.001
    seed: int = 20200101
    relax_tolerance: float = 1e-3
    relax_max_iterations: int = 10000


@dataclass
class ThermostatConfig:
    temperature: float = 50.0
    tau: float = 0.1
    scheme: str = "berendsen"
    during_loading: bool = True


@dataclass
class OutputConfig:
    directory: str = "output"
    dump_every: int = 5000
    thermo_every: int = 100


@dataclass
class ScenarioConfig:
    geometry: GeometryConfig
    potential: PotentialConfig
    loading: LoadingConfig
    defect: DefectConfig | None = None
    thermostat: ThermostatConfig = field(default_factory=ThermostatConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def model_spec(self) -> ModelSpec:
        g = self.geometry
        defect = None
        if self.defect is not None:
            d = self.defect
            defect = DefectSpec(d.kind, d.radius, d.species, d.center_x, d.center_z, d.standoff)
        return ModelSpec(
            cells=(g.nx, g.ny, g.nz),
            host=g.species,
            lattice_constant=g.lattice_constant,
            crack_length=g.crack_length,
            crack_width=g.crack_width,
            boundary_layer=g.boundary_layer,
            periodic_y=g.periodic_y,
            defect=defect,
        )

    @property
    def n_steps(self) -> int:
        """Loading steps needed to reach the target strain."""
        rate_per_ps = self.loading.strain_rate * 1e-12
        return int(math.ceil(self.loading.target_strain / (rate_per_ps * self.loading.dt) - 1e-9))

    def validate(self) -> "ScenarioConfig":
        g, l, t = self.geometry, self.loading, self.thermostat
        for name in ("nx", "ny", "nz"):
            if getattr(g, name) < 1:
                raise ConfigurationError(f"geometry.{name} must be >= 1")
        if g.species not in SPECIES:
            raise ConfigurationError(f"geometry.species {g.species!r} is not a registered species")
        if g.lattice_constant is not None and not g.lattice_constant > 0:
            raise ConfigurationError("geometry.lattice_constant must be positive")
        if not (g.crack_length > 0 and g.crack_width > 0):
            raise ConfigurationError("geometry.crack_length and crack_width must be positive")
        if not 0 < g.boundary_layer < g.nz / 2:
            raise ConfigurationError("geometry.boundary_layer must lie in (0, nz/2)")
        if not l.strain_rate > 0:
            raise ConfigurationError("loading.strain_rate must be > 0")
        if not 0 < l.target_strain <= 0.5:
            raise ConfigurationError("loading.target_strain must lie in (0, 0.5]")
        if not 0 < l.dt <= 0.01:
            raise ConfigurationError("loading.dt must lie in (0, 0.01] ps")
        if not l.relax_tolerance > 0 or l.relax_max_iterations < 0:
            raise ConfigurationError("loading.relax_tolerance must be > 0 and relax_max_iterations >= 0")
        if self.potential.skin < 0:
            raise ConfigurationError("potential.skin must be >= 0")
        if t.scheme not in ("none", "berendsen"):
            raise ConfigurationError(f"thermostat.scheme must be none or berendsen, got {t.scheme!r}")
        if t.temperature < 0:
            raise ConfigurationError("thermostat.temperature must be >= 0")
        if t.scheme != "none" and not t.tau > 0:
            raise ConfigurationError("thermostat.tau must be > 0")
        o = self.output
        if o.dump_every < 0 or o.thermo_every < 1:
            raise ConfigurationError("output.dump_every must be >= 0 and thermo_every >= 1")
        if self.defect is not None:
            d = self.defect
            if d.kind not in ("void", "inclusion"):
                raise ConfigurationError(f"unknown defect kind {d.kind!r}")
            if not d.radius > 0:
                raise ConfigurationError(f"{d.kind}.radius must be > 0")
            if d.kind == "inclusion":
                if d.species is None:
                    raise ConfigurationError("inclusion.species is required")
                if d.species not in SPECIES:
                    raise ConfigurationError(f"inclusion.species {d.species!r} is not a registered species")
        return self

    def species_used(self) -> list[str]:
        out = [self.geometry.species]
        if self.defect is not None and self.defect.kind == "inclusion":
            out.append(self.defect.species)
        return out


_SECTIONS = {
    "geometry": GeometryConfig,
    "void": DefectConfig,
    "inclusion": DefectConfig,
    "defect": DefectConfig,
    "potential": PotentialConfig,
    "loading": LoadingConfig,
    "thermostat": ThermostatConfig,
    "output": OutputConfig,
}
_ORDER = ("geometry", "void", "inclusion", "potential", "loading", "thermostat", "output")
_REQUIRED = ("geometry", "potential", "loading")


def _keys(section: str) -> dict[str, object]:
    cls = _SECTIONS[section]
    out = {f.name: f for f in fields(cls)}
    if cls is DefectConfig and section != "defect":
        out.pop("kind")
        if section == "void":
            out.pop("species")
    return out


def _coerce(text: str, annotation: str, key: str, line: int):
    ann = str(annotation)
    optional = "None" in ann
    if optional and text.lower() == "none":
        return None
    try:
        if ann.startswith("int"):
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        if ann.startswith("float"):
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if ann.startswith("bool"):
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
    except ValueError:
        raise ParseError(f"invalid value {text!r} for key {key!r}", line) from None
    return text


def load_config(text: str, check_potential: bool = False, base_dir: str | Path | None = None) -> ScenarioConfig:
    """Parse and validate config text.

    With ``check_potential`` the potential file must exist and list every
    species the scenario uses.
    """
    sections: dict[str, dict[str, object]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {raw.strip()!r}", lineno)
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ParseError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ParseError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {raw.strip()!r}", lineno)
        if current is None:
            raise ParseError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        allowed = _keys(current)
        if key not in allowed:
            raise ParseError(f"unknown key {key!r} in [{current}]", lineno)
        if key in sections[current]:
            raise ParseError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current][key] = _coerce(value, allowed[key].type, key, lineno)

    for name in _REQUIRED:
        if name not in sections:
            raise ConfigurationError(f"missing required section [{name}]")
    present = [k for k in ("void", "inclusion", "defect") if k in sections]
    if len(present) > 1:
        raise ConfigurationError("a scenario may contain a void or an inclusion, not both")

    def make(name, cls, **extra):
        try:
            return cls(**extra, **sections[name])
        except TypeError as exc:
            missing = [
                f.name for f in fields(cls)
                if f.name not in sections[name] and f.name not in extra
                and f.default is MISSING and f.default_factory is MISSING
            ]
            raise ConfigurationError(f"[{name}] is missing required keys: {', '.join(missing)}") from exc

    defect = None
    for kind in ("void", "inclusion"):
        if kind in sections:
            defect = make(kind, DefectConfig, kind=kind)
    if "defect" in sections:
        defect = make("defect", DefectConfig)
    cfg = ScenarioConfig(
        geometry=make("geometry", GeometryConfig),
        potential=make("potential", PotentialConfig),
        loading=make("loading", LoadingConfig),
        defect=defect,
        thermostat=make("thermostat", ThermostatConfig) if "thermostat" in sections else ThermostatConfig(),
        output=make("output", OutputConfig) if "output" in sections else OutputConfig(),
    )
    cfg.validate()
    if check_potential:
        elements = potential_elements(cfg.potential.file, base_dir)
        for sym in cfg.species_used():
            if sym not in elements:
                raise ConfigurationError(
                    f"species {sym!r} missing from potential {cfg.potential.file} (has {', '.join(elements)})"
                )
    return cfg


def potential_elements(spec: str, base_dir: str | Path | None = None) -> list[str]:
    """Element symbols from line 4 of a setfl file (or the bundled table)."""
    if spec.startswith("builtin:"):
        from .potential.library import bundled_table_text

        head = bundled_table_text().splitlines()[3]
    else:
        path = Path(spec)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            with open(path) as fh:
                lines = [fh.readline() for _ in range(4)]
        except FileNotFoundError:
            raise ConfigurationError(f"potential file not found: {path}") from None
        head = lines[3]
    return head.split()[1:]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ScenarioConfig) -> str:
    """Canonical text: every key written, defaults included, comments dropped."""
    out = []
    blocks = {
        "geometry": cfg.geometry,
        "potential": cfg.potential,
        "loading": cfg.loading,
        "thermostat": cfg.thermostat,
        "output": cfg.output,
    }
    if cfg.defect is not None:
        blocks[cfg.defect.kind] = cfg.defect
    for name in _ORDER:
        if name not in blocks:
            continue
        out.append(f"[{name}]")
        data = asdict(blocks[name])
        for key in _keys(name):
            value = data[key]
            if value is None:
                continue
            out.append(f"{key} = {_fmt(value)}")
        out.append("")
    return "\n".join(out)


def read_config(path: str | Path, check_potential: bool = True) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    return load_config(text, check_potential=check_potential, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Thermo series


THERMO_HEADER = ("step", "time_ps", "strain", "temp_K", "pe_eV", "ke_eV", "sigma_zz_GPa", "crack_len_A")


@dataclass
class ThermoRecord:
    step: int
    time: float
    strain: float
    temperature: float
    potential_energy: float
    kinetic_energy: float
    sigma_zz: float
    crack_length: float = float("nan")

    def row(self) -> list[str]:
        return [str(self.step)] + [
            repr(float(v))
            for v in (self.time, self.strain, self.temperature, self.potential_energy,
                      self.kinetic_energy, self.sigma_zz, self.crack_length)
        ]


def write_thermo(records: Iterable[ThermoRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(THERMO_HEADER)
        for rec in records:
            writer.writerow(rec.row())


def read_thermo(path: str | Path) -> list[ThermoRecord]:
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty thermo file (no header)", 1)
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != THERMO_HEADER:
        raise ParseError(f"unexpected thermo header {lines[0]!r}", 1)
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(THERMO_HEADER):
            raise ParseError(f"expected {len(THERMO_HEADER)} columns, got {len(parts)}", lineno)
        try:
            step = int(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        out.append(ThermoRecord(step, *vals))
    return out


# ---------------------------------------------------------------------------
# Dumps


def write_dump(
    system: AtomSystem,
    von_mises: np.ndarray,
    cna: np.ndarray,
    coordination: np.ndarray,
    path: str | Path,
    step: int,
) -> None:
    """Append one LAMMPS-style text frame to ``path``."""
    n = system.n
    if not (len(von_mises) == len(cna) == len(coordination) == n):
        raise ValueError("per-atom arrays do not match the atom count")
    box = system.box
    flags = " ".join("pp" if b == "periodic" else "ff" for b in box.boundary)
    buf = _io.StringIO()
    buf.write(f"ITEM: TIMESTEP\n{int(step)}\nITEM: NUMBER OF ATOMS\n{n}\n")
    buf.write(f"ITEM: BOX BOUNDS {flags}\n")
    for lo, hi in zip(box.lower, box.upper):
        buf.write(f"{lo:.8g} {hi:.8g}\n")
    buf.write("ITEM: ATOMS id type x y z c_vm c_cna c_coord\n")
    pos = system.positions
    types = system.species + 1
    for i in range(n):
        buf.write(
            f"{i + 1} {types[i]} {pos[i, 0]:.8g} {pos[i, 1]:.8g} {pos[i, 2]:.8g} "
            f"{von_mises[i]:.8g} {int(cna[i])} {int(coordination[i])}\n"
        )
    with open(path, "a") as fh:
        fh.write(buf.getvalue())


@dataclass
class DumpFrame:
    step: int
    bounds: np.ndarray  # (3, 2)
    boundary: tuple[str, str, str]
    columns: dict[str, np.ndarray]

    @property
    def n(self) -> int:
        return len(self.columns["id"])

    @property
    def positions(self) -> np.ndarray:
        return np.stack([self.columns["x"], self.columns["y"], self.columns["z"]], axis=1)


def read_dump(path: str | Path) -> list[DumpFrame]:
    frames = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    k = 0
    total = len(lines)

    def expect(prefix: str, at: int) -> None:
        if at >= total or not lines[at].startswith(prefix):
            got = lines[at] if at < total else "end of file"
            raise ParseError(f"expected {prefix!r}, got {got!r}", at + 1)

    while k < total:
        if not lines[k].strip():
            k += 1
            continue
        expect("ITEM: TIMESTEP", k)
        try:
            step = int(lines[k + 1])
            expect("ITEM: NUMBER OF ATOMS", k + 2)
            n = int(lines[k + 3])
        except (ValueError, IndexError):
            raise ParseError("malformed frame header", k + 2) from None
        expect("ITEM: BOX BOUNDS", k + 4)
        flags = lines[k + 4].split()[3:]
        boundary = tuple("periodic" if f == "pp" else "open" for f in flags) or ("open",) * 3
        try:
            bounds = np.array([[float(v) for v in lines[k + 5 + a].split()[:2]] for a in range(3)])
        except (ValueError, IndexError):
            raise ParseError("malformed box bounds", k + 6) from None
        expect("ITEM: ATOMS", k + 8)
        names = lines[k + 8].split()[2:]
        body = lines[k + 9 : k + 9 + n]
        if len(body) != n:
            raise ParseError(f"frame at step {step} truncated: {len(body)} of {n} atom lines", total)
        try:
            data = np.array([[float(v) for v in row.split()] for row in body]).reshape(n, len(names))
        except ValueError:
            for off, row in enumerate(body):
                parts = row.split()
                try:
                    [float(v) for v in parts]
                except ValueError:
                    raise ParseError(f"non-numeric atom line {row!r}", k + 10 + off) from None
                if len(parts) != len(names):
                    raise ParseError(f"expected {len(names)} columns, got {len(parts)}", k + 10 + off)
            raise
        cols = {}
        for c, name in enumerate(names):
            col = data[:, c]
            cols[name] = col.astype(np.int64) if name in ("id", "type", "c_cna", "c_coord") else col
        frames.append(DumpFrame(step, bounds, boundary, cols))
        k += 9 + n
    return frames


def split_frames(text: str) -> list[str]:
    """Split concatenated dump text on ``ITEM: TIMESTEP`` markers."""
    parts = text.split("ITEM: TIMESTEP\n")
    return ["ITEM: TIMESTEP\n" + p for p in parts if p.strip()]


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
