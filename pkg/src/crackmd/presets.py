"""Scenario presets: pristine, voids and Cu/Al inclusions at two scales.

Full scale is the 40a x 8a x 80a nickel block with an 8a x 5a edge
notch. Desk scale (names ending in ``_small``) halves every length to
20a x 6a x 40a with a 4a x 3a notch, keeping the defect radii so the
defect-to-notch ratios stay comparable.
"""

from __future__ import annotations

from .errors import ConfigurationError
from .io import (
    BUILTIN_POTENTIAL,
    DefectConfig,
    GeometryConfig,
    LoadingConfig,
    OutputConfig,
    PotentialConfig,
    ScenarioConfig,
    ThermostatConfig,
    dump_config,
)

STRAIN_RATE = 6.67e8  # 1/s
TEMPERATURE = 50.0  # K
RADII = (3, 5, 10)  # Å

_SCALES = {
    "full": dict(cells=(40, 8, 80), crack=(8.0, 5.0), standoff=10.0, target=0.24),
    "small": dict(cells=(20, 6, 40), crack=(4.0, 3.0), standoff=5.0, target=0.20),
}


def _defect(name: str, standoff: float) -> DefectConfig | None:
    if name == "pristine":
        return None
    if name.startswith("void_r"):
        return DefectConfig("void", float(name[6:]), standoff=standoff)
    _, symbol, radius = name.split("_")
    return DefectConfig("inclusion", float(radius[1:]), species=symbol.capitalize(), standoff=standoff)


def _base_names() -> list[str]:
    names = ["pristine"] + [f"void_r{r}" for r in RADII]
    for sym in ("cu", "al"):
        names += [f"incl_{sym}_r{r}" for r in RADII]
    return names


FULL_PRESETS = tuple(_base_names())
DESK_PRESETS = tuple(f"{n}_small" for n in FULL_PRESETS)
PRESETS = FULL_PRESETS + DESK_PRESETS


def preset_config(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; valid names: {', '.join(PRESETS)}")
    small = name.endswith("_small")
    base = name[: -len("_small")] if small else name
    scale = _SCALES["small" if small else "full"]
    nx, ny, nz = scale["cells"]
    length, width = scale["crack"]
    cfg = ScenarioConfig(
        geometry=GeometryConfig(nx, ny, nz, species="Ni", crack_length=length, crack_width=width),
        potential=PotentialConfig(BUILTIN_POTENTIAL),
        loading=LoadingConfig(STRAIN_RATE, scale["target"]),
        defect=_defect(base, scale["standoff"]),
        thermostat=ThermostatConfig(TEMPERATURE),
        output=OutputConfig(directory=f"runs/{name}"),
    )
    return cfg.validate()


def preset_text(name: str) -> str:
    return f"# preset {name}\n" + dump_config(preset_config(name))
