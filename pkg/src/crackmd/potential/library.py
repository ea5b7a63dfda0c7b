"""Generators for setfl tables.

:func:`zhou_alloy_table` tabulates the analytic alloy EAM of Zhou,
Johnson & Wadley (Phys. Rev. B 69, 144113, 2004) for any subset of Ni, Cu
and Al. :func:`closed_form_table` tabulates arbitrary single-element
functions and backs the synthetic tables used in tests.

Both apply a quintic switching function over the last ``taper`` Å so the
density and pair tables reach zero with zero slope and curvature at the
cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from .setfl import EamTable, read_setfl, parse_setfl

BUNDLED = "NiCuAl_zhou04.eam.alloy"


@dataclass(frozen=True)
class ZhouParams:
    re: float
    fe: float
    rhoe: float
    rhos: float
    alpha: float
    beta: float
    A: float
    B: float
    kappa: float
    lam: float
    Fn: tuple[float, float, float, float]
    F: tuple[float, float, float, float]
    eta: float
    Fe: float
    number: int
    mass: float


ZHOU = {
    "Cu": ZhouParams(2.556162, 1.554485, 21.175871, 21.175395, 8.127620, 4.334731,
                     0.396620, 0.548085, 0.308782, 0.756515,
                     (-2.170269, -0.263788, 1.088878, -0.817603),
                     (-2.19, 0.0, 0.561830, -2.100595), 0.310490, -2.186568, 29, 63.546),
    "Ni": ZhouParams(2.488746, 2.007018, 27.562015, 27.930410, 8.383453, 4.471175,
                     0.429046, 0.633531, 0.443599, 0.820658,
                     (-2.693513, -0.076445, 0.241442, -2.375626),
                     (-2.70, 0.0, 0.265390, -0.152856), 0.469000, -2.699486, 28, 58.6934),
    "Al": ZhouParams(2.863924, 1.403115, 20.418205, 23.195740, 6.613165, 3.527021,
                     0.314873, 0.365551, 0.379846, 0.759692,
                     (-2.807602, -0.301435, 1.258562, -1.247604),
                     (-2.83, 0.0, 0.622245, -2.488244), 0.785902, -2.824528, 13, 26.981539),
}


def switch(r: np.ndarray, r_on: float, r_off: float) -> np.ndarray:
    """1 below ``r_on``, 0 above ``r_off``, C² quintic in between."""
    x = np.clip((np.asarray(r, dtype=float) - r_on) / (r_off - r_on), 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def zhou_density(p: ZhouParams, r):
    x = r / p.re
    return p.fe * np.exp(-p.beta * (x - 1.0)) / (1.0 + (x - p.lam) ** 20)


def zhou_pair(p: ZhouParams, r):
    x = r / p.re
    rep = p.A * np.exp(-p.alpha * (x - 1.0)) / (1.0 + (x - p.kappa) ** 20)
    att = p.B * np.exp(-p.beta * (x - 1.0)) / (1.0 + (x - p.lam) ** 20)
    return rep - att


def zhou_embedding(p: ZhouParams, rho):
    rho = np.asarray(rho, dtype=float)
    rhon = 0.85 * p.rhoe
    rhoo = 1.15 * p.rhoe
    out = np.empty_like(rho)
    low = rho < rhon
    mid = (rho >= rhon) & (rho < rhoo)
    high = rho >= rhoo
    t = rho[low] / rhon - 1.0
    out[low] = sum(c * t**k for k, c in enumerate(p.Fn))
    t = rho[mid] / p.rhoe - 1.0
    out[mid] = sum(c * t**k for k, c in enumerate(p.F))
    s = (rho[high] / p.rhos) ** p.eta
    out[high] = p.Fe * (1.0 - np.log(s)) * s
    return out


def zhou_alloy_table(
    elements=("Ni", "Cu", "Al"),
    cutoff: float = 6.0,
    taper: float = 0.5,
    nr: int = 3001,
    nrho: int = 5001,
    rho_max: float | None = None,
) -> EamTable:
    params = [ZHOU[e] for e in elements]
    nel = len(params)
    dr = cutoff / (nr - 1)
    r = np.arange(nr) * dr
    if rho_max is None:
        rho_max = 3.0 * max(p.rhoe for p in params)
    drho = rho_max / (nrho - 1)
    rho = np.arange(nrho) * drho
    sw = switch(r, cutoff - taper, cutoff)

    raw_f = [zhou_density(p, r) for p in params]
    raw_phi = [zhou_pair(p, r) for p in params]
    embedding = np.stack([zhou_embedding(p, rho) for p in params])
    density = np.stack([f * sw for f in raw_f])
    pair = np.empty((nel, nel, nr))
    for i in range(nel):
        for j in range(i + 1):
            if i == j:
                phi = raw_phi[i]
            else:
                phi = 0.5 * (raw_f[j] / raw_f[i] * raw_phi[i] + raw_f[i] / raw_f[j] * raw_phi[j])
            rphi = r * phi * sw
            pair[i, j] = rphi
            pair[j, i] = rphi
    table = EamTable(
        elements=list(elements),
        nrho=nrho,
        drho=drho,
        nr=nr,
        dr=dr,
        cutoff=cutoff,
        embedding=embedding,
        density=density,
        pair_rphi=pair,
        numbers=[p.number for p in params],
        masses=[p.mass for p in params],
        lattice_constants=[float(p.re * np.sqrt(2.0)) for p in params],
        lattice_types=["fcc"] * nel,
        comments=[
            "Zhou-Johnson-Wadley 2004 alloy EAM, tabulated by crackmd",
            f"elements {' '.join(elements)}; quintic switch over [{cutoff - taper:g}, {cutoff:g}] A",
            "pair tables store r*phi(r)",
        ],
    )
    return table.validate()


def closed_form_table(
    embedding: Callable[[np.ndarray], np.ndarray],
    density: Callable[[np.ndarray], np.ndarray],
    pair: Callable[[np.ndarray], np.ndarray],
    cutoff: float = 6.0,
    taper: float = 1.0,
    nr: int = 3001,
    nrho: int = 3001,
    rho_max: float = 30.0,
    element: str = "X",
    mass: float = 58.6934,
    lattice_constant: float = 3.52,
) -> EamTable:
    """Single-element table sampled from closed-form callables.

    ``density`` and ``pair`` are multiplied by :func:`switch`; the pair
    table stores ``r * pair(r)`` (taken as 0 at ``r = 0``).
    """
    dr = cutoff / (nr - 1)
    r = np.arange(nr) * dr
    drho = rho_max / (nrho - 1)
    rho = np.arange(nrho) * drho
    sw = switch(r, cutoff - taper, cutoff)
    rphi = np.zeros(nr)
    rphi[1:] = r[1:] * pair(r[1:]) * sw[1:]
    rphi[0] = rphi[1] if np.isfinite(rphi[1]) else 0.0
    table = EamTable(
        elements=[element],
        nrho=nrho,
        drho=drho,
        nr=nr,
        dr=dr,
        cutoff=cutoff,
        embedding=np.asarray(embedding(rho), dtype=float)[None, :],
        density=(np.asarray(density(r), dtype=float) * sw)[None, :],
        pair_rphi=rphi[None, None, :],
        numbers=[0],
        masses=[mass],
        lattice_constants=[lattice_constant],
        lattice_types=["fcc"],
        comments=["closed-form synthetic EAM", "", ""],
    )
    return table.validate()


def synthetic_table(pair_scale: float = 1.0, **kwargs) -> EamTable:
    """F = -sqrt(rho), rho(r) = exp(-r), phi(r) = pair_scale / r, switched off at the cutoff."""
    return closed_form_table(
        lambda rho: -np.sqrt(rho),
        lambda r: np.exp(-r),
        lambda r: pair_scale / r,
        **kwargs,
    )


def bundled_table_text() -> str:
    return resources.files("crackmd.potential").joinpath("data", BUNDLED).read_text()


def load_bundled() -> EamTable:
    return parse_setfl(bundled_table_text())


def resolve_potential(spec: str, base_dir=None) -> EamTable:
    """Load ``builtin:<name>`` from package data, anything else as a file path."""
    from pathlib import Path

    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1] or BUNDLED
        if name != BUNDLED:
            from ..errors import ConfigurationError

            raise ConfigurationError(f"unknown builtin potential {name!r}; available: {BUNDLED}")
        return load_bundled()
    path = Path(spec)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    return read_setfl(path)
