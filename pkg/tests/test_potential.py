import math
import warnings

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from crackmd.errors import ConfigurationError, NumericalRangeError, ParseError
from crackmd.geometry import OPEN, PERIODIC, SimBox
from crackmd.lattice import AtomSystem, Species
from crackmd.neighbors import build
from crackmd.potential import (
    EamPotential,
    Spline1D,
    ValidationError,
    cohesive_scan,
    parse_setfl,
    reference_energy,
    synthetic_table,
    write_setfl,
)
from crackmd.potential.eam import fcc_energy_per_atom

from oracles import fcc_shell_vectors, fd_forces, force_relative_error, quintic_switch

# ---------------------------------------------------------------- setfl


def closed_form_setfl(nr=501, nrho=401, cutoff=5.0, drho=0.05):
    """Independent setfl writer for F=-sqrt(rho), rho=exp(-r), phi=1/r."""
    dr = cutoff / (nr - 1)
    r = np.arange(nr) * dr
    rho = np.arange(nrho) * drho
    sw = quintic_switch(r, cutoff - 1, cutoff)
    dens = np.exp(-r) * sw
    rphi = np.where(r > 0, sw, sw[1])  # r * (1/r) * switch
    lines = ["synthetic", "closed form", "oracle", "1 X",
             f"{nrho} {drho!r} {nr} {dr!r} {cutoff!r}", "0 58.6934 3.52 fcc"]
    for block in (-np.sqrt(rho), dens, rphi):
        lines += [" ".join(repr(float(v)) for v in block[k:k + 7]) for k in range(0, len(block), 7)]
    return "\n".join(lines) + "\n", (-np.sqrt(rho), dens, rphi)


def test_setfl_round_trip_matches_generator():
    text, (emb, dens, rphi) = closed_form_setfl()
    table = parse_setfl(text)
    np.testing.assert_allclose(table.embedding[0], emb, rtol=1e-12, atol=0)
    np.testing.assert_allclose(table.density[0], dens, rtol=1e-12, atol=0)
    np.testing.assert_allclose(table.pair_rphi[0, 0], rphi, rtol=1e-12, atol=0)
    again = parse_setfl(write_setfl(table))
    for name in ("embedding", "density", "pair_rphi"):
        np.testing.assert_allclose(getattr(again, name), getattr(table, name), rtol=1e-12, atol=0)
    assert (again.nr, again.dr, again.nrho, again.drho, again.cutoff) == (
        table.nr, table.dr, table.nrho, table.drho, table.cutoff)


def test_short_grid_is_validation_error():
    text, _ = closed_form_setfl()
    lines = text.splitlines()
    lines[4] = "401 0.05 501 0.01 5.5"  # 501 * 0.01 = 5.01 < 5.5
    with pytest.raises(ValidationError):
        parse_setfl("\n".join(lines))


def test_truncated_table_names_section():
    text, _ = closed_form_setfl()
    lines = text.splitlines()
    with pytest.raises(ParseError, match="X"):
        parse_setfl("\n".join(lines[: len(lines) // 2]))


def test_non_numeric_token_reports_line():
    text, _ = closed_form_setfl()
    lines = text.splitlines()
    lines[9] = "abc " + lines[9]
    with pytest.raises(ParseError, match="line 10"):
        parse_setfl("\n".join(lines))


def test_bundled_three_elements_six_pairs(bundled):
    assert bundled.elements == ["Ni", "Cu", "Al"]
    assert len(bundled.pair_tables()) == 6 == 3 * 4 // 2


# ---------------------------------------------------------------- spline


def test_spline_hits_knots_and_is_c1():
    x = np.arange(50) * 0.1
    y = np.sin(x)
    s = Spline1D(y, 0.1)
    np.testing.assert_allclose(s(s.knots), y, atol=1e-14)
    inner = s.knots[1:-1]
    eps = 1e-9
    np.testing.assert_allclose(s(inner - eps, 1), s(inner + eps, 1), atol=1e-6)
    # interpolation error of a natural spline on a smooth function
    xm = x[5:-5] + 0.05
    np.testing.assert_allclose(s(xm), np.sin(xm), atol=1e-5)
    np.testing.assert_allclose(s(xm, 1), np.cos(xm), atol=1e-4)


def test_spline_derivative_matches_difference_quotient():
    s = Spline1D(np.exp(-np.arange(30) * 0.2), 0.2)
    xs = np.linspace(0.1, 5.5, 40)
    h = 1e-6
    np.testing.assert_allclose(s(xs, 1), (s(xs + h) - s(xs - h)) / (2 * h), atol=1e-7)


def test_spline_rejects_negative_argument():
    with pytest.raises(ValueError):
        Spline1D(np.ones(4), 1.0)(-0.1)


# ---------------------------------------------------------------- eam


def open_system(positions, symbol="Ni"):
    pos = np.asarray(positions, float)
    box = SimBox((-50, -50, -50), (50, 50, 50))
    return AtomSystem(pos, np.zeros(len(pos), int), (Species(symbol, 58.6934, 3.52),), box)


def embedding_at_zero(table, e=0):
    # rho = 0 is the first knot, where the spline equals the tabulated value
    return table.embedding[e, 0]


def test_two_atoms_at_cutoff_only_embed(ni_potential, bundled):
    rc = bundled.cutoff
    s = open_system([[0, 0, 0], [rc, 0, 0]])
    nl = build(s.positions, s.box, rc, 1.0)
    assert nl.n_pairs == 1
    res = ni_potential.compute(s, nl)
    assert res.energy == pytest.approx(2 * embedding_at_zero(bundled), abs=1e-12)
    np.testing.assert_array_equal(res.forces, 0.0)


def test_single_atom(ni_potential, bundled):
    s = open_system([[1, 2, 3]])
    res = ni_potential.compute(s, build(s.positions, s.box, bundled.cutoff))
    assert res.energy == pytest.approx(embedding_at_zero(bundled), abs=1e-14)
    np.testing.assert_array_equal(res.forces, 0.0)
    np.testing.assert_array_equal(res.virial, 0.0)


def test_pair_below_first_knot_is_range_error(ni_potential, bundled):
    s = open_system([[0, 0, 0], [0.5 * bundled.dr, 0, 0]])
    with pytest.raises(NumericalRangeError, match="atoms 0 and 1"):
        ni_potential.compute(s, build(s.positions, s.box, bundled.cutoff))


def test_missing_species_is_configuration_error(ni_potential, bundled):
    s = open_system([[0, 0, 0]], symbol="Fe")
    with pytest.raises(ConfigurationError):
        ni_potential.compute(s, build(s.positions, s.box, bundled.cutoff))


def perturbed_block(ni_block, seed, sigma=0.05):
    s = ni_block()
    s.positions += np.random.default_rng(seed).normal(0, sigma, s.positions.shape)
    return s


def test_forces_match_finite_differences(ni_potential, ni_block):
    s = perturbed_block(ni_block, 7)
    res = ni_potential.compute(s, build(s.positions, s.box, ni_potential.cutoff))
    fd = fd_forces(ni_potential, s)
    assert force_relative_error(res.forces, fd, floor=1e-3).max() < 1e-6


def test_alloy_forces_match_finite_differences(bundled, ni_block):
    pot = EamPotential(bundled)
    s = perturbed_block(ni_block, 3, 0.1)
    cu, al = Species("Cu", 63.546, 3.61), Species("Al", 26.98, 4.05)
    s.species_list = s.species_list + (cu, al)
    s.species = np.random.default_rng(4).integers(0, 3, s.n)
    res = pot.compute(s, build(s.positions, s.box, pot.cutoff))
    fd = fd_forces(pot, s)
    assert force_relative_error(res.forces, fd, floor=1e-3).max() < 1e-6


def test_energy_matches_reference_evaluator(ni_potential, ni_block):
    s = perturbed_block(ni_block, 11)
    res = ni_potential.compute(s, build(s.positions, s.box, ni_potential.cutoff))
    ref, ref_virial = reference_energy(ni_potential, s.positions, ni_potential.atom_types(s), s.box)
    assert abs(res.energy - ref) <= 1e-10 * abs(ref)
    np.testing.assert_allclose(res.total_virial, ref_virial, rtol=1e-9, atol=1e-9)


def test_open_boundary_energy_matches_reference(ni_potential, ni_a):
    from scipy.spatial import cKDTree

    # random sequential deposition keeps atoms at physical separations
    pts = []
    tree_pts = np.random.default_rng(5).uniform(0, 14, (4000, 3))
    for p in tree_pts:
        if not pts or cKDTree(pts).query(p)[0] > 2.2:
            pts.append(p)
    s = open_system(pts)
    res = ni_potential.compute(s, build(s.positions, s.box, ni_potential.cutoff))
    ref, _ = reference_energy(ni_potential, s.positions, ni_potential.atom_types(s), s.box)
    assert abs(res.energy - ref) <= 1e-10 * abs(ref)


def test_invariances(ni_potential, ni_block):
    s = perturbed_block(ni_block, 5)
    e0 = ni_potential.compute(s, build(s.positions, s.box, ni_potential.cutoff))
    assert abs(e0.forces.sum(axis=0)).max() < 1e-10
    assert math.fsum(e0.per_atom_energy) == pytest.approx(e0.energy, rel=1e-14)
    # translation in a periodic box
    t = s.copy()
    t.positions += np.array([0.37, -1.1, 2.9])
    e1 = ni_potential.compute(t, build(t.positions, t.box, ni_potential.cutoff))
    assert e1.energy == pytest.approx(e0.energy, rel=1e-12)
    np.testing.assert_allclose(e1.forces, e0.forces, atol=1e-10)
    # rotation of an open cluster
    c = open_system(s.positions[:80] - s.positions[:80].mean(axis=0))
    ec = ni_potential.compute(c, build(c.positions, c.box, ni_potential.cutoff))
    from scipy.spatial.transform import Rotation

    R = Rotation.from_euler("xyz", [0.3, -1.2, 2.0]).as_matrix()
    r = open_system(c.positions @ R.T)
    er = ni_potential.compute(r, build(r.positions, r.box, ni_potential.cutoff))
    assert er.energy == pytest.approx(ec.energy, rel=1e-12)
    np.testing.assert_allclose(er.forces, ec.forces @ R.T, atol=1e-10)


def test_threaded_kernel_matches_serial(bundled, ni_block):
    s = perturbed_block(ni_block, 9)
    nl = build(s.positions, s.box, bundled.cutoff)
    serial = EamPotential(bundled).compute(s, nl)
    threaded = EamPotential(bundled, threads=2).compute(s, nl)
    assert threaded.energy == pytest.approx(serial.energy, rel=1e-13)
    np.testing.assert_allclose(threaded.forces, serial.forces, atol=1e-11)
    np.testing.assert_allclose(threaded.virial, serial.virial, atol=1e-11)


# ---------------------------------------------------------------- cohesive scan

PAIR_SCALE = 0.1


def closed_form_fcc_energy(a, cutoff=6.0, taper=1.0):
    """Per-atom FCC energy of the synthetic potential from exact lattice sums."""
    r = fcc_shell_vectors(a, cutoff)
    sw = quintic_switch(r, cutoff - taper, cutoff)
    rho = np.sum(np.exp(-r) * sw)
    pair = 0.5 * np.sum(PAIR_SCALE / r * sw)
    return -np.sqrt(rho) + pair


def test_cohesive_scan_matches_closed_form_minimum():
    pot = EamPotential(synthetic_table(pair_scale=PAIR_SCALE))
    oracle = minimize_scalar(closed_form_fcc_energy, bounds=(3.3, 4.2), method="bounded",
                             options={"xatol": 1e-10})
    a_min, e_min = cohesive_scan(pot, "X", (3.3, 4.2), 19)
    assert abs(a_min - oracle.x) < 1e-4
    assert e_min == pytest.approx(oracle.fun, abs=1e-6)


def test_cohesive_scan_recovers_ni_header(ni_potential, ni_a):
    a_min, _ = cohesive_scan(ni_potential, "Ni", (3.3, 3.7), 21)
    assert abs(a_min - ni_a) / ni_a < 0.005


def test_cohesive_scan_degenerate_range(ni_potential):
    a, e = cohesive_scan(ni_potential, "Ni", (3.52, 3.52))
    assert a == 3.52
    assert e == fcc_energy_per_atom(ni_potential, "Ni", 3.52)[0]


def test_cohesive_scan_edge_minimum_warns(ni_potential):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        a, _ = cohesive_scan(ni_potential, "Ni", (3.0, 3.3), 5)
    assert a == 3.3
    assert any("range edge" in str(w.message) for w in caught)
