import numpy as np
import pytest
from scipy.spatial.distance import pdist

from crackmd.errors import ConfigurationError
from crackmd.geometry import Box, CylinderY, Empty
from crackmd.lattice import (
    BOTTOM,
    INTERIOR,
    TOP,
    DefectSpec,
    ModelSpec,
    build_fcc,
    build_model,
    carve,
    get_species,
    substitute,
    tag_boundaries,
)

NI = get_species("Ni")


def brute_sites(cells, a):
    """Independent FCC site enumeration by nested loops."""
    basis = [(0, 0, 0), (0.5, 0.5, 0), (0.5, 0, 0.5), (0, 0.5, 0.5)]
    out = []
    for i in range(cells[0]):
        for j in range(cells[1]):
            for k in range(cells[2]):
                for b in basis:
                    out.append(((i + b[0]) * a, (j + b[1]) * a, (k + b[2]) * a))
    return np.array(out)


def test_unit_cell_positions():
    s = build_fcc((1, 1, 1), NI)
    got = {tuple(np.round(p, 6)) for p in s.positions}
    want = {(0, 0, 0), (1.76, 1.76, 0), (1.76, 0, 1.76), (0, 1.76, 1.76)}
    assert got == {tuple(np.round(w, 6)) for w in np.array(list(want), float)}
    assert s.n == 4


def test_two_cells_no_duplicates():
    s = build_fcc((2, 1, 1), NI)
    assert s.n == 8
    assert pdist(s.positions).min() > 0.5


def test_full_block_size():
    s = build_fcc((40, 8, 80), NI)
    assert s.n == 4 * 40 * 8 * 80 == 102_400
    # box 14.08 x 2.82 x 28.16 nm; the 2.82 and 28.16 nm figures are quoted directly
    np.testing.assert_allclose(s.box.lengths / 10, [14.08, 2.816, 28.16], rtol=1e-12)
    assert round(s.box.lengths[1] / 10, 2) == 2.82
    assert s.min_distance() > 0.5


def test_atom_budget():
    with pytest.raises(ConfigurationError):
        build_fcc((200, 200, 200), NI)
    with pytest.raises(ConfigurationError):
        build_fcc((0, 1, 1), NI)


def test_carve_everything_is_error():
    s = build_fcc((1, 1, 1), NI)
    with pytest.raises(ConfigurationError):
        carve(s, Box((-1e9,) * 3, (1e9,) * 3))


def test_carve_and_substitute_empty_region_identity():
    s = build_fcc((2, 2, 2), NI)
    c = carve(s, Empty())
    np.testing.assert_array_equal(c.positions, s.positions)
    sub = substitute(s, Empty(), "Cu")
    np.testing.assert_array_equal(sub.species, s.species)
    assert sub.species_list == s.species_list


def test_substitute_same_species_is_identity():
    s = build_fcc((2, 2, 2), NI)
    sub = substitute(s, Box((0, 0, 0), (3, 3, 3)), "Ni")
    np.testing.assert_array_equal(sub.species, s.species)
    assert sub.species_list == s.species_list


def test_substitute_unknown_species():
    s = build_fcc((1, 1, 1), NI)
    with pytest.raises(ConfigurationError):
        substitute(s, Box((0, 0, 0), (1, 1, 1)), "Xx")


def test_notch_carve_count_matches_point_oracle():
    a = 3.52
    sites = brute_sites((40, 8, 80), a)
    plane = 40 * a
    # slot: from the left face 8a deep, 5a wide about the mid plane, inset a/4
    in_slot = (sites[:, 0] <= 8 * a - 0.25 * a) & (np.abs(sites[:, 2] - plane) <= 2.5 * a - 0.25 * a)
    model = build_model(ModelSpec())
    assert model.n == len(sites) - in_slot.sum()
    assert in_slot.sum() > 0


def test_inclusion_substitution_count_matches_point_oracle():
    a = 3.52
    sites = brute_sites((40, 8, 80), a)
    plane = 40 * a
    in_slot = (sites[:, 0] <= 7.75 * a) & (np.abs(sites[:, 2] - plane) <= 2.25 * a)
    kept = sites[~in_slot]
    cx = 8 * a + 10 * a
    r2 = (kept[:, 0] - cx) ** 2 + (kept[:, 2] - plane) ** 2
    expected = int((r2 <= 9.0).sum())
    model = build_model(ModelSpec(defect=DefectSpec("inclusion", 3.0, species="Cu")))
    cu = model.species_list.index(get_species("Cu"))
    assert int((model.species == cu).sum()) == expected > 0


def test_void_carve_count():
    a = 3.52
    base = build_model(ModelSpec(cells=(20, 6, 40), crack_length=4, crack_width=3))
    void = build_model(ModelSpec(cells=(20, 6, 40), crack_length=4, crack_width=3,
                                 defect=DefectSpec("void", 5.0, standoff=5.0)))
    cx, cz = 4 * a + 5 * a, 20 * a
    p = base.positions
    inside = (p[:, 0] - cx) ** 2 + (p[:, 2] - cz) ** 2 <= 25.0
    assert base.n - void.n == int(inside.sum())


def test_tag_boundaries_counts():
    a = 3.52
    s = build_fcc((4, 2, 80), NI)
    t = tag_boundaries(s, a)
    z = s.positions[:, 2]
    assert (t.group == TOP).sum() == (z > z.max() - a).sum()
    assert (t.group == BOTTOM).sum() == (z < z.min() + a).sum()
    # strict threshold keeps the two outermost (001) planes, 2 atoms per cell each
    assert (t.group == TOP).sum() == 2 * 2 * 4 * 2
    assert np.all(t.mobile == (t.group == INTERIOR))


def test_tag_thin_layer_only_face_atoms():
    s = build_fcc((2, 2, 4), NI)
    t = tag_boundaries(s, 0.1)
    z = s.positions[:, 2]
    np.testing.assert_array_equal(t.group == BOTTOM, z == z.min())
    np.testing.assert_array_equal(t.group == TOP, z == z.max())


def test_tag_thickness_out_of_range():
    s = build_fcc((2, 2, 2), NI)
    with pytest.raises(ConfigurationError):
        tag_boundaries(s, 100.0)


def test_model_is_deterministic():
    spec = ModelSpec(cells=(20, 6, 40), crack_length=4, crack_width=3, defect=DefectSpec("inclusion", 5.0, "Al", standoff=5))
    m1, m2 = build_model(spec), build_model(spec)
    assert m1.positions.tobytes() == m2.positions.tobytes()
    assert m1.species.tobytes() == m2.species.tobytes()
    np.testing.assert_array_equal(m1.notch.face_indices, m2.notch.face_indices)


def test_defect_must_fit():
    with pytest.raises(ConfigurationError):
        build_model(ModelSpec(cells=(10, 2, 10), crack_length=2, crack_width=2,
                              defect=DefectSpec("void", 30.0)))
    with pytest.raises(ConfigurationError):
        DefectSpec("inclusion", 3.0)
    with pytest.raises(ConfigurationError):
        DefectSpec("crater", 3.0)


def test_cylinder_fixture_oracle_on_small_block():
    s = build_fcc((6, 2, 6), NI)
    cyl = CylinderY(10.0, 10.0, 4.0)
    p = s.positions
    expected = sum(1 for x, _, z in p if (x - 10) ** 2 + (z - 10) ** 2 <= 16)
    assert s.n - carve(s, cyl).n == expected
