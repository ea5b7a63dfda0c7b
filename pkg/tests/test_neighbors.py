import numpy as np
import pytest

from crackmd.errors import ConfigurationError
from crackmd.geometry import OPEN, PERIODIC, SimBox
from crackmd.neighbors import brute_force_pairs, build, needs_rebuild


def independent_pairs(pos, box, radius):
    """Pair set from scipy's periodic KD-tree, mapped back to image shifts."""
    from scipy.spatial import cKDTree

    lengths = box.lengths
    per = box.periodic
    pairs = set()
    # replicate the cell explicitly along periodic axes
    ranges = [(-1, 0, 1) if p else (0,) for p in per]
    for sx in ranges[0]:
        for sy in ranges[1]:
            for sz in ranges[2]:
                s = np.array([sx, sy, sz])
                tree = cKDTree(pos + s * lengths)
                for i, hits in enumerate(tree.query_ball_point(pos, radius)):
                    for j in hits:
                        if j > i:
                            pairs.add((i, j, (sx, sy, sz)))
    return pairs


@pytest.mark.parametrize("boundary", [(OPEN,) * 3, (PERIODIC,) * 3, (PERIODIC, OPEN, PERIODIC)])
def test_random_atoms_match_brute_force(boundary):
    rng = np.random.default_rng(0)
    box = SimBox((0, 0, 0), (16, 17, 18), boundary)
    pos = rng.uniform(0, 1, (500, 3)) * box.lengths
    nl = build(pos, box, 5.0, 1.0)
    assert nl.pair_set() == brute_force_pairs(pos, box, 6.0)
    assert nl.pair_set() == independent_pairs(pos, box, 6.0)


def test_rows_sorted_and_half():
    rng = np.random.default_rng(1)
    box = SimBox((0, 0, 0), (14, 14, 14), (PERIODIC,) * 3)
    nl = build(rng.uniform(0, 14, (200, 3)), box, 4.0, 1.0)
    for i in range(nl.n_atoms):
        row = nl.neighbors[nl.start[i]:nl.start[i + 1]]
        assert np.all(row > i)
        assert np.all(np.diff(row) >= 0)


def test_positions_outside_primary_cell():
    rng = np.random.default_rng(2)
    box = SimBox((0, 0, 0), (15, 15, 15), (PERIODIC,) * 3)
    pos = rng.uniform(0, 15, (150, 3))
    shifted = pos + rng.integers(-2, 3, pos.shape) * 15.0
    a = build(pos, box, 4.0, 1.0)
    b = build(shifted, box, 4.0, 1.0)
    # shifts differ by the images but distances are the same
    def dists(nl, p):
        i, j, s = nl.pair_arrays()
        return np.sort(np.linalg.norm(p[j] + s * box.lengths - p[i], axis=1))
    np.testing.assert_allclose(dists(a, pos), dists(b, shifted), atol=1e-10)


def test_just_beyond_radius_is_empty():
    box = SimBox((-20, -20, -20), (20, 20, 20))
    pos = np.array([[0, 0, 0], [6.0 + 1.0 + 0.01, 0, 0]])
    assert build(pos, box, 6.0, 1.0).n_pairs == 0
    assert build(pos[:1], box, 6.0, 1.0).n_pairs == 0
    assert build(np.zeros((0, 3)), box, 6.0, 1.0).n_pairs == 0


def test_thin_periodic_box_rejected():
    box = SimBox((0, 0, 0), (20, 5, 20), (OPEN, PERIODIC, OPEN))
    with pytest.raises(ConfigurationError, match="axis y"):
        build(np.zeros((1, 3)), box, 5.0, 1.0)


def test_needs_rebuild_threshold():
    rng = np.random.default_rng(3)
    box = SimBox((0, 0, 0), (20, 20, 20))
    pos = rng.uniform(0, 20, (50, 3))
    nl = build(pos, box, 5.0, 1.0)
    assert not needs_rebuild(nl, pos)
    moved = pos.copy()
    moved[7, 1] += 0.5 + 1e-9
    assert needs_rebuild(nl, moved)
    allmoved = pos + (0.5 - 1e-9) / np.sqrt(3)
    assert not needs_rebuild(nl, allmoved)
    with pytest.raises(RuntimeError):
        needs_rebuild(nl, pos[:-1])


def test_order_independence():
    rng = np.random.default_rng(4)
    box = SimBox((0, 0, 0), (15, 15, 15), (PERIODIC,) * 3)
    pos = rng.uniform(0, 15, (300, 3))
    perm = rng.permutation(len(pos))
    a = build(pos, box, 4.0, 1.0).pair_set()
    b = build(pos[perm], box, 4.0, 1.0).pair_set()
    mapped = set()
    for i, j, s in b:
        pi, pj = perm[i], perm[j]
        if pi < pj:
            mapped.add((int(pi), int(pj), s))
        else:
            mapped.add((int(pj), int(pi), tuple(-v for v in s)))
    assert mapped == a
