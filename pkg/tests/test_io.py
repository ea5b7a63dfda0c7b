import math

import numpy as np
import pytest

from crackmd.errors import ConfigurationError, ParseError
from crackmd.geometry import OPEN, PERIODIC, SimBox
from crackmd.io import (
    BUILTIN_POTENTIAL,
    THERMO_HEADER,
    ThermoRecord,
    dump_config,
    load_config,
    read_config,
    read_dump,
    read_thermo,
    split_frames,
    write_dump,
    write_thermo,
)
from crackmd.lattice import AtomSystem, Species, build_fcc
from crackmd.presets import preset_config

MINIMAL = """
[geometry]
nx = 20
ny = 6
nz = 40

[potential]
file = builtin:NiCuAl_zhou04.eam.alloy

[loading]
strain_rate = 6.67e8
target_strain = 0.2
"""


def test_minimal_config_defaults():
    cfg = load_config(MINIMAL, check_potential=True)
    assert cfg.loading.dt == 0.001
    assert cfg.thermostat.temperature == 50.0
    assert cfg.potential.skin == 1.0
    assert cfg.defect is None
    assert cfg.geometry.species == "Ni"
    assert cfg.n_steps == math.ceil(0.2 / (6.67e8 * 1e-12 * 0.001))


def test_void_and_inclusion_are_exclusive():
    text = MINIMAL + "\n[void]\nradius = 5\n\n[inclusion]\nradius = 3\nspecies = Cu\n"
    with pytest.raises(ConfigurationError, match="not both"):
        load_config(text)


def test_unknown_key_names_key_and_line():
    text = MINIMAL.replace("nz = 40", "nz = 40\ncolour = blue")
    with pytest.raises(ParseError) as info:
        load_config(text)
    assert "colour" in str(info.value)
    assert "line 6" in str(info.value)


def test_unknown_section_and_missing_key():
    with pytest.raises(ParseError, match="extras"):
        load_config(MINIMAL + "\n[extras]\nx = 1\n")
    with pytest.raises(ConfigurationError, match="target_strain"):
        load_config(MINIMAL.replace("target_strain = 0.2\n", ""))
    with pytest.raises(ConfigurationError, match="loading"):
        load_config(MINIMAL.split("[loading]")[0])


@pytest.mark.parametrize("bad, word", [
    ("target_strain = 0.2", "target_strain = 0.7"),
    ("strain_rate = 6.67e8", "strain_rate = -1"),
])
def test_invariant_violations_name_the_constraint(bad, word):
    with pytest.raises(ConfigurationError, match=word.split(" = ")[0]):
        load_config(MINIMAL.replace(bad, word))


def test_dt_bounds():
    with pytest.raises(ConfigurationError, match="dt"):
        load_config(MINIMAL + "dt = 0.02\n")


def test_unknown_species_in_potential(tmp_path):
    text = MINIMAL + "\n[inclusion]\nradius = 3\nspecies = Cu\n"
    setfl = tmp_path / "ni.eam.alloy"
    from crackmd.potential import load_bundled, write_setfl

    table = load_bundled()
    lines = write_setfl(table).splitlines()
    # keep only the Ni block: header + F + rho for one element + one pair table
    keep = 1 + table.nrho // 5 + (1 if table.nrho % 5 else 0) + table.nr // 5 + (1 if table.nr % 5 else 0)
    ni_only = lines[:3] + ["1 Ni"] + [lines[4]] + lines[5:5 + keep]
    pairs_start = 5 + 3 * keep
    ni_only += lines[pairs_start:pairs_start + table.nr // 5 + (1 if table.nr % 5 else 0)]
    setfl.write_text("\n".join(ni_only) + "\n")
    cfg_text = text.replace("builtin:NiCuAl_zhou04.eam.alloy", str(setfl))
    with pytest.raises(ConfigurationError, match="Cu"):
        load_config(cfg_text, check_potential=True)
    assert load_config(MINIMAL.replace("builtin:NiCuAl_zhou04.eam.alloy", str(setfl)), check_potential=True)


def test_void_r5_round_trip():
    cfg = preset_config("void_r5")
    assert cfg.loading.strain_rate == 6.67e8
    assert cfg.thermostat.temperature == 50.0
    assert cfg.defect.kind == "void" and cfg.defect.radius == 5.0
    text = dump_config(cfg)
    again = load_config(text)
    assert again == cfg
    assert dump_config(again) == text


def test_read_config_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="config file not found"):
        read_config(tmp_path / "nope.cfg")


def test_missing_potential_file_named(tmp_path):
    text = MINIMAL.replace("builtin:NiCuAl_zhou04.eam.alloy", "tables/missing.eam.alloy")
    path = tmp_path / "run.cfg"
    path.write_text(text)
    with pytest.raises((ConfigurationError, OSError), match="missing.eam.alloy"):
        read_config(path)


# ---------------------------------------------------------------- dumps


def independent_dump_reader(text):
    """Minimal reader written against the LAMMPS text layout."""
    frames = []
    lines = text.splitlines()
    k = 0
    while k < len(lines):
        assert lines[k] == "ITEM: TIMESTEP"
        step = int(lines[k + 1])
        n = int(lines[k + 3])
        bounds = [tuple(map(float, lines[k + 5 + a].split())) for a in range(3)]
        cols = lines[k + 8].split()[2:]
        rows = [lines[k + 9 + i].split() for i in range(n)]
        frames.append((step, n, bounds, cols, rows))
        k += 9 + n
    return frames


def small_system():
    s = build_fcc((1, 1, 1), Species("Ni", 58.6934, 3.52), boundary=(PERIODIC, OPEN, OPEN))
    return s


def test_dump_four_atoms(tmp_path):
    s = small_system()
    path = tmp_path / "d.lammpstrj"
    write_dump(s, np.arange(4.0), np.ones(4, int), np.full(4, 12), path, 123)
    text = path.read_text()
    (step, n, bounds, cols, rows), = independent_dump_reader(text)
    assert step == 123 and n == 4 and len(rows) == 4
    assert cols == ["id", "type", "x", "y", "z", "c_vm", "c_cna", "c_coord"]
    assert "ITEM: BOX BOUNDS pp ff ff" in text
    assert bounds[0] == (0.0, 3.52)
    np.testing.assert_allclose([[float(v) for v in r[2:5]] for r in rows], s.positions)


def test_dump_two_frames(tmp_path):
    s = small_system()
    path = tmp_path / "d.lammpstrj"
    write_dump(s, np.zeros(4), np.zeros(4, int), np.zeros(4, int), path, 0)
    s.positions += 0.25
    write_dump(s, np.ones(4), np.ones(4, int), np.ones(4, int), path, 10)
    lines = path.read_text().splitlines()
    second = [i for i, l in enumerate(lines) if l == "ITEM: TIMESTEP"][1]
    assert second == 9 + 4  # directly after the first frame's last atom line
    frames = read_dump(path)
    assert [f.step for f in frames] == [0, 10]
    np.testing.assert_allclose(frames[1].positions, s.positions)
    assert frames[0].boundary == ("periodic", "open", "open")
    assert len(split_frames(path.read_text())) == 2


def test_dump_round_trip_against_independent_reader(tmp_path):
    rng = np.random.default_rng(0)
    s = build_fcc((3, 2, 2), Species("Ni", 58.6934, 3.52))
    s.positions += rng.normal(0, 0.1, s.positions.shape)
    vm = rng.uniform(0, 2, s.n)
    path = tmp_path / "d.lammpstrj"
    write_dump(s, vm, rng.integers(0, 4, s.n), rng.integers(0, 13, s.n), path, 7)
    ours = read_dump(path)[0]
    (_, n, _, cols, rows), = independent_dump_reader(path.read_text())
    theirs = np.array(rows, float)
    for c, name in enumerate(cols):
        np.testing.assert_array_equal(ours.columns[name], theirs[:, c])
    np.testing.assert_allclose(ours.columns["c_vm"], vm, rtol=1e-7)


def test_dump_parse_errors(tmp_path):
    path = tmp_path / "bad.lammpstrj"
    path.write_text("ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n2\nITEM: BOX BOUNDS ff ff ff\n0 1\n0 1\n0 1\n"
                    "ITEM: ATOMS id type x y z\n1 1 0 0 0\n")
    with pytest.raises(ParseError, match="truncated"):
        read_dump(path)
    path.write_text("ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n1\nITEM: BOX BOUNDS ff ff ff\n0 1\n0 1\n0 1\n"
                    "ITEM: ATOMS id type x y z\n1 1 0 zero 0\n")
    with pytest.raises(ParseError, match="line 10"):
        read_dump(path)


def test_dump_unwritable(tmp_path):
    with pytest.raises(OSError):
        write_dump(small_system(), np.zeros(4), np.zeros(4, int), np.zeros(4, int), tmp_path / "no" / "d", 0)


# ---------------------------------------------------------------- thermo


def test_thermo_empty_is_header_only(tmp_path):
    path = tmp_path / "t.csv"
    write_thermo([], path)
    assert path.read_text() == ",".join(THERMO_HEADER) + "\n"
    assert read_thermo(path) == []


def test_thermo_three_records_round_trip(tmp_path):
    recs = [ThermoRecord(k * 100, k * 0.1, k * 6.67e-5, 50.0 + k, -1000.0 - k / 3, 1.5, 0.1 * k, 14.08 + k)
            for k in range(1, 4)]
    recs[0].crack_length = float("nan")
    path = tmp_path / "t.csv"
    write_thermo(recs, path)
    assert len(path.read_text().splitlines()) == 4
    back = read_thermo(path)
    assert math.isnan(back[0].crack_length)
    back[0].crack_length = recs[0].crack_length = 0.0
    assert back == recs


def test_thermo_malformed_reports_line(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(",".join(THERMO_HEADER) + "\n1,0.001,0,50,1,1,0,nan\n2,x,0,50,1,1,0,nan\n")
    with pytest.raises(ParseError, match="line 3"):
        read_thermo(path)
    path.write_text("a,b\n")
    with pytest.raises(ParseError, match="line 1"):
        read_thermo(path)
