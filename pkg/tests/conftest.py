import sys

import numpy as np
import pytest

from crackmd.geometry import PERIODIC
from crackmd.lattice import Species, build_fcc
from crackmd.potential import EamPotential, load_bundled, synthetic_table


@pytest.fixture(scope="session")
def bundled():
    return load_bundled()


@pytest.fixture(scope="session")
def ni_potential(bundled):
    return EamPotential(bundled)


@pytest.fixture(scope="session")
def ni_a(bundled):
    """Header lattice constant of Ni in the bundled table."""
    return bundled.lattice_constants[bundled.index("Ni")]


@pytest.fixture(scope="session")
def synthetic_potential():
    return EamPotential(synthetic_table())


@pytest.fixture
def ni_block(ni_a):
    """Periodic 256-atom Ni block at the table lattice constant."""

    def make(cells=(4, 4, 4), a=None, boundary=(PERIODIC,) * 3):
        species = Species("Ni", 58.6934, ni_a if a is None else a)
        return build_fcc(cells, species, boundary=boundary)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "CRITERIA_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
