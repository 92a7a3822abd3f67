import json
from pathlib import Path

import numpy as np
import pytest

from indrep.covers import validate_covering
from indrep.functors import Cover
from indrep.groups import surface_presentation

FIXTURES = Path(__file__).parent / "fixtures"

# name -> (genus, punctures, degree, perms)
COVERINGS = {
    "identity": (1, 1, 1, {}),
    "torus_d2": (1, 1, 2, {"a1": [2, 1]}),
    "pants_d2": (0, 3, 2, {"c1": [2, 1], "c2": [2, 1]}),
    "pants_d3": (0, 3, 3, {"c1": [2, 1, 3], "c2": [1, 3, 2]}),
    "torus_d3": (1, 1, 3, {"a1": [2, 3, 1], "b1": [2, 1, 3]}),
    "torus2_d2": (1, 2, 2, {"c1": [2, 1]}),
    "pants_d4": (0, 3, 4, {"c1": [2, 1, 4, 3], "c2": [1, 3, 2, 4]}),
}


def make_cover(name):
    g, b, d, perms = COVERINGS[name]
    return Cover(validate_covering(surface_presentation(g, b), d, perms))


@pytest.fixture
def torus_d2():
    return make_cover("torus_d2")


@pytest.fixture
def genus2_d2():
    return Cover(validate_covering(surface_presentation(2, 0), 2, {"a1": [2, 1]}))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def fixture_path(name):
    return str(FIXTURES / f"{name}.json")


def load_fixture(name):
    return json.loads((FIXTURES / f"{name}.json").read_text())


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
