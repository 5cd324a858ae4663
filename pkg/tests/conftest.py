import json
import math

import numpy as np
import pytest

from indefspec.measure import Atom, AtomFamily, SpectralMeasure, integer_atoms, lebesgue
from indefspec.weyl import WeylCoefficient


def lattice(weight=1.0, offset=0.0, step=1.0, extra=()):
    """Atoms of equal mass on offset + step*Z plus explicit extra atoms."""
    return SpectralMeasure(atoms=tuple(Atom(t, w) for t, w in extra),
                           families=(integer_atoms(weight, offset, step),))


def lattice_without_zero():
    right = AtomFamily(lambda k: k, lambda k: 1.0 + 0 * k, 1, None, 0.0, label="k>=1")
    left = AtomFamily(lambda k: k, lambda k: 1.0 + 0 * k, None, -1, 0.0, label="k<=-1")
    return SpectralMeasure(families=(right, left))


def lebesgue_measure(a=-math.inf, b=math.inf):
    return SpectralMeasure(densities=(lebesgue(a, b),))


@pytest.fixture
def Z():
    return WeylCoefficient(lattice())


@pytest.fixture
def Z5():
    return WeylCoefficient(lattice(extra=[(5.0, 1.0)]))


@pytest.fixture
def write_json(tmp_path):
    def write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)
    return write


def upper_samples(rng, n, lo=0.05, hi=10.0):
    """Points of the upper half plane with log-uniform modulus."""
    r = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    th = rng.uniform(0.02, math.pi - 0.02, n)
    return r * np.exp(1j * th)


# (criterion number, line) pairs filled in by test_acceptance
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
