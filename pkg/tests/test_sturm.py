import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefspec.errors import DiskTooLarge, SpecError
from indefspec.sturm import (FREE, PotentialSpec, asymptotic_check, example_m0, example_potential,
                             m_numeric, resolvent_nonempty_ratio)
from indefspec.weyl import sqrt_up


def test_free_examples():
    assert abs(m_numeric(FREE, "+", 1j, tol=1e-12).value - 1j * cmath.exp(-1j * math.pi / 4)) < 1e-8
    assert abs(m_numeric(FREE, "-", 1j, tol=1e-12).value - (-1j / sqrt_up(-1j))) < 1e-8


def test_example_potential_below_spectrum():
    r = m_numeric(example_potential(), "+", -4.0)
    assert r.value == pytest.approx(4 / 7, abs=1e-6)


@pytest.mark.parametrize("z", [1j, 0.5 + 2j, -3 + 0.5j, 2 - 1j])
def test_example_potential_matches_closed_form(z):
    P = example_potential()
    assert abs(m_numeric(P, "+", z).value - example_m0(z)) < 1e-8
    assert abs(m_numeric(P, "-", z).value + example_m0(-z)) < 1e-8


def test_disk_radius_is_error_bound():
    P = example_potential()
    r = m_numeric(P, "+", -3 + 0.5j, tol=1e-6)
    assert r.radius <= 1e-6
    assert abs(r.value - example_m0(-3 + 0.5j)) <= r.radius + 1e-10


def test_disk_nesting():
    P = example_potential()
    for z in (0.3 + 0.5j, -2 + 1j):
        radii = [m_numeric(P, "+", z, tol=1e300, X0=X, X_max=X).radius for X in (4, 8, 16, 32)]
        assert all(b <= a for a, b in zip(radii, radii[1:]))


def test_disk_too_large():
    with pytest.raises(DiskTooLarge):
        m_numeric(FREE, "+", 1 + 1e-4j, tol=1e-12, X_max=16)


def test_asymptotics():
    worst, devs = asymptotic_check(FREE, "+")
    assert worst < 1e-9
    worst, devs = asymptotic_check(example_potential(), "+")
    assert worst < 1.0 and devs[-1] <= devs[0]
    bump = PotentialSpec.from_expr("exp(-x**2)")
    worst, _ = asymptotic_check(bump, "-")
    assert worst < 1.0


def test_sampled_potential():
    P = PotentialSpec.from_samples([[x, 0.0] for x in np.linspace(-50, 50, 101)])
    assert abs(m_numeric(P, "+", 1j, tol=1e-12).value - 1j / sqrt_up(1j)) < 1e-8
    with pytest.raises(SpecError):
        PotentialSpec.from_dict({})


def test_ratio_examples():
    sgn = np.sign
    res = resolvent_nonempty_ratio(sgn, lambda x: 1.0)
    assert res.certified and res.r_plus == pytest.approx(1.0) and res.r_minus == pytest.approx(1.0)
    res = resolvent_nonempty_ratio(lambda x: 2 * sgn(x), lambda x: 2.0)
    assert res.certified and res.r_plus == pytest.approx(4.0) and res.r_minus == pytest.approx(4.0)
    res = resolvent_nonempty_ratio(lambda x: sgn(x) * math.sqrt(abs(x)), lambda x: 1.0)
    assert not res.certified and res.status == "inconclusive"


@settings(max_examples=15, deadline=None)
@given(st.floats(-5, 5), st.floats(0.5, 4), st.sampled_from("+-"))
def test_herglotz_sweep(x, y, side):
    P = example_potential()
    z = complex(x, y)
    m = m_numeric(P, side, z).value
    mc = m_numeric(P, side, z.conjugate()).value
    assert m.imag * y >= -1e-10
    assert abs(mc - m.conjugate()) < 1e-8
