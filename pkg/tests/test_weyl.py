import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import lattice, lebesgue_measure, upper_samples
from indefspec import measure as ms
from indefspec.errors import HypothesesFail, NoLimit, OnSupport
from indefspec.measure import Atom, DensityPiece, Divergent, Finite, SpectralMeasure
from indefspec.sturm import example_m0
from indefspec.weyl import (PhiFunction, WeylCoefficient, eval_M, eval_M_deriv, eval_Phi_boundary,
                            eval_Phi_deriv, herglotz_residual, r_function_residual, sqrt_up,
                            stieltjes_invert)


def W(sigma, C=0.0):
    return WeylCoefficient(sigma, C)


def test_eval_M_examples():
    assert eval_M(W(ms.finite_atoms([(0.0, 1.0)])), 1j) == pytest.approx(1j, abs=1e-15)
    assert eval_M(W(lebesgue_measure()), 1j) == pytest.approx(1j * math.pi, abs=1e-10)
    assert eval_M(W(lebesgue_measure(), 2.5), 1j) == pytest.approx(2.5 + 1j * math.pi, abs=1e-10)


def test_eval_M_on_support_raises():
    with pytest.raises(OnSupport):
        eval_M(W(lebesgue_measure()), 0.3)
    with pytest.raises(OnSupport):
        eval_M(W(lattice()), 2.0)


def test_eval_M_lattice_closed_form():
    # sum over k of 1/(k - z) - k/(1+k^2) = -pi cot(pi z)
    for z in (0.5, 0.25, 0.3 + 0.7j, -2.2 + 0.1j):
        assert eval_M(W(lattice()), z) == pytest.approx(-math.pi / np.tan(math.pi * z), abs=1e-10)


def test_eval_M_deriv_examples():
    assert eval_M_deriv(W(ms.finite_atoms([(0.0, 1.0)])), 2.0, 1) == pytest.approx(0.25, abs=1e-15)
    assert abs(eval_M_deriv(W(lebesgue_measure()), 1j, 1)) < 1e-10
    assert eval_M_deriv(W(ms.finite_atoms([(1.0, 3.0)])), 1j, 2) == pytest.approx(2 * 3 / (1 - 1j) ** 3, rel=1e-14)


def test_phi_boundary_examples(Z, Z5):
    assert eval_Phi_boundary(PhiFunction(Z, Z), 0.0, 0) == Finite(0j)
    v = eval_Phi_boundary(PhiFunction(Z, Z5), 0.0, 0)
    assert v.value == pytest.approx(-(1 / 5 - 5 / 26), abs=1e-12)
    heavier = W(ms.SpectralMeasure(atoms=(Atom(0.0, 1.0),), families=Z.measure.families))
    with pytest.raises(HypothesesFail):
        eval_Phi_boundary(PhiFunction(Z, heavier), 0.0, 0)


def test_phi_boundary_divergent_moment():
    dens = DensityPiece(0.0, math.inf, lambda t: np.sqrt(np.asarray(t, dtype=float)), left=0.5, infinity=0.5)
    a = W(SpectralMeasure(densities=(dens,)))
    b = W(lebesgue_measure(1.0))
    assert isinstance(eval_Phi_boundary(PhiFunction(a, b), 0.0, 0), Divergent)


def test_phi_boundary_matches_derivatives_off_support(Z, Z5):
    phi = PhiFunction(Z, Z5)
    for x in (0.5, -3.25, 4.5):
        for n in range(3):
            direct = eval_Phi_deriv(phi, complex(x), n)
            assert eval_Phi_boundary(phi, x, n).value == pytest.approx(direct, abs=1e-10)


def test_r_function_examples():
    assert eval_M(W(ms.finite_atoms([(1.0, 2.0)])), 1j).imag == pytest.approx(1.0, abs=1e-15)
    assert eval_M(W(lebesgue_measure()), 2j).imag == pytest.approx(math.pi, abs=1e-10)
    rng = np.random.default_rng(3)
    assert r_function_residual(W(lattice(), 0.7), upper_samples(rng, 100)) < 1e-10
    assert herglotz_residual(lambda z: -1 / z, [1j, 2 + 1j]) == 0.0
    assert herglotz_residual(lambda z: 1 / z, [1j]) > 0


def test_stieltjes_examples():
    leb = W(lebesgue_measure())
    assert stieltjes_invert(lambda z: eval_M(leb, z), 0.3) == pytest.approx(1.0, abs=1e-9)
    assert stieltjes_invert(example_m0, 1.0) == pytest.approx(1 / (2 * math.pi), abs=1e-9)
    atom = W(ms.finite_atoms([(0.0, 1.0)]))
    assert abs(stieltjes_invert(lambda z: eval_M(atom, z), 2.0)) < 1e-12


def test_stieltjes_no_limit_at_atom():
    atom = W(ms.finite_atoms([(0.0, 1.0)]))
    with pytest.raises(NoLimit):
        stieltjes_invert(lambda z: eval_M(atom, z), 0.0)


def test_sqrt_branch():
    assert sqrt_up(-1) == pytest.approx(1j)
    assert sqrt_up(4.0) == pytest.approx(2.0)
    z = np.array([1j, -1j, -4 + 1e-300j, -4 - 1e-300j])
    assert np.all(np.asarray(sqrt_up(z)).imag >= 0)
    assert np.allclose(np.asarray(sqrt_up(z)) ** 2, z)


def random_measure(draw):
    n = draw(st.integers(0, 6))
    pts = draw(st.lists(st.floats(-10, 10), min_size=n, max_size=n, unique_by=lambda v: round(v, 4)))
    ws = draw(st.lists(st.floats(0.05, 5), min_size=n, max_size=n))
    dens = ()
    if draw(st.booleans()):
        a = draw(st.floats(-5, 0))
        b = draw(st.floats(0.5, 5))
        c = draw(st.floats(0.2, 3))
        dens = (DensityPiece(a, a + b, lambda t, c=c: c + 0 * np.asarray(t, dtype=float), label=f"c{c}"),)
    if not pts and not dens:
        pts, ws = [0.0], [1.0]
    return SpectralMeasure(atoms=tuple(Atom(t, w) for t, w in zip(pts, ws)), densities=dens)


measures = st.composite(random_measure)


@settings(max_examples=40, deadline=None)
@given(measures(), st.floats(-3, 3), st.floats(-10, 10), st.floats(0.05, 8))
def test_herglotz_and_conjugate_symmetry(sigma, C, x, y):
    w = W(sigma, C)
    z = complex(x, y)
    m = eval_M(w, z)
    assert m.imag >= -1e-12
    assert abs(eval_M(w, z.conjugate()) - m.conjugate()) <= 1e-12 * max(1.0, abs(m))


@settings(max_examples=40, deadline=None)
@given(measures(), st.floats(-10, 10), st.floats(0.2, 5), st.integers(1, 3))
def test_derivative_matches_central_difference(sigma, x, y, n):
    w = W(sigma)
    z = complex(x, y)
    h = 1e-4 * max(1.0, abs(z))
    lower = eval_M(w, z) if n == 1 else eval_M_deriv(w, z, n - 1)
    fd = ((eval_M(w, z + h) if n == 1 else eval_M_deriv(w, z + h, n - 1))
          - (eval_M(w, z - h) if n == 1 else eval_M_deriv(w, z - h, n - 1))) / (2 * h)
    exact = eval_M_deriv(w, z, n)
    assert abs(fd - exact) <= 1e-5 * max(abs(exact), abs(lower) / abs(z.imag) ** n)


def test_vectorized_eval_matches_scalar(Z5):
    zs = np.array([0.5 + 0.1j, -2.3 + 1j, 7.5 + 0j])
    vec = eval_M(Z5, zs)
    assert np.allclose(vec, [eval_M(Z5, z) for z in zs], rtol=1e-14, atol=0)
