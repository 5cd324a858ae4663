import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indefspec import measure as ms
from indefspec.errors import AtXi, OutsideBand, SpecError, SummabilityUncertified
from indefspec.infzone import (ZoneSpec, a0_discrete, band_density, bands, build_zone_functions,
                               identity_residual, indefinite_spectrum, indefinite_weyl, m_coefficient,
                               reconstruct_measure, residue_mass)
from indefspec.weyl import eval_M, sqrt_up, stieltjes_invert

ONE_GAP = {"mu0r": 0, "gaps": [{"mul": 1, "mur": 2, "xi": 1.5, "eps": 1}]}
COLLAPSED = {"mu0r": 0, "gaps": [{"mul": 1, "mur": 1, "xi": 1}, {"mul": 3, "mur": 3, "xi": 3}]}
TAILED = {"mu0r": 0, "gaps": [{"mul": 0.5, "mur": 0.9, "xi": 0.6, "eps": -1}],
          "tail": {"mul_expr": "j**2 + 1", "gap_expr": "1/(j**4 + 1)"}}


def test_one_gap_hand_values():
    v = build_zone_functions(ZoneSpec.from_dict(ONE_GAP), -1.0, 1)
    assert v.g == pytest.approx(2.5, abs=1e-14)
    assert v.f == pytest.approx(-6.0, abs=1e-14)
    assert v.k == pytest.approx(math.sqrt(0.375), abs=1e-14)
    assert v.h == pytest.approx(-2.25, abs=1e-14)
    assert abs(v.h * v.g - v.k ** 2 - v.f) < 1e-14


def test_collapsed_and_bottom_edge():
    Z = ZoneSpec.from_dict(COLLAPSED)
    v = build_zone_functions(Z, -1 + 2j)
    assert v.k == 0 and abs(v.h * v.g - v.f) < 1e-13
    assert build_zone_functions(ZoneSpec.from_dict(ONE_GAP), 0.0, 1).f == 0


def test_at_xi_raises():
    with pytest.raises(AtXi):
        build_zone_functions(ZoneSpec.from_dict(ONE_GAP), 1.5, 1)


def test_spec_validation():
    with pytest.raises(SpecError):
        ZoneSpec.from_dict({"mu0r": 0, "gaps": [{"mul": 2, "mur": 1}]})
    with pytest.raises(SpecError):
        ZoneSpec.from_dict({"mu0r": 0, "gaps": [{"mul": 1, "mur": 2, "xi": 3}]})
    with pytest.raises(SummabilityUncertified):
        ZoneSpec.from_dict({"mu0r": 0, "tail": {"mul_expr": "j**2", "gap_expr": "1/j**3"}})


def test_free_case_m_function():
    Z = ZoneSpec.from_dict(COLLAPSED)
    for z in (2 + 1j, -3 + 0.1j, 0.5 - 2j):
        assert m_coefficient(Z, z) == pytest.approx(1j / sqrt_up(z), abs=1e-14)
        assert indefinite_weyl(Z, z, "-") == pytest.approx(-1j / sqrt_up(-z), abs=1e-14)
        assert indefinite_weyl(Z, z, "+") == m_coefficient(Z, z)


def test_one_gap_real_value_below_spectrum():
    Z = ZoneSpec.from_dict(ONE_GAP)
    # m = g/(k - i sqrt f) with the branch continued from above
    m = m_coefficient(Z, -1.0)
    assert m == pytest.approx(2.5 / (math.sqrt(0.375) + math.sqrt(6.0)), abs=1e-12)
    assert m_coefficient(Z, -1.0 + 1e-8j) == pytest.approx(m, abs=1e-7)


def test_band_density_examples():
    Z0 = ZoneSpec.from_dict(COLLAPSED)
    assert band_density(Z0, 1.0) == pytest.approx(1 / math.pi, abs=1e-14)
    Z = ZoneSpec.from_dict(ONE_GAP)
    assert band_density(Z, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert band_density(Z, 0.5) == pytest.approx(stieltjes_invert(lambda z: m_coefficient(Z, z), 0.5), abs=1e-6)
    with pytest.raises(OutsideBand):
        band_density(Z, 1.5)


def test_edge_behaviour_is_square_root():
    Z = ZoneSpec.from_dict(ONE_GAP)
    for edge, d in ((1.0, -1), (2.0, 1), (0.0, 1)):
        ratios = [band_density(Z, edge + d * e) / math.sqrt(e) for e in (1e-4, 1e-6, 1e-8)]
        assert min(ratios) > 0 and max(ratios) / min(ratios) < 1.01


def test_gap_eigenvalue():
    Z = ZoneSpec.from_dict(ONE_GAP)
    atoms = a0_discrete(Z, "+", with_mass=True)
    assert len(atoms) == 1 and 1.0 < atoms[0].point < 2.0
    assert abs(build_zone_functions(Z, atoms[0].point, 1).h) < 1e-10
    assert atoms[0].mass == pytest.approx(residue_mass(Z, atoms[0].point, "+", 1), rel=1e-6)
    assert a0_discrete(ZoneSpec.from_dict(COLLAPSED)) == []


def test_reconstructed_measure_reproduces_m():
    Z = ZoneSpec.from_dict(ONE_GAP)
    for side in ("+", "-"):
        W = reconstruct_measure(Z, side)
        for z in (0.3 + 0.7j, -4 + 1j, 2.5 - 0.2j):
            assert eval_M(W, z) == pytest.approx(indefinite_weyl(Z, z, side), abs=1e-8)


def test_free_indefinite_spectrum():
    rep, checks = indefinite_spectrum(ZoneSpec.from_dict(COLLAPSED), (-10.0, 10.0), probes=10)
    assert rep.discrete == [] and rep.essential.intervals == ((-math.inf, math.inf),)
    assert all("A0" in (cp, cm) for _, cp, cm in checks)


def test_bands():
    assert bands(ZoneSpec.from_dict(ONE_GAP)) == [(0.0, 1.0), (2.0, math.inf)]


def test_large_truncation_against_extended_precision():
    Z = ZoneSpec.from_dict(TAILED)
    rng = np.random.default_rng(11)
    s = rng.uniform(-10, 10, 50) + 1j * rng.uniform(-10, 10, 50)
    assert identity_residual(Z, s, 500) < 1e-8
    fast = build_zone_functions(Z, s[0], 500)
    slow = build_zone_functions(Z, s[0], 500, precision="extended")
    for a, b in ((fast.g, slow.g), (fast.f, slow.f), (fast.k, slow.k), (fast.h, slow.h)):
        assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


def test_truncation_convergence():
    Z = ZoneSpec.from_dict(TAILED)
    z = 3 + 1j
    diffs = [abs(m_coefficient(Z, z, n=n) - m_coefficient(Z, z, n=2 * n)) for n in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))


def random_zone(draw):
    n = draw(st.integers(1, 5))
    edge = draw(st.floats(-3, 3))
    gaps = []
    for _ in range(n):
        edge += draw(st.floats(0.2, 3))
        width = draw(st.sampled_from([0.0, draw(st.floats(0.05, 2))]))
        xi = edge + width * draw(st.floats(0, 1))
        eps = draw(st.sampled_from([-1, 1]))
        if edge == 0:
            edge += 0.1
        gaps.append({"mul": edge, "mur": edge + width, "xi": xi, "eps": eps})
        edge += width
    mu0 = gaps[0]["mul"] - draw(st.floats(0.2, 3))
    return ZoneSpec.from_dict({"mu0r": mu0, "gaps": gaps})


zones = st.composite(random_zone)


@settings(max_examples=30, deadline=None)
@given(zones(), st.floats(-10, 10), st.floats(0.01, 10))
def test_identity_and_herglotz(Z, x, y):
    z = complex(x, y)
    assert identity_residual(Z, [z, z.conjugate()]) < 1e-10
    for side in ("+", "-"):
        m = m_coefficient(Z, z, side)
        assert m.imag >= -1e-10
        assert indefinite_weyl(Z, z, side).imag >= -1e-10
        assert abs(m_coefficient(Z, z.conjugate(), side) - np.conj(m)) < 1e-10 * max(1.0, abs(m))
