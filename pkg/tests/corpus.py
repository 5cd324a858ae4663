"""Atomic measure pairs with hand-derived eigenvalue data.

Every pair is the integer lattice (weight 1) plus a few extra atoms per half.
Expected multiplicities follow from which boundary moments agree:

* on a common atom with equal masses the chain grows while the
  regularised Cauchy integral (fixed through C) and the signed moments
  of order 2, 3, ... agree;
* off the atoms the same moments, starting at order 1, decide; order 1
  is the existence condition, so matching orders 1..k gives k.

Symmetric extra atoms kill all odd moments, which is how the longer chains
are produced without solving for weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from indefspec.measure import Atom, AtomFamily, DensityPiece, SpectralMeasure, integer_atoms
from indefspec.weyl import WeylCoefficient


@dataclass
class Case:
    name: str
    plus: WeylCoefficient
    minus: WeylCoefficient
    lam: complex
    case: str
    algebraic: int | None  # None: cap reached
    k_max: int = 8


def _reg(extra, lam):
    """sum of w (1/(t-lam) - t/(1+t^2)) over the extra atoms away from lam."""
    return sum(w * (1 / (t - lam) - t / (1 + t * t)) for t, w in extra if t != lam)


def _lattice(extra=(), weight=1.0, offset=0.0, drop_zero=False):
    atoms = tuple(Atom(float(t), float(w)) for t, w in extra)
    if drop_zero:
        fams = (AtomFamily(lambda k: k + offset, lambda k: weight + 0 * k, 1, None, 0.0, label=f"r{offset}"),
                AtomFamily(lambda k: k + offset, lambda k: weight + 0 * k, None, -1, 0.0, label=f"l{offset}"))
    else:
        fams = (integer_atoms(weight, offset),)
    return SpectralMeasure(atoms=atoms, families=fams)


def _pair(name, ep, em, lam, case, alg, match_c=True, k_max=8, drop_zero=False, zero_masses=None):
    """Lattice plus extras; C on the minus side chosen to equalise the
    regularised Cauchy integrals at lam when match_c."""
    if zero_masses:
        ep = list(ep) + [(0.0, zero_masses[0])]
        em = list(em) + [(0.0, zero_masses[1])]
    cp = 0.0
    cm = _reg(ep, lam) - _reg(em, lam) if match_c else 0.0
    plus = WeylCoefficient(_lattice(ep, drop_zero=drop_zero), cp)
    minus = WeylCoefficient(_lattice(em, drop_zero=drop_zero), float(np.real(cm)))
    return Case(name, plus, minus, lam, case, alg, k_max)


def corpus() -> list[Case]:
    out: list[Case] = []
    # --- common atom at 0 (Ap on both halves)
    out.append(_pair("ap-unequal-mass", [], [], 0.0, "Ap∩Ap", 1, drop_zero=True, zero_masses=(1.0, 2.0)))
    out.append(_pair("ap-unequal-mass-2", [(3.5, 0.2)], [], 0.0, "Ap∩Ap", 1, drop_zero=True, zero_masses=(0.5, 0.7)))
    out.append(_pair("ap-k2-extra-at-5", [], [(5.0, 1.0)], 0.0, "Ap∩Ap", 2, match_c=False))
    out.append(_pair("ap-k2-extra-at-minus-2.5", [(-2.5, 0.3)], [], 0.0, "Ap∩Ap", 2, match_c=False))
    out.append(_pair("ap-k3-c-matched", [], [(5.0, 1.0)], 0.0, "Ap∩Ap", 3))
    out.append(_pair("ap-k3-c-matched-2", [(0.5, 0.1)], [(-1.5, 0.4)], 0.0, "Ap∩Ap", 3))
    # w/a^2 = v/b^2 makes the order-2 moments agree; a != b separates order 3
    out.append(_pair("ap-k4", [(2.5, 1.0)], [(5.0, 4.0)], 0.0, "Ap∩Ap", 4))
    out.append(_pair("ap-k4-b", [(-0.5, 0.25)], [(-1.5, 2.25)], 0.0, "Ap∩Ap", 4))
    # symmetric extras: odd moments vanish, order 4 separates
    out.append(_pair("ap-k5", [(2.5, 1.0), (-2.5, 1.0)], [(5.0, 4.0), (-5.0, 4.0)], 0.0, "Ap∩Ap", 5))
    out.append(_pair("ap-k5-b", [(0.5, 0.1), (-0.5, 0.1)], [(1.5, 0.9), (-1.5, 0.9)], 0.0, "Ap∩Ap", 5))
    out.append(_pair("ap-cap", [(2.5, 1.0), (-2.5, 1.0)], [(5.0, 4.0), (-5.0, 4.0)], 0.0, "Ap∩Ap", None, k_max=3))
    out.append(_pair("ap-at-3", [(2.5, 1.0)], [], 3.0, "Ap∩Ap", 2, match_c=False))
    # --- lam = 0.5 between lattice atoms (Ar on both halves)
    out.append(_pair("ar-no-eigen", [], [(5.0, 1.0)], 0.5, "Ar∩Ar", 0, match_c=False))
    out.append(_pair("ar-no-eigen-b", [(0.25, 0.3)], [], 0.5, "Ar∩Ar", 0, match_c=False))
    out.append(_pair("ar-k1", [], [(5.0, 1.0)], 0.5, "Ar∩Ar", 1))
    out.append(_pair("ar-k1-b", [(2.25, 0.5)], [(-3.75, 0.5)], 0.5, "Ar∩Ar", 1))
    out.append(_pair("ar-k2", [(1.75, 1.0)], [(3.0, 4.0)], 0.5, "Ar∩Ar", 2))
    out.append(_pair("ar-k2-b", [(0.25, 0.25)], [(-0.25, 2.25)], 0.5, "Ar∩Ar", 2))
    out.append(_pair("ar-k3", [(1.75, 1.0), (-0.75, 1.0)], [(3.0, 4.0), (-2.0, 4.0)], 0.5, "Ar∩Ar", 3))
    out.append(_pair("ar-k3-b", [(0.75, 0.1), (0.25, 0.1)], [(1.25, 0.9), (-0.25, 0.9)], 0.5, "Ar∩Ar", 3))
    out.append(_pair("ar-cap", [(1.75, 1.0), (-0.75, 1.0)], [(3.0, 4.0), (-2.0, 4.0)], 0.5, "Ar∩Ar", None, k_max=2))
    out.append(_pair("ar-root-of-phi", [], [(5.0, 1.0)], -0.2, "Ar∩Ar", 1, match_c=False))
    # --- one half has an atom, the other does not
    half = WeylCoefficient(_lattice(offset=0.5))
    lat = WeylCoefficient(_lattice())
    out.append(Case("mixed-ap-ar", lat, half, 0.0, "mixed Ap/Ar", 0))
    out.append(Case("mixed-ar-ap", half, lat, 0.5, "mixed Ap/Ar", 0))
    out.append(Case("mixed-extra-atom", lat, WeylCoefficient(_lattice([(0.5, 2.0)])), 0.5, "mixed Ap/Ar", 0))
    # --- A0 needs a continuous part: no atomic measure has A0 points
    leb = DensityPiece(0.0, 1.0, lambda t: 1.0 + 0 * np.asarray(t, dtype=float), label="unit")
    dens = WeylCoefficient(SpectralMeasure(densities=(leb,), families=(integer_atoms(1.0, 0.0),)))
    out.append(Case("a0-side", lat, dens, 0.5, "A0-side", 0))
    out.append(Case("a0-other-side", dens, lat, 0.5, "A0-side", 0))
    return out
