"""The coupled model operator on indicator/rational-pole vectors.

Vectors are finite combinations of the indicator of {lam} and the functions
chi/(t-lam)^j (zero at t = lam), one combination per half.  On this family
(T* - lam) acts as an exact shift, so chain relations reduce to coefficient
algebra plus a handful of moment integrals for the boundary maps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import measure as ms
from .errors import DivergentMoment, NotInDomain, NotWellPosed
from .measure import Divergent, SpectralMeasure
from .weyl import WeylCoefficient, gamma1_pole

DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class HalfVector:
    """indicator * chi_{lam} + sum_j poles[j-1] * chi/(t-lam)^j."""

    indicator: complex = 0j
    poles: tuple = ()

    def _trim(self) -> "HalfVector":
        p = list(self.poles)
        while p and p[-1] == 0:
            p.pop()
        return HalfVector(complex(self.indicator), tuple(complex(c) for c in p))

    def __add__(self, other: "HalfVector") -> "HalfVector":
        n = max(len(self.poles), len(other.poles))
        a = list(self.poles) + [0j] * (n - len(self.poles))
        b = list(other.poles) + [0j] * (n - len(other.poles))
        return HalfVector(self.indicator + other.indicator, tuple(x + y for x, y in zip(a, b)))._trim()

    def __neg__(self) -> "HalfVector":
        return self.scale(-1)

    def __sub__(self, other: "HalfVector") -> "HalfVector":
        return self + (-other)

    def scale(self, c: complex) -> "HalfVector":
        return HalfVector(self.indicator * c, tuple(x * c for x in self.poles))._trim()

    def shift(self) -> "HalfVector":
        """Image under (T* - lam): R_j -> R_{j-1}, R_1 -> -I, I -> 0."""
        if not self.poles:
            return HalfVector()
        return HalfVector(-self.poles[0], tuple(self.poles[1:]))._trim()

    def inverse_shift(self) -> "HalfVector":
        """A preimage under the shift: I -> -R_1, R_j -> R_{j+1}."""
        return HalfVector(0j, (-self.indicator,) + tuple(self.poles))._trim()

    @property
    def degree(self) -> int:
        return len(self._trim().poles)

    def is_zero(self) -> bool:
        t = self._trim()
        return t.indicator == 0 and not t.poles


def indicator(c: complex = 1.0) -> HalfVector:
    return HalfVector(complex(c), ())


def pole(j: int, c: complex = 1.0) -> HalfVector:
    return HalfVector(0j, tuple([0j] * (j - 1) + [complex(c)]))


@dataclass(frozen=True)
class ChainVector:
    lam: complex
    plus: HalfVector = field(default_factory=HalfVector)
    minus: HalfVector = field(default_factory=HalfVector)


@dataclass(frozen=True)
class BoundaryData:
    g0: complex
    g1: complex


# --------------------------------------------------------------------------
# boundary maps


def _is_real(lam: complex) -> bool:
    return complex(lam).imag == 0


def _indicator_mass(sigma: SpectralMeasure, lam: complex) -> float:
    return ms.mass_at(sigma, complex(lam).real) if _is_real(lam) else 0.0


def check_domain(sigma: SpectralMeasure, v: HalfVector, lam: complex) -> None:
    """Raise NotInDomain/NotWellPosed unless v lies in dom(T*)."""
    if not sigma.mass_is_infinite():
        raise NotWellPosed("measure has finite total mass; Gamma_0 is not unique")
    for j, c in enumerate(v.poles, start=1):
        if c == 0:
            continue
        mom = ms.chi_moment(sigma, lam, j, True)
        if isinstance(mom, Divergent):
            raise NotInDomain(f"chi/(t-lam)^{j} is not square integrable: {mom.reason}")


def gamma0(sigma: SpectralMeasure, v: HalfVector, lam: complex) -> complex:
    check_domain(sigma, v, lam)
    return complex(v.poles[0]) if v.poles else 0j


def gamma1(sigma: SpectralMeasure, C: float, v: HalfVector, lam: complex) -> complex:
    check_domain(sigma, v, lam)
    W = WeylCoefficient(sigma, C)
    total = complex(v.indicator) * _indicator_mass(sigma, lam)
    for j, c in enumerate(v.poles, start=1):
        if c == 0:
            continue
        if j >= 2 and _is_real(lam):
            mom = ms.chi_moment(sigma, lam, j, False)
            if isinstance(mom, Divergent):
                raise DivergentMoment(f"signed moment of order {j} diverges: {mom.reason}")
        total += c * gamma1_pole(W, lam, j)
    return total


def boundary(W: WeylCoefficient, v: HalfVector, lam: complex) -> BoundaryData:
    return BoundaryData(gamma0(W.measure, v, lam), gamma1(W.measure, W.C, v, lam))


def apply_Tstar(sigma: SpectralMeasure, v: HalfVector, lam: complex) -> HalfVector:
    """T* v = lam v + shift(v), exact on the chain family."""
    check_domain(sigma, v, lam)
    return v.scale(lam) + v.shift()


def l2_norm(sigma: SpectralMeasure, v: HalfVector, lam: complex) -> float:
    """Norm in L^2(dSigma); inf when some pole term is not square integrable."""
    v = v._trim()
    total = abs(v.indicator) ** 2 * _indicator_mass(sigma, lam)
    idx = [j for j, c in enumerate(v.poles, start=1) if c != 0]
    for j in idx:
        if isinstance(ms.chi_moment(sigma, lam, j, True), Divergent):
            return math.inf
    for j in idx:
        for k in idx:
            total += (v.poles[j - 1] * np.conj(v.poles[k - 1]) * ms.mixed_moment(sigma, lam, j, k)).real
    return math.sqrt(max(total, 0.0))


def in_model_domain(Wp: WeylCoefficient, Wm: WeylCoefficient, v: ChainVector,
                    tol: float = DOMAIN_TOL) -> tuple[bool, float, float]:
    """Check the coupling Gamma0+ = Gamma0-, Gamma1+ = Gamma1-."""
    bp = boundary(Wp, v.plus, v.lam)
    bm = boundary(Wm, v.minus, v.lam)
    r0 = abs(bp.g0 - bm.g0)
    r1 = abs(bp.g1 - bm.g1)
    return (r0 <= tol and r1 <= tol), r0, r1


# --------------------------------------------------------------------------
# Jordan chains


@dataclass
class ChainResidual:
    shift_norm: float
    gamma0_gap: float
    gamma1_gap: float
    in_domain: bool
    note: str = ""

    @property
    def total(self) -> float:
        if not self.in_domain:
            return math.inf
        return max(self.shift_norm, self.gamma0_gap, self.gamma1_gap)


def jordan_residual_detail(Wp: WeylCoefficient, Wm: WeylCoefficient, lam: complex,
                           chain: list[ChainVector]) -> list[ChainResidual]:
    out = []
    prev = ChainVector(lam)
    for y in chain:
        try:
            _, r0, r1 = in_model_domain(Wp, Wm, y)
        except (NotInDomain, NotWellPosed, DivergentMoment) as exc:
            out.append(ChainResidual(math.inf, math.inf, math.inf, False, str(exc)))
            prev = y
            continue
        rp = y.plus.shift() - prev.plus
        rm = y.minus.shift() - prev.minus
        norm = math.hypot(l2_norm(Wp.measure, rp, lam), l2_norm(Wm.measure, rm, lam))
        out.append(ChainResidual(norm, r0, r1, True))
        prev = y
    return out


def jordan_residual(Wp: WeylCoefficient, Wm: WeylCoefficient, lam: complex,
                    chain: list[ChainVector]) -> list[float]:
    """Per element: max of the L^2 norm of (A - lam) y_n - y_{n-1} and the
    boundary-coupling mismatch; inf when y_n leaves the domain."""
    return [r.total for r in jordan_residual_detail(Wp, Wm, lam, chain)]


# --------------------------------------------------------------------------
# independent chain search


@dataclass
class ChainSearch:
    length: int
    exists: bool
    chain: list | None
    condition: str
    residual: float


def _kernel_vector(sigma: SpectralMeasure, lam: complex) -> HalfVector | None:
    """Spanning vector of ker(T* - lam) inside the chain family, if any."""
    if _indicator_mass(sigma, lam) > 0:
        return indicator()
    if not isinstance(ms.chi_moment(sigma, lam, 1, True), Divergent):
        return pole(1)
    return None


def find_chain(Wp: WeylCoefficient, Wm: WeylCoefficient, lam: complex, length: int,
               tol: float = DOMAIN_TOL) -> ChainSearch:
    """Search for a Jordan chain of the given length by linear algebra.

    Every chain element has the form y_n = sum_{m<=n} p_m S^{n-m} K per half,
    with S the inverse shift and K spanning the kernel of T* - lam on that
    half.  The coupling conditions for n < length give a homogeneous linear
    system in the p's; a chain exists iff it has a solution whose leading
    coefficients are not all zero.
    """
    lam = complex(lam)
    halves = []
    for name, W in (("plus", Wp), ("minus", Wm)):
        K = _kernel_vector(W.measure, lam)
        if K is None:
            continue
        basis = [K]
        for _ in range(length - 1):
            basis.append(basis[-1].inverse_shift())
        try:
            for b in basis:
                check_domain(W.measure, b, lam)
        except (NotInDomain, NotWellPosed) as exc:
            return ChainSearch(length, False, None,
                               f"y_{length - 1} leaves the domain on the {name} half: {exc}", math.inf)
        bd = [boundary(W, b, lam) for b in basis]
        halves.append((name, basis, bd))
    if not halves:
        return ChainSearch(length, False, None, "kernel of T* - lam is trivial on both halves", math.inf)
    # unknown layout: for each half, p_0..p_{L-1}
    L = length
    nun = L * len(halves)
    rows = []
    labels = []
    for n in range(L):
        for which in ("g0", "g1"):
            row = np.zeros(nun, dtype=complex)
            for h, (name, basis, bd) in enumerate(halves):
                sign = 1.0 if name == "plus" else -1.0
                for m in range(n + 1):
                    val = bd[n - m].g0 if which == "g0" else bd[n - m].g1
                    row[h * L + m] += sign * val
            rows.append(row)
            labels.append(f"Gamma{which[1]} coupling at level {n}")
    A = np.array(rows)
    # a one-sided kernel forces both halves of the coupled vector to vanish
    # together, so only half-owned leading coefficients are normalised
    best = None
    for h in range(len(halves)):
        lead = h * L
        rest = [c for c in range(nun) if c != lead]
        rhs = -A[:, lead]
        sub = A[:, rest]
        if sub.shape[1]:
            x, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
        else:
            x = np.zeros(0, dtype=complex)
        p = np.zeros(nun, dtype=complex)
        p[lead] = 1.0
        p[rest] = x
        res_vec = A @ p
        scale = max(1.0, np.linalg.norm(A, ord=2) * np.linalg.norm(p))
        rel = float(np.linalg.norm(res_vec) / scale)
        if best is None or rel < best[0]:
            best = (rel, p, res_vec)
    rel, p, res_vec = best
    if rel > tol:
        worst = int(np.argmax(np.abs(res_vec)))
        return ChainSearch(length, False, None, f"{labels[worst]} is inconsistent", rel)
    chain = []
    for n in range(L):
        parts = {"plus": HalfVector(), "minus": HalfVector()}
        for h, (name, basis, _) in enumerate(halves):
            v = HalfVector()
            for m in range(n + 1):
                v = v + basis[n - m].scale(p[h * L + m])
            parts[name] = v
        chain.append(ChainVector(lam, parts["plus"], parts["minus"]))
    return ChainSearch(length, True, chain, "ok", rel)


def max_chain_length(Wp: WeylCoefficient, Wm: WeylCoefficient, lam: complex, k_max: int,
                     tol: float = DOMAIN_TOL) -> tuple[int, ChainSearch | None, ChainSearch | None]:
    """Largest L <= k_max with a chain; returns (L, last success, first failure)."""
    last = None
    for L in range(1, k_max + 1):
        found = find_chain(Wp, Wm, lam, L, tol)
        if not found.exists:
            return L - 1, last, found
        last = found
    return k_max, last, None
