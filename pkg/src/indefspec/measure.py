"""Symbolic spectral measures and their moment integrals.

A measure is a finite list of atoms, any number of rule-generated atom
families (atoms indexed by integers, with declared growth exponents), and
density pieces with declared local power exponents at their endpoints.
Finite-versus-infinite questions are always answered from the declared
exponents; quadrature and summation only ever produce values for integrals
already known to converge.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np
from scipy import integrate

from .errors import NonConvergentTail, SpecError

REL_TOL = 1e-9
ABS_FLOOR = 1e-12
TAIL_TARGET = 1e-12
ATOM_MATCH = 1e-13


# --------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class Finite:
    value: complex | float


@dataclass(frozen=True)
class Divergent:
    reason: str = ""


IntegralValue = Finite | Divergent


class PointClass(enum.Enum):
    A0 = "A0"
    Ar = "Ar"
    Ap = "Ap"


def values_equal(a: complex, b: complex, rel: float = REL_TOL, floor: float = ABS_FLOOR) -> bool:
    return abs(a - b) <= max(floor, rel * max(abs(a), abs(b)))


@dataclass(frozen=True)
class Atom:
    t: float
    w: float


@dataclass(frozen=True, eq=False)
class AtomFamily:
    """Atoms at ``position(k)`` with mass ``weight(k)`` for integer k in a range.

    ``kmin``/``kmax`` of None mean the range is unbounded on that side.
    Weights must satisfy ``weight(k) ~ c |k|**weight_exponent`` and positions
    ``|position(k)| ~ a |k|**position_exponent`` with a positive position
    exponent, so the atoms only accumulate at infinity.  The callables must
    accept numpy integer arrays and mpmath numbers.
    """

    position: Callable
    weight: Callable
    kmin: int | None = None
    kmax: int | None = None
    weight_exponent: float | None = None
    position_exponent: float = 1.0
    label: str = ""
    position_mp: Callable | None = None
    weight_mp: Callable | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def key(self):
        return ("family", self.label or id(self), self.kmin, self.kmax)

    @property
    def is_finite(self) -> bool:
        return self.kmin is not None and self.kmax is not None

    def _pw(self, k):
        k = np.asarray(k, dtype=np.int64)
        kf = k.astype(float)
        p = np.asarray(self.position(kf), dtype=float) * np.ones_like(kf)
        w = np.asarray(self.weight(kf), dtype=float) * np.ones_like(kf)
        return p, w

    def sides(self) -> list[tuple[int, int]]:
        """(direction, first index) for each unbounded direction."""
        out = []
        if self.kmax is None:
            out.append((1, self.kmin if self.kmin is not None else 0))
        if self.kmin is None:
            out.append((-1, self.kmax if self.kmax is not None else -1))
        return out

    def split(self, radius: float):
        """Indices of atoms inside the near zone, and tail starts per side.

        Every tail atom satisfies ``|position| >= radius``.
        """
        ck = ("split", radius)
        if ck in self._cache:
            return self._cache[ck]
        if self.is_finite:
            near = np.arange(self.kmin, self.kmax + 1)
            res = (near, {})
            self._cache[ck] = res
            return res
        if self.weight_exponent is None:
            raise NonConvergentTail(f"atom family {self.label!r} has no declared tail exponent")
        if self.position_exponent <= 0:
            raise SpecError("atom family positions must grow to infinity")
        pieces = []
        starts = {}
        for direction, k0 in self.sides():
            n = 256
            while True:
                ks = k0 + direction * np.arange(n)
                p, _ = self._pw(ks)
                inside = np.nonzero(np.abs(p) < radius)[0]
                last = inside[-1] + 1 if inside.size else 0
                if n - last >= max(128, last):
                    break
                n *= 2
                if n > 1 << 26:
                    raise NonConvergentTail("atom family positions do not leave the near zone")
            pieces.append(k0 + direction * np.arange(last))
            starts[direction] = k0 + direction * last
        near = np.unique(np.concatenate(pieces)) if pieces else np.arange(0)
        if self.kmin is not None and self.kmax is None:
            near = near[near >= self.kmin]
        if self.kmax is not None and self.kmin is None:
            near = near[near <= self.kmax]
        res = (near, starts)
        self._cache[ck] = res
        return res

    def near_atoms(self, radius: float):
        near, _ = self.split(radius)
        return self._pw(near)

    def _mp_funcs(self):
        return (self.position_mp or self.position), (self.weight_mp or self.weight)

    def tail_constants(self, direction: int, start: int, mmax: int):
        """Return (R0, T) with T[m] = sum w p^-m over the tail, and
        R0 = sum w / (p (1 + p^2))."""
        ck = ("tail", direction, start)
        have = self._cache.get(ck)
        if have is not None and len(have[1]) > mmax:
            return have
        gamma = float(self.weight_exponent)
        sigma = float(self.position_exponent)
        block = 4096
        ks = start + direction * np.arange(block)
        p, w = self._pw(ks)
        pos_mp, w_mp = self._mp_funcs()
        k_last = abs(float(ks[-1])) + 1.0

        def tail_sum(values, decay, mp_term):
            partial = float(np.sum(values))
            if decay <= 1.0:
                raise NonConvergentTail(f"atom family {self.label!r}: tail diverges")
            rem = abs(values[-1]) * k_last / (decay - 1.0)
            if rem <= 1e-18 * max(1.0, abs(partial)):
                return partial
            first = int(start + direction * block)
            # Euler-Maclaurin: the default Richardson/Shanks heuristics fail
            # for slowly decaying series started far from the origin
            with mpmath.workdps(20):
                extra = mpmath.nsum(lambda n: mp_term(direction * n), [direction * first, mpmath.inf],
                                    method="euler-maclaurin")
            return partial + float(extra)

        r0 = tail_sum(w / (p * (1.0 + p * p)), 3 * sigma - gamma,
                      lambda k: w_mp(k) / (pos_mp(k) * (1 + pos_mp(k) ** 2)))
        T = np.zeros(mmax + 1)
        T[0] = T[1] = np.nan
        if sigma - gamma > 1.0:
            T[1] = tail_sum(w / p, sigma - gamma, lambda k: w_mp(k) / pos_mp(k))
        for m in range(2, mmax + 1):
            T[m] = tail_sum(w * p ** (-float(m)), m * sigma - gamma,
                            lambda k, m=m: w_mp(k) * pos_mp(k) ** (-m))
        res = (r0, T)
        self._cache[ck] = res
        return res

    def is_symmetric(self) -> bool:
        """Odd positions and even weights over a two-sided infinite range."""
        if self.kmin is not None or self.kmax is not None:
            return False
        ks = np.arange(1, 200)
        p1, w1 = self._pw(ks)
        p2, w2 = self._pw(-ks)
        return bool(np.allclose(p1, -p2, rtol=1e-14, atol=0) and np.allclose(w1, w2, rtol=1e-14, atol=0))


@dataclass(frozen=True, eq=False)
class DensityPiece:
    """Absolutely continuous piece ``func(t) dt`` on ``[a, b]``.

    ``left``/``right`` are the local power exponents at finite endpoints
    (density ~ |t - endpoint|**exponent), ``infinity`` the growth exponent
    at an infinite endpoint (density ~ |t|**infinity).  The density is taken
    to be positive in the interior except at the declared ``zeros``, given
    as ((t0, exponent), ...).
    """

    a: float
    b: float
    func: Callable
    left: float = 0.0
    right: float = 0.0
    infinity: float = 0.0
    zeros: tuple = ()
    label: str = ""

    def key(self):
        return ("density", self.label or id(self), self.a, self.b)

    def local_exponent(self, x: float) -> float | None:
        """Local power exponent of the density at real x, None if outside."""
        if x < self.a or x > self.b:
            return None
        if x == self.a:
            return self.left
        if x == self.b:
            return self.right
        for t0, beta in self.zeros:
            if x == t0:
                return beta
        return 0.0

    def __call__(self, t):
        return self.func(t)


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    atoms: tuple = ()
    families: tuple = ()
    densities: tuple = ()
    total_mass_infinite: bool | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms, key=lambda a: a.t)))
        fams = []
        extra = []
        for f in self.families:
            if f.is_finite:
                p, w = f._pw(np.arange(f.kmin, f.kmax + 1))
                extra.extend(Atom(float(x), float(y)) for x, y in zip(p, w))
            else:
                fams.append(f)
        if extra:
            object.__setattr__(self, "atoms", tuple(sorted(self.atoms + tuple(extra), key=lambda a: a.t)))
        object.__setattr__(self, "families", tuple(fams))
        object.__setattr__(self, "densities", tuple(self.densities))

    # structural helpers ------------------------------------------------
    def mass_is_infinite(self) -> bool:
        for f in self.families:
            if f.weight_exponent is not None and f.weight_exponent >= -1:
                return True
        for d in self.densities:
            if (math.isinf(d.a) or math.isinf(d.b)) and d.infinity >= -1:
                return True
        return False

    def atom_arrays(self, radius: float | None = None):
        """Positions and weights of finite atoms plus family atoms with
        |t| < radius (all family atoms below the tail cut)."""
        ts = [a.t for a in self.atoms]
        ws = [a.w for a in self.atoms]
        t = np.array(ts, dtype=float)
        w = np.array(ws, dtype=float)
        if radius is not None:
            for f in self.families:
                p, q = f.near_atoms(radius)
                t = np.concatenate([t, p])
                w = np.concatenate([w, q])
        return t, w


def lebesgue(a: float = -math.inf, b: float = math.inf) -> DensityPiece:
    return DensityPiece(a, b, lambda t: np.ones_like(np.asarray(t, dtype=float)), label="1")


def integer_atoms(weight: float = 1.0, offset: float = 0.0, step: float = 1.0,
                  kmin: int | None = None, kmax: int | None = None, label: str | None = None) -> AtomFamily:
    """Atoms of equal mass at offset + step*k."""
    lab = label or f"lattice(w={weight!r},off={offset!r},step={step!r})"
    return AtomFamily(lambda k: offset + step * k, lambda k: weight + 0 * k, kmin, kmax,
                      weight_exponent=0.0, position_exponent=1.0, label=lab)


# --------------------------------------------------------------------------
# invariants


def validate(sigma: SpectralMeasure) -> list[str]:
    """List violated invariants; empty when the measure is admissible."""
    problems: list[str] = []
    for a in sigma.atoms:
        if not a.w > 0:
            problems.append(f"atom at {a.t} has non-positive weight {a.w}")
    ts = [a.t for a in sigma.atoms]
    if len(set(ts)) != len(ts):
        problems.append("atom positions are not pairwise distinct")
    for f in sigma.families:
        if f.weight_exponent is None:
            problems.append(f"atom family {f.label!r} lacks a tail exponent")
            continue
        _, w = f.near_atoms(8.0)
        if w.size and np.any(w <= 0):
            problems.append(f"atom family {f.label!r} has non-positive weights")
        if f.weight_exponent - 2 * f.position_exponent >= -1:
            problems.append(f"atom family {f.label!r}: sum w/(1+t^2) diverges")
    ivs = sorted((d.a, d.b) for d in sigma.densities)
    for (a1, b1), (a2, b2) in zip(ivs, ivs[1:]):
        if a2 < b1:
            problems.append(f"density pieces [{a1},{b1}] and [{a2},{b2}] overlap")
    for d in sigma.densities:
        if not d.a < d.b:
            problems.append(f"density piece [{d.a},{d.b}] is empty")
        if math.isfinite(d.a) and d.left <= -1:
            problems.append(f"density piece at {d.a}: exponent {d.left} not integrable")
        if math.isfinite(d.b) and d.right <= -1:
            problems.append(f"density piece at {d.b}: exponent {d.right} not integrable")
        if (math.isinf(d.a) or math.isinf(d.b)) and d.infinity - 2 >= -1:
            problems.append(f"density piece [{d.a},{d.b}]: integral against 1/(1+t^2) diverges")
    infinite = sigma.mass_is_infinite()
    if not infinite:
        problems.append("total mass is finite")
    if sigma.total_mass_infinite is not None and sigma.total_mass_infinite != infinite:
        problems.append("declared total_mass_infinite flag disagrees with components")
    return problems


# --------------------------------------------------------------------------
# point queries


def _match(t: np.ndarray, lam: complex) -> np.ndarray:
    if isinstance(lam, complex) and lam.imag != 0:
        return np.zeros(t.shape, dtype=bool)
    x = float(np.real(lam))
    return np.abs(t - x) <= ATOM_MATCH * max(1.0, abs(x))


def _radius_for(lam_abs: float) -> float:
    return float(2.0 ** math.ceil(math.log2(max(8.0 * lam_abs, 8.0))))


def mass_at(sigma: SpectralMeasure, lam: float) -> float:
    if isinstance(lam, complex):
        if lam.imag != 0:
            return 0.0
        lam = lam.real
    t, w = sigma.atom_arrays(_radius_for(abs(lam)))
    hit = _match(t, lam)
    return float(np.sum(w[hit]))


def atom_hits(sigma: SpectralMeasure, xs: np.ndarray) -> np.ndarray:
    """Boolean mask of real points that coincide with an atom."""
    xs = np.asarray(xs, dtype=float)
    if not xs.size:
        return np.zeros(0, dtype=bool)
    t, _ = sigma.atom_arrays(_radius_for(float(np.max(np.abs(xs)))) if sigma.families else None)
    if not t.size:
        return np.zeros(xs.shape, dtype=bool)
    t = np.sort(t)
    i = np.clip(np.searchsorted(t, xs), 1, t.size - 1) if t.size > 1 else np.zeros(xs.shape, dtype=int)
    near = np.minimum(np.abs(t[i] - xs), np.abs(t[np.maximum(i - 1, 0)] - xs))
    return near <= ATOM_MATCH * np.maximum(1.0, np.abs(xs))


def _density_divergent(sigma: SpectralMeasure, x: float | None, power: float) -> str | None:
    """Reason string if |t-x|^-power dSigma diverges locally or at infinity."""
    for d in sigma.densities:
        if x is not None:
            beta = d.local_exponent(x)
            if beta is not None and beta - power <= -1:
                return f"density exponent {beta} at {x} against power {power}"
        if (math.isinf(d.a) or math.isinf(d.b)) and d.infinity - power >= -1:
            return f"density growth {d.infinity} at infinity against power {power}"
    return None


def _family_divergent(sigma: SpectralMeasure, power: float) -> str | None:
    for f in sigma.families:
        if f.weight_exponent is None:
            raise NonConvergentTail(f"atom family {f.label!r} lacks a tail exponent")
        if f.weight_exponent - power * f.position_exponent >= -1:
            return f"atom family {f.label!r} tail against power {power}"
    return None


# --------------------------------------------------------------------------
# numeric kernels: atoms


def _binom(n: int, k: int) -> float:
    return float(math.comb(n, k))


def _family_tails(sigma, lam_arr, kind, j=1, mu_arr=None, k2=1):
    """Sum of tail contributions of all families, vectorised over lam_arr."""
    out = np.zeros(lam_arr.shape, dtype=complex)
    if not sigma.families:
        return out
    amax = float(np.max(np.abs(lam_arr))) if lam_arr.size else 0.0
    if mu_arr is not None and mu_arr.size:
        amax = max(amax, float(np.max(np.abs(mu_arr))))
    radius = _radius_for(amax)
    ratio = amax / radius
    order = j + (k2 if kind == "mixed" else 0)
    nterms = 0
    if ratio > 0:
        while _binom(nterms + order, nterms) * ratio ** nterms > 1e-18 and nterms < 400:
            nterms += 1
    for f in sigma.families:
        _, starts = f.split(radius)
        for direction, start in starts.items():
            if kind == "reg":
                r0, T = f.tail_constants(direction, start, nterms + 2)
                acc = np.full(lam_arr.shape, r0, dtype=complex)
                pw = np.ones(lam_arr.shape, dtype=complex)
                for n in range(1, nterms + 1):
                    pw = pw * lam_arr
                    acc += pw * T[n + 1]
                out += acc
            elif kind == "signed":
                _, T = f.tail_constants(direction, start, nterms + j + 1)
                acc = np.zeros(lam_arr.shape, dtype=complex)
                pw = np.ones(lam_arr.shape, dtype=complex)
                for n in range(0, nterms + 1):
                    acc += _binom(n + j - 1, n) * pw * T[n + j]
                    pw = pw * lam_arr
                out += acc
            elif kind == "mixed":
                _, T = f.tail_constants(direction, start, 2 * nterms + j + k2 + 1)
                acc = np.zeros(lam_arr.shape, dtype=complex)
                for a in range(nterms + 1):
                    ca = _binom(a + j - 1, a) * lam_arr ** a
                    for b in range(nterms + 1 - a):
                        acc += ca * _binom(b + k2 - 1, b) * mu_arr ** b * T[a + b + j + k2]
                out += acc
            else:  # pragma: no cover - internal misuse
                raise ValueError(kind)
    return out


def _near_atoms(sigma, lam_arr):
    amax = float(np.max(np.abs(lam_arr))) if lam_arr.size else 0.0
    return sigma.atom_arrays(_radius_for(amax) if sigma.families else None)


def _exclusion_mask(t, lam_arr):
    lam_arr = np.asarray(lam_arr, dtype=complex)
    real = lam_arr.imag == 0
    diff = np.abs(t[None, :] - lam_arr.real[:, None])
    scale = np.maximum(1.0, np.abs(lam_arr.real))[:, None]
    return (diff <= ATOM_MATCH * scale) & real[:, None]


def atoms_regularized(sigma, lam_arr, derivative: int = 0):
    """Sum over atoms (t != lam) of w*(1/(t-lam) - t/(1+t^2)) for
    derivative 0, else w/(t-lam)^(derivative+1)."""
    lam_arr = np.asarray(lam_arr, dtype=complex)
    t, w = _near_atoms(sigma, lam_arr)
    out = np.zeros(lam_arr.shape, dtype=complex)
    if t.size:
        flat = lam_arr.reshape(-1)
        for s in range(0, flat.size, 2048):
            chunk = flat[s:s + 2048]
            excl = _exclusion_mask(t, chunk)
            diff = t[None, :] - chunk[:, None]
            diff = np.where(excl, 1.0, diff)
            if derivative == 0:
                terms = w[None, :] * (1.0 / diff - (t / (1.0 + t * t))[None, :])
            else:
                terms = w[None, :] / diff ** (derivative + 1)
            terms = np.where(excl, 0.0, terms)
            out.reshape(-1)[s:s + 2048] = terms.sum(axis=1)
    if derivative == 0:
        out += _family_tails(sigma, lam_arr, "reg")
    else:
        out += _family_tails(sigma, lam_arr, "signed", j=derivative + 1)
    return out


def atoms_mixed(sigma, lam, mu, j: int, k: int) -> complex:
    """Sum over atoms of w (t-lam)^-j (t-mu)^-k, excluding t = lam."""
    lam_arr = np.array([lam], dtype=complex)
    mu_arr = np.array([mu], dtype=complex)
    t, w = _near_atoms(sigma, np.array([lam, mu], dtype=complex))
    excl = _exclusion_mask(t, lam_arr)[0]
    tt, ww = t[~excl], w[~excl]
    val = complex(np.sum(ww / ((tt - lam) ** j * (tt - mu) ** k)))
    val += complex(_family_tails(sigma, lam_arr, "mixed", j=j, mu_arr=mu_arr, k2=k)[0])
    return val


# --------------------------------------------------------------------------
# numeric kernels: densities


def _cquad(g, a, b, points=None, limit=400):
    """Integrate complex g over [a, b] (either may be infinite)."""
    opts = dict(limit=limit, epsabs=1e-14, epsrel=1e-12)
    if math.isinf(a) or math.isinf(b):
        re = integrate.quad(lambda x: float(np.real(g(x))), a, b, **opts)[0]
        im = integrate.quad(lambda x: float(np.imag(g(x))), a, b, **opts)[0]
        return complex(re, im)
    if points:
        pts = sorted(p for p in points if a < p < b)
        edges = [a] + pts + [b]
        return sum(_cquad(g, lo, hi, None, limit) for lo, hi in zip(edges, edges[1:]))
    re = integrate.quad(lambda x: float(np.real(g(x))), a, b, **opts)[0]
    im = integrate.quad(lambda x: float(np.imag(g(x))), a, b, **opts)[0]
    return complex(re, im)


def _segments(d: DensityPiece, marks: Iterable[float]):
    """Break [a, b] at the marks, returning finite segments plus infinite ends."""
    a, b = d.a, d.b
    lo = a if math.isfinite(a) else None
    hi = b if math.isfinite(b) else None
    cuts = sorted({m for m in marks if (lo is None or m > lo) and (hi is None or m < hi)})
    if lo is None:
        first = (cuts[0] if cuts else (hi if hi is not None else 0.0)) - 1.0
        cuts = [first] + cuts
    if hi is None:
        last = (cuts[-1] if cuts else (lo if lo is not None else 0.0)) + 1.0
        cuts = cuts + [last]
    edges = ([lo] if lo is not None else [-math.inf]) + cuts + ([hi] if hi is not None else [math.inf])
    out = []
    for x, y in zip(edges, edges[1:]):
        if x < y:
            out.append((x, y))
    return out


def density_cauchy(d: DensityPiece, lam: complex, n: int = 0, regularized: bool = True) -> complex:
    """Integral of rho(t) [(t-lam)^-(n+1) - [n==0 and regularized] t/(1+t^2)] dt."""
    lam = complex(lam)
    x0, y = lam.real, lam.imag
    rho = d.func
    reg = regularized and n == 0

    def kern(t):
        if reg:
            return (1.0 + lam * t) / ((t - lam) * (1.0 + t * t))
        return (t - lam) ** (-(n + 1))

    def g(t):
        return complex(rho(t)) * kern(t)

    marks = [0.0, x0, x0 - 1.0, x0 + 1.0]
    win = None
    if y != 0 and d.a < x0 < d.b:
        width = min(x0 - d.a, d.b - x0, 1.0) * 0.5
        if abs(y) < 4 * width:
            win = (x0 - width, x0 + width)
            marks += list(win)
    total = 0j
    for lo, hi in _segments(d, marks):
        if win is not None and lo >= win[0] and hi <= win[1]:
            r0 = complex(rho(x0))

            def gs(t, r0=r0):
                return (complex(rho(t)) - r0) * (t - lam) ** (-(n + 1))

            part = _cquad(gs, lo, hi, points=[x0])
            if n == 0:
                part += r0 * (np.log((hi - lam) / (lo - lam)))
            else:
                part += r0 * ((hi - lam) ** (-n) - (lo - lam) ** (-n)) / (-n)
            if reg:
                part -= _cquad(lambda t: complex(rho(t)) * t / (1.0 + t * t), lo, hi)
            total += part
        else:
            pts = [x0] if y == 0 and lo < x0 < hi else None
            total += _cquad(g, lo, hi, points=pts)
    return total


def density_abs(d: DensityPiece, lam: complex, power: float) -> float:
    lam = complex(lam)

    def g(t):
        return float(d.func(t)) * abs(t - lam) ** (-power)

    total = 0.0
    for lo, hi in _segments(d, [0.0, lam.real, lam.real - 1, lam.real + 1]):
        total += _cquad(g, lo, hi).real
    return total


def density_mixed(d: DensityPiece, lam: complex, mu: complex, j: int, k: int) -> complex:
    def g(t):
        return complex(d.func(t)) * (t - lam) ** (-j) * (t - mu) ** (-k)

    total = 0j
    for lo, hi in _segments(d, [0.0, lam.real, lam.real - 1, lam.real + 1]):
        total += _cquad(g, lo, hi)
    return total


# --------------------------------------------------------------------------
# public moment operations


def _is_real(lam) -> bool:
    return not (isinstance(lam, complex) and lam.imag != 0)


def chi_moment(sigma: SpectralMeasure, lam: complex, j: int, absolute: bool) -> IntegralValue:
    """Moment of order j over R minus {lam}.

    ``absolute=True`` gives the integral of |t-lam|^(-2j); otherwise the
    signed integral of (t-lam)^(-j).  Divergence is decided from exponents.
    """
    if j < 1:
        raise ValueError("j must be a positive integer")
    lam = complex(lam)
    x = lam.real if lam.imag == 0 else None
    power = 2 * j if absolute else j
    reason = _density_divergent(sigma, x, power)
    fam_reason = _family_divergent(sigma, power)
    if reason:
        return Divergent(reason)
    if absolute:
        if fam_reason:
            return Divergent(fam_reason)
        if x is not None:
            val = atoms_regularized(sigma, np.array([lam]), derivative=2 * j - 1)[0].real
            for d in sigma.densities:
                val += density_cauchy(d, lam, n=2 * j - 1).real
            return Finite(float(val))
        return Finite(float(mixed_moment(sigma, lam, j, j).real))
    if j >= 2:
        if fam_reason:
            return Divergent(fam_reason)
        val = atoms_regularized(sigma, np.array([lam]), derivative=j - 1)[0]
        for d in sigma.densities:
            val += density_cauchy(d, lam, n=j - 1)
        return Finite(val.real if x is not None else complex(val))
    # j == 1: regularized Cauchy integral plus the principal sum of t/(1+t^2)
    shift = 0.0
    for f in sigma.families:
        if f.weight_exponent - f.position_exponent >= -1 and not f.is_symmetric():
            return Divergent(f"atom family {f.label!r}: sum w/|t| diverges")
    for d in sigma.densities:
        if (math.isinf(d.a) or math.isinf(d.b)) and d.infinity - 1 >= -1:
            return Divergent("density not integrable against 1/|t| at infinity")
    t, w = sigma.atom_arrays(None)
    shift += float(np.sum(w * t / (1 + t * t)))
    for f in sigma.families:
        if f.is_symmetric():
            continue
        r = _radius_for(abs(lam))
        p, q = f.near_atoms(r)
        shift += float(np.sum(q * p / (1 + p * p)))
        _, starts = f.split(r)
        for direction, start in starts.items():
            r0, T = f.tail_constants(direction, start, 4)
            shift += T[1] - r0
    for d in sigma.densities:
        shift += _cquad(lambda s: complex(d.func(s)) * s / (1 + s * s), d.a, d.b).real
    val = regularized_cauchy(sigma, lam) + shift
    return Finite(val.real if x is not None else complex(val))


def regularized_cauchy(sigma: SpectralMeasure, lam: complex) -> complex:
    """Integral over R minus {lam} of (1/(t-lam) - t/(1+t^2)) dSigma.

    Callers must ensure convergence (off the support or a finite first
    moment at lam)."""
    lam = complex(lam)
    val = complex(atoms_regularized(sigma, np.array([lam]), derivative=0)[0])
    for d in sigma.densities:
        val += density_cauchy(d, lam, n=0)
    return val


def signed_moment(sigma: SpectralMeasure, lam: complex, j: int) -> complex:
    """Integral over R minus {lam} of (t-lam)^-j, j >= 2 (convergence assumed)."""
    lam = complex(lam)
    val = complex(atoms_regularized(sigma, np.array([lam]), derivative=j - 1)[0])
    for d in sigma.densities:
        val += density_cauchy(d, lam, n=j - 1)
    return val


def mixed_moment(sigma: SpectralMeasure, lam: complex, j: int, k: int) -> complex:
    """Integral of (t-lam)^-j * conj((t-lam)^-k) over R minus {lam}."""
    lam = complex(lam)
    if lam.imag == 0:
        return signed_moment(sigma, lam, j + k)
    mu = lam.conjugate()
    val = atoms_mixed(sigma, lam, mu, j, k)
    for d in sigma.densities:
        val += density_mixed(d, lam, mu, j, k)
    return val


def classify_point(sigma: SpectralMeasure, lam: complex) -> PointClass:
    lam = complex(lam)
    if lam.imag == 0 and mass_at(sigma, lam.real) > 0:
        return PointClass.Ap
    if isinstance(chi_moment(sigma, lam, 1, True), Finite):
        return PointClass.Ar
    return PointClass.A0


# --------------------------------------------------------------------------
# spectra of the multiplication operator


@dataclass(frozen=True)
class PointSet:
    """Closed intervals, isolated points and rule-generated point families."""

    intervals: tuple = ()
    points: tuple = ()
    families: tuple = ()

    def contains(self, x: float, tol: float = 0.0) -> bool:
        for a, b in self.intervals:
            if a - tol <= x <= b + tol:
                return True
        for p in self.points:
            if abs(p - x) <= max(tol, ATOM_MATCH * max(1.0, abs(x))):
                return True
        for f in self.families:
            t, _ = f.near_atoms(_radius_for(abs(x)))
            if np.any(np.abs(t - x) <= max(tol, ATOM_MATCH * max(1.0, abs(x)))):
                return True
        return False

    def points_in(self, lo: float, hi: float) -> list[float]:
        out = [p for p in self.points if lo <= p <= hi]
        for f in self.families:
            t, _ = f.near_atoms(_radius_for(max(abs(lo), abs(hi))))
            out.extend(float(v) for v in t if lo <= v <= hi)
        return sorted(set(out))

    def is_empty(self) -> bool:
        return not (self.intervals or self.points or self.families)

    def as_dict(self) -> dict:
        return {
            "intervals": [[_jnum(a), _jnum(b)] for a, b in self.intervals],
            "points": [float(p) for p in self.points],
            "families": [f.label for f in self.families],
        }


def _jnum(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def merge_intervals(ivs: Iterable[tuple[float, float]]) -> tuple:
    ivs = sorted(ivs)
    out: list[list[float]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def q_spectrum(sigma: SpectralMeasure) -> tuple[PointSet, PointSet]:
    """(essential spectrum, point spectrum) of multiplication by t."""
    ess = merge_intervals((d.a, d.b) for d in sigma.densities)
    essential = PointSet(intervals=ess)
    point = PointSet(points=tuple(a.t for a in sigma.atoms), families=tuple(sigma.families))
    return essential, point


def discrete_points(sigma: SpectralMeasure) -> PointSet:
    """Atoms that are isolated points of the support."""
    ess, _ = q_spectrum(sigma)
    pts = tuple(a.t for a in sigma.atoms if not ess.contains(a.t))
    return PointSet(points=pts, families=tuple(sigma.families))


def support(sigma: SpectralMeasure) -> PointSet:
    ess, pt = q_spectrum(sigma)
    return PointSet(intervals=ess.intervals, points=pt.points, families=pt.families)


def canonical_equal(s1: SpectralMeasure, s2: SpectralMeasure, rel: float = 1e-12) -> bool:
    """Structural equality of two measures after sorting components."""
    if len(s1.atoms) != len(s2.atoms):
        return False
    for a, b in zip(s1.atoms, s2.atoms):
        if not (values_equal(a.t, b.t, rel, 0.0) and values_equal(a.w, b.w, rel, 0.0)):
            return False
    f1 = sorted(s1.families, key=lambda f: repr(f.key()))
    f2 = sorted(s2.families, key=lambda f: repr(f.key()))
    if [repr(f.key()) for f in f1] != [repr(f.key()) for f in f2]:
        return False
    # labels are user-supplied, so also compare the atoms they generate
    for a, b in zip(f1, f2):
        ks = np.arange(-64, 65)
        if a.kmin is not None:
            ks = ks[ks >= a.kmin]
        if a.kmax is not None:
            ks = ks[ks <= a.kmax]
        pa, wa = a._pw(ks)
        pb, wb = b._pw(ks)
        if not (np.allclose(pa, pb, rtol=rel, atol=0) and np.allclose(wa, wb, rtol=rel, atol=0)):
            return False
    d1 = sorted(s1.densities, key=lambda d: repr(d.key()))
    d2 = sorted(s2.densities, key=lambda d: repr(d.key()))
    if [repr(d.key()) for d in d1] != [repr(d.key()) for d in d2]:
        return False
    for a, b in zip(d1, d2):
        lo = a.a if math.isfinite(a.a) else min(a.b, 0.0) - 50.0
        hi = a.b if math.isfinite(a.b) else max(a.a, 0.0) + 50.0
        ts = np.linspace(lo, hi, 41)[1:-1]
        va = np.asarray(a(ts), dtype=float) * np.ones_like(ts)
        vb = np.asarray(b(ts), dtype=float) * np.ones_like(ts)
        if not np.allclose(va, vb, rtol=rel, atol=0):
            return False
    return True


def finite_atoms(pairs: Sequence[tuple[float, float]]) -> SpectralMeasure:
    return SpectralMeasure(atoms=tuple(Atom(float(t), float(w)) for t, w in pairs))
