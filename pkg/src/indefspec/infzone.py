"""Weyl data of infinite-zone potentials from band-edge sequences."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import brentq

from . import measure as ms
from .eigen import PhiEvaluator, SpectrumReport, discrete_spectrum, essential_spectrum
from .errors import AtXi, BranchAmbiguity, OutsideBand, SpecError, SummabilityUncertified
from .expr import Expr, compile_expr
from .measure import Atom, DensityPiece, PointClass, SpectralMeasure
from .weyl import WeylCoefficient, eval_M

ADAPTIVE_TARGET = 1e-10
ADAPTIVE_CAP = 1 << 16
FORM_TOL = 1e-9
EXTENDED_DPS = 50


def default_precision() -> str:
    return "extended" if os.environ.get("INDEFSPEC_PRECISION", "").lower() in ("extended", "mp", "high") else "double"


@dataclass(frozen=True)
class Gap:
    mul: float
    mur: float
    xi: float
    eps: int = 1

    @property
    def collapsed(self) -> bool:
        return self.mul == self.mur


@dataclass(frozen=True)
class ZoneTail:
    """Gaps beyond the explicit list: mul_j = mul_expr(j), mur_j = mul_j + gap_expr(j),
    with xi at the gap midpoint and eps = +1."""

    mul_expr: Expr
    gap_expr: Expr

    def gap(self, j: int) -> Gap:
        mul = float(self.mul_expr(float(j)))
        width = float(self.gap_expr(float(j)))
        return Gap(mul, mul + width, mul + 0.5 * width, 1)

    def arrays(self, j0: int, j1: int) -> tuple[np.ndarray, np.ndarray]:
        js = np.arange(j0, j1, dtype=float)
        mul = np.asarray(self.mul_expr(js), dtype=float) * np.ones_like(js)
        width = np.asarray(self.gap_expr(js), dtype=float) * np.ones_like(js)
        return mul, width


@dataclass(frozen=True, eq=False)
class ZoneSpec:
    mu0r: float
    gaps: tuple = ()
    tail: ZoneTail | None = None
    truncation: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def from_dict(d: dict) -> "ZoneSpec":
        try:
            gaps = tuple(Gap(float(g["mul"]), float(g["mur"]),
                             float(g.get("xi", 0.5 * (float(g["mul"]) + float(g["mur"])))),
                             int(g.get("eps", 1))) for g in d.get("gaps", []))
            tail = None
            if d.get("tail"):
                tail = ZoneTail(compile_expr(d["tail"]["mul_expr"], "j"), compile_expr(d["tail"]["gap_expr"], "j"))
            z = ZoneSpec(float(d["mu0r"]), gaps, tail, d.get("truncation"))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad zone spec: {exc}") from exc
        z.validate()
        return z

    def gap(self, j: int) -> Gap:
        """Gap number j (1-based)."""
        if j <= len(self.gaps):
            return self.gaps[j - 1]
        if self.tail is None:
            raise SummabilityUncertified(f"gap {j} requested but no tail formula is declared")
        return self.tail.gap(j)

    def gap_list(self, n: int) -> list[Gap]:
        if self.tail is None:
            n = min(n, len(self.gaps))
        return [self.gap(j) for j in range(1, n + 1)]

    def default_n(self) -> int:
        if self.truncation is not None:
            return int(self.truncation)
        return len(self.gaps) if self.tail is None else max(len(self.gaps), 64)

    def validate(self) -> None:
        prev = self.mu0r
        for j, g in enumerate(self.gap_list(len(self.gaps) + (256 if self.tail else 0)), start=1):
            if not (g.mul <= g.mur):
                raise SpecError(f"gap {j}: mul > mur")
            if not (g.mul > prev or (g.collapsed and g.mul >= prev)):
                raise SpecError(f"gap {j}: band edges out of order")
            if not (g.mul <= g.xi <= g.mur):
                raise SpecError(f"gap {j}: xi outside [mul, mur]")
            if g.eps not in (-1, 1):
                raise SpecError(f"gap {j}: eps must be +1 or -1")
            if g.mul == 0:
                raise SpecError(f"gap {j}: mul = 0 cannot normalise the products")
            prev = g.mur
        if self.tail is not None:
            self.summability_exponents()

    def summability_exponents(self) -> tuple[float, float]:
        """Fitted decay exponents of 1/mul_j and mur_j*(mur_j - mul_j)."""
        if "summ" in self._cache:
            return self._cache["summ"]
        js = np.array([2.0 ** 12, 2.0 ** 16, 2.0 ** 20])
        mul = np.asarray(self.tail.mul_expr(js), dtype=float) * np.ones_like(js)
        width = np.asarray(self.tail.gap_expr(js), dtype=float) * np.ones_like(js)
        if np.any(mul <= 0):
            raise SummabilityUncertified("tail band edges must grow to +infinity")
        a = -np.polyfit(np.log(js), np.log(mul), 1)[0]
        prod = (mul + width) * width
        if np.all(width == 0):
            b = -math.inf
        elif np.any(prod <= 0):
            raise SummabilityUncertified("tail gap widths must be nonnegative")
        else:
            b = np.polyfit(np.log(js), np.log(prod), 1)[0]
        if not (a < -1.0 - 1e-3 and b < -1.0 - 1e-3):
            raise SummabilityUncertified(f"tail sums not certified: 1/mul ~ j^{a:.3f}, mur*gap ~ j^{b:.3f}")
        self._cache["summ"] = (a, b)
        return a, b

    # cached per-N arrays -------------------------------------------------
    def _arrays(self, n: int):
        key = ("arr", n)
        if key not in self._cache:
            gl = self.gap_list(n)
            mul = np.array([g.mul for g in gl])
            mur = np.array([g.mur for g in gl])
            xi = np.array([g.xi for g in gl])
            eps = np.array([g.eps for g in gl], dtype=float)
            self._cache[key] = (mul, mur, xi, eps)
        return self._cache[key]


@dataclass(frozen=True)
class ZoneValues:
    g: complex
    f: complex
    k: complex
    h: complex
    tail_bound: float
    n: int


# --------------------------------------------------------------------------
# k-sum constants c_j = eps_j sqrt(-f(xi_j)) / g'(xi_j)


def _k_constants(Z: ZoneSpec, n: int, reduced: bool) -> tuple[np.ndarray, np.ndarray]:
    """(xi, c) over open gaps j <= n; the full constants include the
    collapsed-gap normalisations, the reduced ones drop them."""
    key = ("kc", n, reduced)
    if key in Z._cache:
        return Z._cache[key]
    mul, mur, xi, eps = Z._arrays(n)
    open_ = mul != mur
    idx = np.nonzero(open_)[0]
    xo, lo, ro = xi[idx], mul[idx], mur[idx]
    c = np.zeros(idx.size)
    for a, j in enumerate(idx):
        # -f(xi_j)/g'(xi_j)^2 with the mul normalisations cancelled
        val = (xo[a] - Z.mu0r) * (ro[a] - xo[a]) * (xo[a] - lo[a])
        if val <= 0:
            continue
        others = np.arange(idx.size) != a
        ratio = (xo[a] - lo[others]) * (xo[a] - ro[others]) / (xo[a] - xo[others]) ** 2
        mag = math.sqrt(val) * math.sqrt(float(np.prod(ratio)))
        # sign of g'(xi_j): its factors (xi_i - xi_j)/mul_i over all i != j
        # (collapsed gaps included) and -1/mul_j
        if reduced:
            sgn = -(-1.0) ** int(np.sum(idx < j)) * float(np.prod(np.sign(lo)))
        else:
            sgn = -(-1.0) ** int(j) * float(np.prod(np.sign(mul)))
        c[a] = eps[j] * mag / sgn
    Z._cache[key] = (xo, c)
    return xo, c


def _check_xi(Z: ZoneSpec, lam: np.ndarray, n: int) -> None:
    xo, _ = _k_constants(Z, n, True)
    if xo.size and np.any(np.min(np.abs(lam[..., None] - xo[None, :]), axis=-1) == 0):
        raise AtXi("evaluation point coincides with a divisor point of an open gap")


def _eval_double(Z: ZoneSpec, lam, n: int, reduced: bool):
    lam = np.asarray(lam, dtype=complex)
    _check_xi(Z, lam.reshape(-1), n)
    mul, mur, xi, _ = Z._arrays(n)
    if reduced:
        keep = mul != mur
        mul_r, mur_r, xi_r = mul[keep], mur[keep], xi[keep]
    else:
        mul_r, mur_r, xi_r = mul, mur, xi
    L = lam[..., None]
    g = np.prod((xi_r - L) / mul_r, axis=-1)
    f = (lam - Z.mu0r) * np.prod((L - mul_r) * (L - mur_r) / mul_r ** 2, axis=-1)
    xo, c = _k_constants(Z, n, reduced)
    if xo.size:
        k = g * np.sum(c / (L - xo), axis=-1)
    else:
        k = np.zeros_like(g)
    h = (f + k * k) / g
    return g, f, k, h


def _eval_extended(Z: ZoneSpec, lam: complex, n: int, reduced: bool):
    with mpmath.workdps(EXTENDED_DPS):
        gl = Z.gap_list(n)
        if reduced:
            gl = [gp for gp in gl if not gp.collapsed]
        lam_m = mpmath.mpc(lam)
        opened = [gp for gp in gl if not gp.collapsed]
        if any(lam_m == gp.xi for gp in opened):
            raise AtXi("evaluation point coincides with a divisor point of an open gap")

        def g_at(z):
            out = mpmath.mpf(1)
            for gp in gl:
                out *= (gp.xi - z) / gp.mul
            return out

        def f_at(z):
            out = z - Z.mu0r
            for gp in gl:
                out *= (z - gp.mul) * (z - gp.mur) / mpmath.mpf(gp.mul) ** 2
            return out

        def gprime_at(j):
            out = -1 / mpmath.mpf(gl[j].mul)
            for i, gp in enumerate(gl):
                if i != j:
                    out *= (gp.xi - gl[j].xi) / gp.mul
            return out

        key = ("kc_mp", n, reduced)
        if key not in Z._cache:
            Z._cache[key] = [(mpmath.mpf(gp.xi), gp.eps * mpmath.sqrt(max(-f_at(mpmath.mpf(gp.xi)), 0)) / gprime_at(j))
                             for j, gp in enumerate(gl) if not gp.collapsed]
        g = g_at(lam_m)
        f = f_at(lam_m)
        ksum = mpmath.mpf(0)
        for x, c in Z._cache[key]:
            ksum += c / (lam_m - x)
        k = g * ksum
        h = (f + k * k) / g
        return complex(g), complex(f), complex(k), complex(h)


def _eval(Z: ZoneSpec, lam, n: int, reduced: bool, precision: str | None):
    if (precision or default_precision()) == "extended":
        arr = np.asarray(lam, dtype=complex)
        outs = [_eval_extended(Z, complex(v), n, reduced) for v in arr.reshape(-1)]
        g, f, k, h = (np.array([o[i] for o in outs]).reshape(arr.shape) for i in range(4))
        return g, f, k, h
    return _eval_double(Z, lam, n, reduced)


# --------------------------------------------------------------------------
# truncation


def tail_bound(Z: ZoneSpec, lam: complex, n: int) -> float:
    """Estimate of the relative truncation error of m at level n: the sum
    over omitted gaps of width / distance to lam."""
    if Z.tail is None:
        return 0.0 if n >= len(Z.gaps) else math.inf
    lam = complex(lam)
    j0 = max(n + 1, len(Z.gaps) + 1)
    explicit = sum((g.mur - g.mul) / max(_dist(lam, g.mul, g.mur), 1e-300)
                   for g in Z.gaps[n:])
    block = 4096
    mul, width = Z.tail.arrays(j0, j0 + block)
    d = np.maximum(np.where(lam.real < mul, np.hypot(mul - lam.real, lam.imag),
                            np.where(lam.real > mul + width, np.hypot(lam.real - mul - width, lam.imag),
                                     abs(lam.imag))), 1e-300)
    terms = width / d
    total = explicit + float(np.sum(terms))
    if terms[-1] > 0:
        # power-law extrapolation of the remaining terms
        a, b = terms[block // 2], terms[-1]
        ja, jb = j0 + block // 2, j0 + block - 1
        if a > 0 and b > 0 and a != b:
            p = -math.log(b / a) / math.log(jb / ja)
            total += b * jb / (p - 1) if p > 1 else math.inf
    return total


def _dist(lam: complex, a: float, b: float) -> float:
    x = min(max(lam.real, a), b)
    return abs(lam - x)


def choose_n(Z: ZoneSpec, lam: complex, n: int | None) -> tuple[int, float]:
    if n is not None:
        return n, tail_bound(Z, lam, n)
    if Z.truncation is not None:
        return int(Z.truncation), tail_bound(Z, lam, int(Z.truncation))
    if Z.tail is None:
        return len(Z.gaps), 0.0
    n = max(1, len(Z.gaps))
    bound = tail_bound(Z, lam, n)
    while bound > ADAPTIVE_TARGET and n < ADAPTIVE_CAP:
        n = min(2 * n, ADAPTIVE_CAP)
        bound = tail_bound(Z, lam, n)
    return n, bound


# --------------------------------------------------------------------------
# public operations


def build_zone_functions(Z: ZoneSpec, lam: complex, n: int | None = None,
                         precision: str | None = None) -> ZoneValues:
    n, bound = choose_n(Z, lam, n)
    g, f, k, h = _eval(Z, complex(lam), n, False, precision)
    return ZoneValues(complex(g), complex(f), complex(k), complex(h), bound, n)


def identity_residual(Z: ZoneSpec, samples, n: int | None = None, precision: str | None = None) -> float:
    """max |h g - k^2 - f| / (1 + |f|) over the samples."""
    n, _ = choose_n(Z, complex(samples[0]), n)
    g, f, k, h = _eval(Z, np.asarray(samples, dtype=complex), n, False, precision)
    return float(np.max(np.abs(h * g - k * k - f) / (1 + np.abs(f))))


def _herglotz_branch(g, f, k, lam, side: str):
    """sqrt(f) with the sign making m_side Herglotz at nonreal lam."""
    s = np.sqrt(f)
    m1 = g / (k - 1j * s) if side == "+" else -g / (k + 1j * s)
    m2 = g / (k + 1j * s) if side == "+" else -g / (k - 1j * s)
    pick = np.imag(m1) * np.sign(np.imag(lam)) >= np.imag(m2) * np.sign(np.imag(lam))
    return np.where(pick, s, -s)


def _branch(Z: ZoneSpec, lam, n: int, side: str, precision: str | None):
    """Reduced g, f, k, h and the Herglotz branch s of sqrt(f) at lam (array
    or scalar); on the real axis the branch is continued from just above."""
    arr = np.asarray(lam, dtype=complex)
    g, f, k, h = (np.asarray(v, dtype=complex) for v in _eval(Z, arr, n, True, precision))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.asarray(_herglotz_branch(g, f, k, arr, side), dtype=complex)
        real = arr.imag == 0
        if np.any(real):
            xs = arr[real].real
            up = xs + 1j * 1e-7 * np.maximum(1.0, np.abs(xs))
            gu, fu, ku, _ = _eval(Z, up, n, True, precision)
            su = _herglotz_branch(gu, fu, ku, up, side)
            s0 = np.sqrt(f[real])
            s[real] = np.where(np.abs(s0 - su) <= np.abs(-s0 - su), s0, -s0)
    if arr.ndim == 0:
        return complex(g), complex(f), complex(k), complex(h), complex(s)
    return g, f, k, h, s


def m_coefficient(Z: ZoneSpec, lam, side: str = "+", n: int | None = None,
                  precision: str | None = None, check: bool = True):
    """Half-line m-coefficient of the zone potential on the given side
    (scalar or array argument)."""
    arr = np.asarray(lam, dtype=complex)
    if n is None:
        n, _ = choose_n(Z, complex(arr.reshape(-1)[0]) if arr.size else 0j, None)
    g, f, k, h, s = _branch(Z, arr, n, side, precision)
    with np.errstate(divide="ignore", invalid="ignore"):
        if side == "+":
            first = g / (k - 1j * s)
            second = (k + 1j * s) / h
        else:
            first = -g / (k + 1j * s)
            second = -(k - 1j * s) / h
    if check:
        bad = np.abs(first - second) > np.maximum(1e-12, FORM_TOL * np.maximum(np.abs(first), np.abs(second)))
        if np.any(bad):
            where = arr.reshape(-1)[np.argmax(np.reshape(bad, -1))] if arr.ndim else arr
            raise BranchAmbiguity(f"closed forms disagree at {complex(where)}")
    return first


def indefinite_weyl(Z: ZoneSpec, lam, side: str = "+", n: int | None = None,
                    precision: str | None = None):
    """M_side of the indefinite operator (scalar or array argument)."""
    lam = np.asarray(lam, dtype=complex) if np.ndim(lam) else complex(lam)
    if side == "+":
        return m_coefficient(Z, lam, "+", n, precision)
    return -m_coefficient(Z, -lam, "-", n, precision)


def bands(Z: ZoneSpec, n: int | None = None) -> list[tuple[float, float]]:
    """Spectral bands of the whole-line operator at truncation level n."""
    n = Z.default_n() if n is None else n
    out = []
    left = Z.mu0r
    for g in Z.gap_list(n):
        if g.collapsed:
            continue
        out.append((left, g.mul))
        left = g.mur
    out.append((left, math.inf))
    return out


def open_gaps(Z: ZoneSpec, n: int | None = None) -> list[Gap]:
    n = Z.default_n() if n is None else n
    return [g for g in Z.gap_list(n) if not g.collapsed]


def _density_values(Z: ZoneSpec, mu: np.ndarray, n: int) -> np.ndarray:
    g, f, k, h = _eval_double(Z, mu.astype(complex), n, True)
    f = np.maximum(f.real, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(f) / (math.pi * np.abs(h.real))


def band_density(Z: ZoneSpec, t: float, side: str = "+", n: int | None = None) -> float:
    n = Z.default_n() if n is None else n
    mu = t if side == "+" else -t
    if not any(a <= mu <= b for a, b in bands(Z, n)):
        raise OutsideBand(f"{t} is not in a band of side {side}")
    return float(_density_values(Z, np.array([mu], dtype=float), n)[0])


def _h_real(Z: ZoneSpec, x: float, n: int) -> float:
    return float(_eval_double(Z, np.array([x], dtype=complex), n, True)[3][0].real)


def _gap_windows(Z: ZoneSpec, n: int) -> list[tuple[float, float]]:
    bs = bands(Z, n)
    span = max(10.0, 10.0 * (bs[0][1] - bs[0][0]) if math.isfinite(bs[0][1]) else 10.0)
    wins = [(Z.mu0r - span, Z.mu0r)]
    wins.extend((g.mul, g.mur) for g in open_gaps(Z, n))
    return wins


@dataclass(frozen=True)
class ZoneAtom:
    point: float  # eigenvalue of the half-line problem (spectral variable of M_side)
    mass: float


def a0_discrete(Z: ZoneSpec, side: str = "+", n: int | None = None, with_mass: bool = False):
    """Poles of the side m-coefficient in the gaps, as points of M_side."""
    n = Z.default_n() if n is None else n
    xo, _ = _k_constants(Z, n, True)
    out = []
    for a, b in _gap_windows(Z, n):
        s = np.linspace(0.0, 1.0, 802)[1:-1]
        xs = a + (b - a) * (1 - np.cos(np.pi * s)) / 2
        xs = xs[np.min(np.abs(xs[:, None] - xo[None, :]), axis=1) > 1e-12 * max(1.0, abs(b))] if xo.size else xs
        hs = _eval_double(Z, xs.astype(complex), n, True)[3].real
        for i in np.nonzero(np.sign(hs[1:]) != np.sign(hs[:-1]))[0]:
            try:
                x0 = brentq(lambda x: _h_real(Z, x, n), xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15)
            except ValueError:
                continue
            scale = max(1.0, np.max(np.abs(hs[max(i - 2, 0): i + 3])))
            if abs(_h_real(Z, x0, n)) > 1e-8 * scale:
                continue  # sign change through a pole, not a zero
            g, f, k, h, sroot = _branch(Z, complex(x0), n, side, None)
            num = k + 1j * sroot if side == "+" else k - 1j * sroot
            if abs(num) <= 1e-8 * max(1.0, abs(k)):
                continue
            point = x0 if side == "+" else -x0
            if with_mass:
                out.append(ZoneAtom(point, atom_mass(Z, x0, side, n, (a, b))))
            else:
                out.append(point)
    return sorted(out, key=lambda v: v.point if with_mass else v)


def atom_mass(Z: ZoneSpec, x0: float, side: str, n: int, window: tuple[float, float]) -> float:
    """Mass of the atom of M_side from the residue of m_side at its pole x0
    (x0 in the spectral variable of m_side)."""
    a, b = window
    r = 0.25 * min(x0 - a, b - x0, 1.0)
    xo, _ = _k_constants(Z, n, True)
    if xo.size:
        near = np.abs(xo - x0)
        near = near[near > 0]
        if near.size:
            r = min(r, 0.5 * float(np.min(near)))
    th = 2 * np.pi * (np.arange(64) + 0.5) / 64
    zs = x0 + r * np.exp(1j * th)
    vals = np.array([m_coefficient(Z, z, side, n, check=False) for z in zs])
    residue = complex(np.mean(vals * r * np.exp(1j * th)))
    return float(-residue.real)


def residue_mass(Z: ZoneSpec, x0: float, side: str, n: int) -> float:
    """Same mass from -numerator/h' at the zero of h."""
    g, f, k, h, s = _branch(Z, complex(x0), n, side, None)
    step = 1e-5 * max(1.0, abs(x0))
    hp = (-_h_real(Z, x0 + 2 * step, n) + 8 * _h_real(Z, x0 + step, n)
          - 8 * _h_real(Z, x0 - step, n) + _h_real(Z, x0 - 2 * step, n)) / (12 * step)
    num = k + 1j * s if side == "+" else -(k - 1j * s)
    return float((-num / hp).real)


# --------------------------------------------------------------------------
# measures and spectrum


def _edge_exponent(func, edge: float, direction: float) -> float:
    """Local power exponent of func at an edge, rounded to a half-integer."""
    scale = max(1.0, abs(edge))
    d1, d2 = 1e-6 * scale, 1e-8 * scale
    v1, v2 = float(func(np.array([edge + direction * d1]))[0]), float(func(np.array([edge + direction * d2]))[0])
    if v1 <= 0 or v2 <= 0:
        return 0.5
    return round(2 * math.log(v1 / v2) / math.log(d1 / d2)) / 2


def reconstruct_measure(Z: ZoneSpec, side: str = "+", n: int | None = None) -> WeylCoefficient:
    """Spectral measure and constant of M_side from the zone data."""
    n = Z.default_n() if n is None else n
    key = ("measure", side, n)
    if key in Z._cache:
        return Z._cache[key]
    sgn = 1.0 if side == "+" else -1.0
    pieces = []
    for a, b in bands(Z, n):
        def dens(t, _s=sgn):
            t = np.asarray(t, dtype=float)
            return _density_values(Z, np.atleast_1d(_s * t), n).reshape(t.shape)
        left = _edge_exponent(dens, a, 1.0) if side == "+" else None
        if side == "+":
            lo, hi = a, b
            right = _edge_exponent(dens, b, -1.0) if math.isfinite(b) else 0.0
        else:
            lo, hi = -b, -a
            right = _edge_exponent(dens, -a, -1.0)
            left = _edge_exponent(dens, -b, 1.0) if math.isfinite(b) else 0.0
        pieces.append(DensityPiece(lo, hi, dens, left=left, right=right, infinity=-0.5,
                                   label=f"zone band {side}[{a},{b}]"))
    atoms = tuple(Atom(za.point, za.mass) for za in a0_discrete(Z, side, n, with_mass=True))
    sigma = SpectralMeasure(atoms=atoms, densities=tuple(pieces))
    probe = 1j
    target = indefinite_weyl(Z, probe, side, n)
    C = float((target - eval_M(WeylCoefficient(sigma, 0.0), probe)).real)
    W = WeylCoefficient(sigma, C)
    Z._cache[key] = W
    return W


class ZonePhiEvaluator(PhiEvaluator):
    """Phi from the closed-form Weyl coefficients of a zone spec; derivatives
    by Cauchy integrals on circles clear of both supports."""

    def __init__(self, Z: ZoneSpec, n: int, Wp: WeylCoefficient, Wm: WeylCoefficient):
        super().__init__(Wp, Wm)
        self.Z, self.n = Z, n
        edges = []
        for a, b in bands(Z, n):
            edges.extend([(a, b), (-b, -a)])
        self.edges = edges
        self.atoms = [a.t for W in (Wp, Wm) for a in W.measure.atoms]

    def m(self, side: str, z):
        return indefinite_weyl(self.Z, z, side, self.n)

    def value(self, z):
        return self.m("+", z) - self.m("-", z)

    def _clearance(self, z: complex) -> float:
        if z.imag != 0:
            return abs(z.imag)
        x = z.real
        d = min([_dist(z, a, b) for a, b in self.edges] + [abs(x - t) for t in self.atoms] + [1.0])
        return d

    def deriv(self, z, n: int):
        arr = np.asarray(z, dtype=complex)
        flat = arr.reshape(-1)
        th = 2 * np.pi * np.arange(64) / 64
        r = 0.5 * np.array([self._clearance(complex(v)) for v in flat])
        ring = flat[:, None] + r[:, None] * np.exp(1j * th)[None, :]
        vals = self.value(ring)
        out = math.factorial(n) * np.mean(vals * np.exp(-1j * n * th)[None, :], axis=1) / r ** n
        return out.reshape(arr.shape) if arr.ndim else complex(out[0])


def indefinite_spectrum(Z: ZoneSpec, region, n: int | None = None, probes: int = 20,
                        seed: int = 0) -> tuple[SpectrumReport, list]:
    """Spectrum of the indefinite zone operator inside the region, plus the
    embedded-eigenvalue probe results (point, classes of both halves)."""
    n = Z.default_n() if n is None else n
    Wp = reconstruct_measure(Z, "+", n)
    Wm = reconstruct_measure(Z, "-", n)
    ess = essential_spectrum(Wp.measure, Wm.measure)
    warnings: list[str] = []
    disc = discrete_spectrum(Wp, Wm, region, warnings=warnings, evaluator=ZonePhiEvaluator(Z, n, Wp, Wm))
    rng = np.random.default_rng(seed)
    checks = []
    pts = []
    for a, b in ess.intervals:
        lo = a if math.isfinite(a) else (b - 20.0 if math.isfinite(b) else -20.0)
        hi = b if math.isfinite(b) else lo + 40.0
        pts.extend(e for e in (a, b) if math.isfinite(e))
        pts.extend(rng.uniform(lo, hi, size=max(1, probes // max(1, len(ess.intervals)))))
    for t in pts:
        checks.append((float(t), ms.classify_point(Wp.measure, t).value, ms.classify_point(Wm.measure, t).value))
    for t, cp, cm in checks:
        if PointClass.A0.value not in (cp, cm):
            warnings.append(f"band point {t} is not A0 on either half")
    return SpectrumReport(ess, disc, False, warnings), checks
