"""Eigenvalue classification, multiplicities and spectra of the coupled operator."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import measure as ms
from .errors import Degenerate, RegionTouchesEssential
from .measure import Divergent, PointClass, PointSet, SpectralMeasure
from .modelop import ChainVector, HalfVector, indicator, pole
from .weyl import PhiFunction, WeylCoefficient, eval_M, eval_Phi, eval_Phi_deriv, gamma1_pole

K_MAX = 32
ZERO_TOL = 1e-9
AMBIGUITY_FACTOR = 10.0


@dataclass(frozen=True)
class Multiplicity:
    kind: str  # "finite" | "at_least" | "infinite"
    value: int | None = None

    @staticmethod
    def finite(k: int) -> "Multiplicity":
        return Multiplicity("finite", k)

    @staticmethod
    def at_least(k: int) -> "Multiplicity":
        return Multiplicity("at_least", k)

    @staticmethod
    def infinite() -> "Multiplicity":
        return Multiplicity("infinite")

    def as_json(self):
        if self.kind == "finite":
            return self.value
        if self.kind == "at_least":
            return {"at_least": self.value}
        return "inf"


@dataclass
class EigenReport:
    lam: complex
    case: str
    is_eigenvalue: bool
    geometric: int
    algebraic: Multiplicity
    trace: list = field(default_factory=list)
    ambiguous: bool = False
    degenerate: bool = False
    chain: list | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "case": self.case,
            "is_eigenvalue": self.is_eigenvalue,
            "geometric": self.geometric,
            "algebraic": self.algebraic.as_json(),
            "ambiguous": self.ambiguous,
            "degenerate": self.degenerate,
            "trace": self.trace,
        }


@dataclass
class SpectrumReport:
    essential: PointSet
    discrete: list
    degenerate: bool = False
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "essential": self.essential.as_dict(),
            "discrete": [{"lambda": [z.real, z.imag], "multiplicity": k} for z, k in self.discrete],
            "degenerate": self.degenerate,
            "warnings": self.warnings,
        }


def _num(v):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def degenerate_check(Wp: WeylCoefficient, Wm: WeylCoefficient) -> bool:
    return ms.canonical_equal(Wp.measure, Wm.measure) and ms.values_equal(Wp.C, Wm.C, 1e-12, 1e-15)


def essential_spectrum(sp: SpectralMeasure, sm: SpectralMeasure) -> PointSet:
    ep, _ = ms.q_spectrum(sp)
    em, _ = ms.q_spectrum(sm)
    return PointSet(intervals=ms.merge_intervals(ep.intervals + em.intervals))


# --------------------------------------------------------------------------
# classifier


class _ZeroTest:
    """Zero test with tolerance scaled to the size of the compared terms."""

    def __init__(self, tol: float):
        self.tol = tol
        self.ambiguous = False

    def __call__(self, a: complex, b: complex) -> bool:
        scale = max(1.0, abs(a), abs(b))
        gap = abs(a - b) / scale
        if self.tol < gap <= AMBIGUITY_FACTOR * self.tol or gap <= self.tol < AMBIGUITY_FACTOR * gap:
            self.ambiguous = True
        return gap <= self.tol


def _moment_finite(W: WeylCoefficient, lam: complex, j: int) -> bool:
    """chi/(t-lam)^j square integrable."""
    return not isinstance(ms.chi_moment(W.measure, lam, j, True), Divergent)


def _cpm_condition(W: WeylCoefficient) -> bool:
    """C equals the first moment and the measure integrates 1/(1+|t|)."""
    s = W.measure
    for f in s.families:
        if f.weight_exponent is None or f.position_exponent - f.weight_exponent <= 1:
            return False
    for d in s.densities:
        if (math.isinf(d.a) or math.isinf(d.b)) and d.infinity - 1 >= -1:
            return False
    return True


def _ap_chain(Wp, Wm, lam: float, length: int) -> list[ChainVector]:
    """Chain from the common atom: y_n = S y_{n-1} + p_n I per half."""
    mass = {"plus": ms.mass_at(Wp.measure, lam), "minus": ms.mass_at(Wm.measure, lam)}
    F = {"plus": [None], "minus": [None]}
    for j in range(1, length):
        F["plus"].append(gamma1_pole(Wp, lam, j))
        F["minus"].append(gamma1_pole(Wm, lam, j))
    coeffs = {}
    for name, other in (("plus", "minus"), ("minus", "plus")):
        alpha = 1.0 / mass[name]
        p = [alpha] + [0.0] * (length - 1)
        if length >= 2:
            p[length - 1] = -alpha * sum(p[m_] * F[other][length - 1 - m_] for m_ in range(length - 1))
        coeffs[name] = p
    chain = []
    cur = {"plus": HalfVector(), "minus": HalfVector()}
    for n in range(length):
        for name in cur:
            cur[name] = cur[name].inverse_shift() + indicator(coeffs[name][n])
        chain.append(ChainVector(complex(lam), cur["plus"], cur["minus"]))
    return chain


def _ar_chain(lam: complex, length: int) -> list[ChainVector]:
    return [ChainVector(complex(lam), pole(n + 1), pole(n + 1)) for n in range(length)]


def classify_eigenvalue(Wp: WeylCoefficient, Wm: WeylCoefficient, lam: complex,
                        k_max: int = K_MAX, tol: float = ZERO_TOL,
                        essential: PointSet | None = None) -> EigenReport:
    """Decide whether lam is an eigenvalue and find its algebraic multiplicity.

    The returned report carries an explicit Jordan chain of the reported
    length (when finite and positive) so it can be certified independently.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    lam = complex(lam)
    trace: list[dict] = []
    if degenerate_check(Wp, Wm):
        ess = essential if essential is not None else essential_spectrum(Wp.measure, Wm.measure)
        off_ess = lam.imag != 0 or not ess.contains(lam.real)
        trace.append({"condition": "identical Weyl data", "holds": True})
        if off_ess:
            return EigenReport(lam, "degenerate", True, 1, Multiplicity.infinite(), trace, degenerate=True)
    cp = ms.classify_point(Wp.measure, lam)
    cm = ms.classify_point(Wm.measure, lam)
    trace.append({"condition": "point class", "plus": cp.value, "minus": cm.value})
    zero = _ZeroTest(tol)

    def report(case, is_eig, alg, chain=None):
        return EigenReport(lam, case, is_eig, 1 if is_eig else 0, alg, trace, zero.ambiguous,
                           degenerate_check(Wp, Wm), chain)

    if PointClass.A0 in (cp, cm):
        return report("A0-side", False, Multiplicity.finite(0))
    if cp != cm:
        return report("mixed Ap/Ar", False, Multiplicity.finite(0))
    cpm = _cpm_condition(Wp) and _cpm_condition(Wm)
    trace.append({"condition": "first moments finite (simplified equalities apply)", "holds": cpm})

    if cp == PointClass.Ap:
        x = lam.real
        mp_, mm_ = ms.mass_at(Wp.measure, x), ms.mass_at(Wm.measure, x)
        same = zero(mp_, mm_)
        trace.append({"condition": "equal atom masses", "plus": mp_, "minus": mm_, "holds": same})
        if not same:
            return report("Ap∩Ap", True, Multiplicity.finite(1), _ap_chain(Wp, Wm, x, 1))
        fin = _moment_finite(Wp, x, 1) and _moment_finite(Wm, x, 1)
        trace.append({"condition": "second moments finite", "j": 1, "holds": fin})
        if not fin:
            return report("Ap∩Ap", True, Multiplicity.finite(1), _ap_chain(Wp, Wm, x, 1))
        k = 2
        for j in range(2, k_max):
            fin = _moment_finite(Wp, x, j) and _moment_finite(Wm, x, j)
            entry = {"condition": "moments finite and Gamma1 equality", "j": j, "moments_finite": fin}
            if not fin:
                entry["holds"] = False
                trace.append(entry)
                break
            fp, fm = gamma1_pole(Wp, x, j - 1), gamma1_pole(Wm, x, j - 1)
            eq = zero(fp, fm)
            entry.update({"plus": _num(fp), "minus": _num(fm), "holds": eq})
            trace.append(entry)
            if not eq:
                break
            k = j + 1
        alg = Multiplicity.at_least(k_max) if k >= k_max else Multiplicity.finite(k)
        return report("Ap∩Ap", True, alg, _ap_chain(Wp, Wm, x, min(k, k_max)))

    # Ar on both halves
    k = 0
    for j in range(1, k_max + 1):
        fin = _moment_finite(Wp, lam, j) and _moment_finite(Wm, lam, j)
        entry = {"condition": "moments finite and Gamma1 equality", "j": j, "moments_finite": fin}
        if not fin:
            entry["holds"] = False
            trace.append(entry)
            break
        fp, fm = gamma1_pole(Wp, lam, j), gamma1_pole(Wm, lam, j)
        eq = zero(fp, fm)
        entry.update({"plus": _num(fp), "minus": _num(fm), "holds": eq})
        trace.append(entry)
        if not eq:
            break
        k = j
    if k == 0:
        return report("Ar∩Ar", False, Multiplicity.finite(0))
    alg = Multiplicity.at_least(k_max) if k >= k_max else Multiplicity.finite(k)
    return report("Ar∩Ar", True, alg, _ar_chain(lam, k))


# --------------------------------------------------------------------------
# supports


def _unbounded_dirs(s: SpectralMeasure) -> set[int]:
    dirs = set()
    for f in s.families:
        for direction, k0 in f.sides():
            p, _ = f._pw(np.array([k0 + direction * 10 ** 6]))
            dirs.add(1 if p[0] > 0 else -1)
    return dirs


def semibounded_flag(s: SpectralMeasure) -> bool:
    dirs = _unbounded_dirs(s)
    for d in s.densities:
        if math.isinf(d.a):
            dirs.add(-1)
        if math.isinf(d.b):
            dirs.add(1)
    return not (1 in dirs and -1 in dirs)


def definitizable_check(sp: SpectralMeasure, sm: SpectralMeasure) -> bool:
    """True iff the two supports are separated by finitely many points."""
    ip, im = ms.merge_intervals((d.a, d.b) for d in sp.densities), ms.merge_intervals((d.a, d.b) for d in sm.densities)
    for a, b in ip:
        for c, d in im:
            if min(b, d) > max(a, c):
                return False
    # a family running off to infinity interleaves with anything of the
    # other measure that is unbounded in the same direction
    for s1, s2, iv2 in ((sp, sm, im), (sm, sp, ip)):
        other = _unbounded_dirs(s2)
        for a, b in iv2:
            if math.isinf(a):
                other.add(-1)
            if math.isinf(b):
                other.add(1)
        if _unbounded_dirs(s1) & other:
            return False
    return True


# --------------------------------------------------------------------------
# discrete spectrum


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float


class PhiEvaluator:
    """Phi = M+ - M- and its derivatives, computed from the two measures."""

    def __init__(self, Wp: WeylCoefficient, Wm: WeylCoefficient):
        self.Wp, self.Wm = Wp, Wm
        self.phi = PhiFunction(Wp, Wm)

    def m(self, side: str, z):
        return eval_M(self.Wp if side == "+" else self.Wm, z)

    def value(self, z):
        return eval_Phi(self.phi, z)

    def deriv(self, z, n: int):
        return eval_Phi_deriv(self.phi, z, n)


def _support_marks(ev: PhiEvaluator, lo: float, hi: float) -> tuple[list[float], list[tuple[float, float]]]:
    pts: set[float] = set()
    ivs = []
    for W in (ev.Wp, ev.Wm):
        _, pt = ms.q_spectrum(W.measure)
        pts.update(pt.points_in(lo, hi))
        ivs.extend((d.a, d.b) for d in W.measure.densities)
    return sorted(pts), list(ms.merge_intervals(ivs))


def _phi_real(ev: PhiEvaluator, xs: np.ndarray) -> np.ndarray:
    return np.asarray(ev.value(xs.astype(complex))).real


def _laurent_order(func, z0: float, r: float, n: int = 64, rel: float = 1e-7) -> int:
    theta = 2 * np.pi * np.arange(n) / n
    vals = np.array([func(z0 + r * cmath.exp(1j * th)) for th in theta])
    b = np.fft.fft(vals) / n  # b_k = a_k r^k
    b = b[: n // 2]
    big = np.max(np.abs(b))
    if big == 0:
        return n // 2
    for k, c in enumerate(b):
        if abs(c) > rel * big:
            return k
    return n // 2


def _nearest_real_zero(ev: PhiEvaluator, side: str, x0: float, d: float) -> float:
    """Distance from x0 to the closest zero of M within d (M is real and
    increasing on gaps, and has no nonreal zeros)."""
    s = np.linspace(0.0, 1.0, 402)[1:-1]
    best = d
    for direction in (1.0, -1.0):
        xs = x0 + direction * d * s
        ys = np.asarray(ev.m(side, xs.astype(complex))).real
        flips = np.nonzero(np.sign(ys[1:]) != np.sign(ys[:-1]))[0]
        if flips.size:
            best = min(best, d * s[flips[0]])
    return best


def common_atom_multiplicity(ev: PhiEvaluator, x0: float, dist: float) -> int:
    """Order of x0 as a zero of 1/M+ - 1/M- (removable singularity at x0).

    ``dist`` is the distance to the nearest other support point; the circle
    also has to stay clear of the poles of 1/M, which sit at real zeros of M.
    """
    reach = min(_nearest_real_zero(ev, "+", x0, dist), _nearest_real_zero(ev, "-", x0, dist))
    radius = 0.5 * reach
    return _laurent_order(lambda z: 1.0 / ev.m("+", z) - 1.0 / ev.m("-", z), x0, radius)


def _zero_order(ev: PhiEvaluator, z: complex, tol: float, kmax: int) -> int:
    for n in range(1, kmax + 1):
        d = complex(ev.deriv(z, n)) / math.factorial(n)
        if abs(d) > tol:
            return n
    return kmax


def _gap_roots(ev: PhiEvaluator, a: float, b: float, grid: int, xtol: float) -> list[float]:
    """Real zeros of Phi on the open gap (a, b) by bracketing and bisection."""
    s = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    xs = a + (b - a) * (1 - np.cos(np.pi * s)) / 2
    ys = _phi_real(ev, xs)
    # refine cells where Phi' changes sign so each piece is monotone
    ds = np.asarray(ev.deriv(xs.astype(complex), 1)).real
    stack = [(xs[i], xs[i + 1], ys[i], ys[i + 1], ds[i], ds[i + 1]) for i in range(len(xs) - 1)]
    roots = []
    while stack:
        x0, x1, y0, y1, d0, d1 = stack.pop()
        if y0 == 0:
            roots.append(x0)
            continue
        if np.sign(y0) != np.sign(y1) and y1 != 0:
            roots.append(brentq(lambda x: float(_phi_real(ev, np.array([x]))[0]), x0, x1,
                                xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))
            continue
        if x1 - x0 < 1e-8:
            continue
        # an interior extremum may hide a pair of crossings
        if np.sign(d0) != np.sign(d1):
            xm = 0.5 * (x0 + x1)
            ym = float(_phi_real(ev, np.array([xm]))[0])
            dm = float(np.asarray(ev.deriv(np.array([xm], dtype=complex), 1)).real[0])
            stack.append((x0, xm, y0, ym, d0, dm))
            stack.append((xm, x1, ym, y1, dm, d1))
    return sorted(set(roots))


def real_roots(ev: PhiEvaluator, lo: float, hi: float, grid: int = 400, xtol: float = 1e-13) -> list[float]:
    """Zeros of Phi on (lo, hi) away from both supports."""
    pts, ivs = _support_marks(ev, lo, hi)
    marks = [lo] + [p for p in pts if lo < p < hi] + [hi]
    roots: list[float] = []
    for a, b in zip(marks[:-1], marks[1:]):
        # remove essential intervals from (a, b)
        pieces = [(a, b)]
        for c, d in ivs:
            nxt = []
            for u, v in pieces:
                if d <= u or c >= v:
                    nxt.append((u, v))
                    continue
                if c > u:
                    nxt.append((u, c))
                if d < v:
                    nxt.append((d, v))
            pieces = nxt
        for u, v in pieces:
            if v - u > 1e-12:
                roots.extend(_gap_roots(ev, u, v, grid, xtol))
    return sorted(roots)


def _winding(ev: PhiEvaluator, rect: Rect, n0: int = 64) -> tuple[float, float]:
    """Winding number of Phi along the rectangle boundary and min |Phi| there."""
    corners = [complex(rect.x0, rect.y0), complex(rect.x1, rect.y0),
               complex(rect.x1, rect.y1), complex(rect.x0, rect.y1)]
    total = 0.0
    fmin = math.inf
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        n = n0
        while True:
            zs = a + (b - a) * np.linspace(0.0, 1.0, n + 1)
            vals = np.asarray(ev.value(zs))
            steps = np.angle(vals[1:] / vals[:-1])
            if np.max(np.abs(steps)) < 0.5 or n >= 1 << 14:
                break
            n *= 4
        fmin = min(fmin, float(np.min(np.abs(vals))))
        total += float(np.sum(steps))
    return total / (2 * math.pi), fmin


def _newton(ev: PhiEvaluator, z: complex, order: int, reach: float, iters: int = 60) -> complex | None:
    """Newton iteration on the (order-1)-th derivative; None when it leaves
    the disk of radius ``reach`` around the start or stalls."""
    z0 = z
    for _ in range(iters):
        f = complex(ev.deriv(z, order - 1)) if order > 1 else complex(ev.value(z))
        df = complex(ev.deriv(z, order))
        if df == 0:
            break
        step = f / df
        z -= step
        if not abs(z - z0) <= reach:
            return None
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            return z
    return z


def complex_roots(ev: PhiEvaluator, rect: Rect, min_size: float = 1e-7,
                  warnings: list | None = None) -> list[tuple[complex, int]]:
    """Nonreal zeros of Phi in a rectangle of the upper half plane."""
    out: list[tuple[complex, int]] = []
    stack = [rect]
    while stack:
        r = stack.pop()
        w, fmin = _winding(ev, r)
        wn = round(w)
        if abs(w - wn) > 0.2:
            # a zero sits on the boundary; nudge the box and retry
            dx = 1e-3 * (r.x1 - r.x0)
            stack.append(Rect(r.x0 - dx, r.x1 + dx, r.y0, r.y1 + dx))
            if warnings is not None:
                warnings.append(f"boundary zero near rectangle {r}")
            continue
        if wn <= 0:
            continue
        size = max(r.x1 - r.x0, r.y1 - r.y0)
        center = complex(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1))
        if wn == 1 or size < min_size:
            z = _newton(ev, center, wn, size)
            if z is not None and r.x0 <= z.real <= r.x1 and r.y0 <= z.imag <= r.y1:
                out.append((z, wn))
                continue
            if size < min_size:
                out.append((center, wn))
                continue
        # split off-centre so that symmetric configurations do not land a
        # zero on the cut
        xm = r.x0 + 0.5123 * (r.x1 - r.x0)
        ym = r.y0 + 0.4877 * (r.y1 - r.y0)
        stack.extend([Rect(r.x0, xm, r.y0, ym), Rect(xm, r.x1, r.y0, ym),
                      Rect(r.x0, xm, ym, r.y1), Rect(xm, r.x1, ym, r.y1)])
    # merge duplicates found by neighbouring boxes
    merged: list[tuple[complex, int]] = []
    for z, k in sorted(out, key=lambda p: (p[0].real, p[0].imag)):
        if merged and abs(merged[-1][0] - z) < 1e-8 * max(1.0, abs(z)):
            continue
        merged.append((z, k))
    return merged


AXIS_MARGIN = 1e-6


def discrete_spectrum(Wp: WeylCoefficient, Wm: WeylCoefficient, region, k_max: int = K_MAX,
                      tol: float = ZERO_TOL, warnings: list | None = None,
                      evaluator: "PhiEvaluator | None" = None) -> list[tuple[complex, int]]:
    """Discrete eigenvalues in a real interval (lo, hi) or a Rect.

    ``evaluator`` overrides how Phi is computed (for instance from closed
    forms); supports are always taken from the measures.
    """
    if degenerate_check(Wp, Wm):
        raise Degenerate("sigma(A)=C")
    ev = evaluator if evaluator is not None else PhiEvaluator(Wp, Wm)
    if isinstance(region, Rect):
        lo, hi = region.x0, region.x1
        touches_axis = region.y0 <= 0 <= region.y1
    else:
        lo, hi = region
        touches_axis = True
        region = None
    found: list[tuple[complex, int]] = []
    if touches_axis:
        ess = essential_spectrum(Wp.measure, Wm.measure)
        _, pp = ms.q_spectrum(Wp.measure)
        _, pm = ms.q_spectrum(Wm.measure)
        plus_pts = pp.points_in(lo, hi)
        minus_pts = set(pm.points_in(lo, hi))
        all_pts, ivs = _support_marks(ev, lo, hi)
        for x0 in plus_pts:
            if x0 not in minus_pts or not lo < x0 < hi:
                continue
            if ess.contains(x0):
                raise RegionTouchesEssential(f"common atom {x0} is embedded in the essential spectrum")
            gaps = [abs(p - x0) for p in all_pts if p != x0]
            for c, d in ivs:
                gaps.append(max(c - x0, x0 - d, 0.0) if not (c <= x0 <= d) else 0.0)
            dist = min(gaps + [1.0])
            found.append((complex(x0), common_atom_multiplicity(ev, x0, dist)))
        for x in real_roots(ev, lo, hi):
            found.append((complex(x), _zero_order(ev, complex(x), tol, k_max)))
    if region is not None:
        top = region.y1
        bottom = region.y0
        upper = []
        if top > AXIS_MARGIN:
            upper = complex_roots(ev, Rect(lo, hi, max(bottom, AXIS_MARGIN), top), warnings=warnings)
        lower = []
        if bottom < -AXIS_MARGIN and (max(-top, AXIS_MARGIN), -bottom) == (max(bottom, AXIS_MARGIN), top):
            lower = upper
        elif bottom < -AXIS_MARGIN:
            lower = complex_roots(ev, Rect(lo, hi, max(-top, AXIS_MARGIN), -bottom), warnings=warnings)
        found.extend(upper)
        found.extend((z.conjugate(), k) for z, k in lower)
        if warnings is not None and touches_axis:
            warnings.append(f"strip |Im lambda| < {AXIS_MARGIN} is covered by the real-axis search only")
    return sorted(found, key=lambda p: (p[0].real, p[0].imag))


def spectrum_report(Wp: WeylCoefficient, Wm: WeylCoefficient, region, k_max: int = K_MAX,
                    tol: float = ZERO_TOL) -> SpectrumReport:
    ess = essential_spectrum(Wp.measure, Wm.measure)
    if degenerate_check(Wp, Wm):
        return SpectrumReport(ess, [], True, ["sigma(A)=C"])
    warnings: list[str] = []
    disc = discrete_spectrum(Wp, Wm, region, k_max, tol, warnings)
    return SpectrumReport(ess, disc, False, warnings)
