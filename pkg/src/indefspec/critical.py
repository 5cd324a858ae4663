"""Singular-critical-point test at 0 for -(sgn x/|r|) d^2/dx^2."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp

from .errors import InnerDivergent, SpecError
from .expr import compile_expr
from .measure import Divergent, Finite, IntegralValue

# exponents are compared with this slack so that -5/3 read from JSON lands on the boundary
EXP_TOL = 1e-9
NEUTRAL_TOL = 1e-10
_FIT_X = (1e2, 1e3, 1e4)
# fitted growth exponents within this band of 0 are inconclusive
_FIT_BAND = 0.05
_MP_DPS = 25


@dataclass(frozen=True)
class Bump:
    """mass * 6 (x-a)(b-x)/(b-a)^3 on (a, b): a polynomial piece integrating to mass."""
    a: float
    b: float
    mass: float

    def np(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.a) & (x < self.b)
        return np.where(inside, self.mass * 6 * (x - self.a) * (self.b - x) / (self.b - self.a) ** 3, 0.0)

    def mp(self, x):
        if self.a < x < self.b:
            return self.mass * 6 * (x - self.a) * (self.b - x) / mp.mpf(self.b - self.a) ** 3
        return mp.mpf(0)


@dataclass(frozen=True)
class WeightFunction:
    """r = base(x) + bumps, with r ~ +-c|x|^alpha at +-inf.

    ``origin`` is the local power exponent at 0 (r ~ |x|^origin); it only
    matters for local integrability.
    """
    text: str
    base_np: Callable
    base_mp: Callable
    alpha_plus: float | None
    alpha_minus: float | None
    bumps: tuple = ()
    origin: float = 0.0
    turning_points: int = 1

    @staticmethod
    def from_expr(text: str, alpha_plus: float | None, alpha_minus: float | None, bumps=(),
                  origin: float = 0.0) -> "WeightFunction":
        e = compile_expr(text, "x")
        w = WeightFunction(text, e.np, e.mp, alpha_plus, alpha_minus, tuple(bumps), origin)
        n = w._count_turning_points()
        return WeightFunction(text, e.np, e.mp, alpha_plus, alpha_minus, tuple(bumps), origin, n)

    @staticmethod
    def from_dict(d: dict) -> "WeightFunction":
        if "p" in d and compile_expr(d["p"], "x").np(np.linspace(-5, 5, 11)).tolist() != [1.0] * 11:
            raise SpecError("only p = 1 is supported")
        if "r" not in d:
            raise SpecError("weight spec needs 'r'")
        ex = d.get("exponents") or {}
        bumps = [Bump(float(b["a"]), float(b["b"]), float(b["mass"])) for b in d.get("bumps", [])]
        for b in bumps:
            if not b.a < b.b:
                raise SpecError(f"bump interval ({b.a}, {b.b}) is empty")
        return WeightFunction.from_expr(str(d["r"]), _opt(ex.get("plus")), _opt(ex.get("minus")), bumps,
                                        float(d.get("origin", 0.0)))

    def __call__(self, x):
        out = np.asarray(self.base_np(np.asarray(x, dtype=float)), dtype=float)
        for b in self.bumps:
            out = out + b.np(x)
        return out

    def mp_eval(self, x):
        v = self.base_mp(x)
        for b in self.bumps:
            v += b.mp(x)
        return v

    def scaled(self, c: float) -> "WeightFunction":
        if c <= 0:
            raise ValueError("scale must be positive")
        bumps = tuple(Bump(b.a, b.b, c * b.mass) for b in self.bumps)
        return WeightFunction(f"{c}*({self.text})", lambda x: c * self.base_np(x), lambda x: c * self.base_mp(x),
                              self.alpha_plus, self.alpha_minus, bumps, self.origin, self.turning_points)

    def breakpoints(self) -> list[float]:
        pts = {0.0}
        for b in self.bumps:
            pts.update((b.a, b.b))
        return sorted(pts)

    def _count_turning_points(self) -> int:
        xs = np.concatenate([-np.geomspace(100, 1e-6, 2000), np.geomspace(1e-6, 100, 2000)])
        s = np.sign(self(xs))
        s = s[s != 0]
        changes = int(np.count_nonzero(np.diff(s)))
        if s.size == 0 or s[0] > 0 or s[-1] < 0:
            raise SpecError("r must be negative for large negative x and positive for large positive x")
        return changes

    @property
    def exponents_declared(self) -> bool:
        return self.alpha_plus is not None and self.alpha_minus is not None


def _opt(v):
    return None if v is None else float(v)


def check_jsa(r: WeightFunction) -> bool:
    """Both one-sided second moments of |r| diverge."""
    if not r.exponents_declared:
        raise SpecError("exponents are needed to decide the second-moment condition")
    return r.alpha_plus >= -3 - EXP_TOL and r.alpha_minus >= -3 - EXP_TOL


def _in_l1(r: WeightFunction) -> bool:
    if not r.exponents_declared:
        raise SpecError("exponents are needed to decide integrability")
    return r.alpha_plus < -1 - EXP_TOL and r.alpha_minus < -1 - EXP_TOL and r.origin > -1


# cut-off in u = log(1 + t - a); power tails beyond it are below double precision
_U_MAX = 700.0


def _quad_right(f: Callable, a: float, f_np: Callable | None = None) -> mp.mpf:
    """int_a^inf f for a >= 0, via t = a + e^u - 1 so power tails decay exponentially.

    ``f_np`` is a float version used to skip points where f has underflowed,
    which keeps fast-decaying weights cheap.
    """
    def g(u):
        t = a + mp.expm1(u)
        if f_np is not None and u > 30 and float(f_np(float(t))) == 0.0:
            return mp.mpf(0)
        return f(t) * mp.exp(u)

    return mp.quad(g, [0, 10, 100, _U_MAX])


def _quad(f: Callable, a: float, b: float, r: WeightFunction) -> mp.mpf:
    lo, hi = min(a, b), max(a, b)
    pts = [lo] + [p for p in r.breakpoints() if lo < p < hi] + [hi]
    val = mp.quad(f, pts)
    return val if a <= b else -val


def _bumps_right(r: WeightFunction, a: float) -> mp.mpf:
    """int_a^inf of the bumps, exact for bumps fully to the right of a."""
    total = mp.mpf(0)
    for b in r.bumps:
        if b.a >= a:
            total += b.mass
        elif b.b > a:
            total += mp.quad(b.mp, [a, b.b])
    return total


def inner_tail(r: WeightFunction, s: float) -> float:
    """int_s^inf r(t) dt."""
    if r.alpha_plus is not None and r.alpha_plus >= -1 - EXP_TOL:
        raise InnerDivergent(f"r ~ x^{r.alpha_plus} is not integrable at +inf")
    with mp.workdps(_MP_DPS):
        if s >= 0:
            val = _quad_right(r.base_mp, s, r.base_np) + _bumps_right(r, s)
        else:
            val = _quad_right(r.base_mp, 0, r.base_np) + _bumps_right(r, 0) + _quad(r.mp_eval, s, 0, r)
        return float(val)


def total_integral(r: WeightFunction) -> IntegralValue:
    """int_R r, with the base integrated as r(x) + r(-x) on [0, inf) so odd
    parts cancel exactly and bump masses added in closed form."""
    if not _in_l1(r):
        side = "+inf" if r.alpha_plus >= -1 - EXP_TOL else "-inf" if r.alpha_minus >= -1 - EXP_TOL else "0"
        return Divergent(f"r is not integrable at {side}")
    with mp.workdps(_MP_DPS):
        grid = np.geomspace(1e-6, 1e6, 400)
        sym_np = lambda x: r.base_np(x) + r.base_np(-x)  # noqa: E731
        if np.all(sym_np(grid) == 0):
            base = mp.mpf(0)
        else:
            base = _quad_right(lambda x: r.base_mp(x) + r.base_mp(-x), 0, sym_np)
        total = base + sum((b.mass for b in r.bumps), mp.mpf(0))
    return Finite(float(total))


def y1_eval(r: WeightFunction, x: float) -> float:
    """y1(x) = int_0^x int_s^inf r(t) dt ds.

    Swapping the order of integration leaves single integrals:
    y1(x) = int_0^x t r(t) dt + x I(x) for x > 0 and
    y1(x) = x I(0) - int_x^0 (t - x) r(t) dt for x < 0, with I(s) = int_s^inf r.
    """
    x = float(x)
    if x == 0:
        return 0.0
    if r.alpha_plus is not None and r.alpha_plus >= -1 - EXP_TOL:
        raise InnerDivergent(f"r ~ x^{r.alpha_plus} is not integrable at +inf")
    with mp.workdps(_MP_DPS):
        if x > 0:
            head = _quad(lambda t: t * r.mp_eval(t), 0, x, r)
            return float(head + x * inner_tail(r, x))
        head = _quad(lambda t: (t - x) * r.mp_eval(t), x, 0, r)
        return float(x * inner_tail(r, 0.0) - head)


@dataclass(frozen=True)
class NormResult:
    value: IntegralValue
    declared_exponents: tuple
    fitted_growth: tuple
    warnings: tuple = ()


def _integrand_exponent(alpha: float) -> float:
    # y1 ~ |x|^(alpha+2) while alpha > -2, bounded below that
    if alpha > -2:
        return 2 * (alpha + 2) + alpha
    return alpha


def _partial_norms(r: WeightFunction, direction: float, I0: float) -> tuple[np.ndarray, float]:
    """int over [0, X] (or [-X, 0]) of y1^2 |r| at the fit radii, by
    integrating y1' = I, I' = -r in u = log(1 + |x|)."""

    def rhs(u, state):
        y, I, _ = state
        x = direction * math.expm1(u)
        jac = math.exp(u)
        rv = float(r(x))
        return [direction * jac * I, -direction * jac * rv, jac * y * y * abs(rv)]

    us = [math.log1p(X) for X in _FIT_X]
    pts = [0.0] + [math.log1p(abs(p)) for p in r.breakpoints() if direction * p > 0] + [us[-1]]
    pts = sorted(set(pts))
    state = np.array([0.0, I0, 0.0])
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        evals = [u for u in us if a < u <= b]
        sol = solve_ivp(rhs, (a, b), state, method="DOP853", rtol=1e-11, atol=1e-14, t_eval=evals or None)
        if not sol.success:
            raise RuntimeError(sol.message)
        if evals:
            out.extend(sol.y[2, :len(evals)])
        state = sol.y[:, -1]
    return np.array(out), float(state[0])


def y1_norm_divergence(r: WeightFunction) -> NormResult:
    """int_R y1^2 |r|: exponent rule for the verdict, partial integrals at
    X = 1e2, 1e3, 1e4 fitted to a power law as a cross-check."""
    if not r.exponents_declared:
        raise SpecError("exponents are needed for the y1 norm")
    exps = (_integrand_exponent(r.alpha_plus), _integrand_exponent(r.alpha_minus))
    divergent = any(e >= -1 - EXP_TOL for e in exps)
    I0 = inner_tail(r, 0.0)
    notes = []
    growth = []
    finite_total = 0.0
    for direction, e in zip((1.0, -1.0), exps):
        p, yX = _partial_norms(r, direction, I0)
        d1, d2 = p[1] - p[0], p[2] - p[1]
        gamma = math.log10(d2 / d1) if d1 > 0 and d2 > 0 else -math.inf
        growth.append(gamma)
        X = _FIT_X[-1]
        # power-law tail beyond the last radius with the declared exponent
        tail = yX * yX * abs(float(r(direction * X))) * X / (-1 - e) if e < -1 - EXP_TOL else math.inf
        finite_total += float(p[2]) + tail
    fit_divergent = max(growth) > _FIT_BAND
    fit_finite = max(growth) < -_FIT_BAND
    if (divergent and fit_finite) or (not divergent and fit_divergent):
        msg = f"growth fit {growth} disagrees with the exponent rule {exps}"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    value = Divergent(f"integrand exponent {max(exps):.4g} >= -1") if divergent else Finite(finite_total)
    return NormResult(value, exps, tuple(growth), tuple(notes))


UNKNOWN = "unknown"
NOT_APPLICABLE = "not_applicable"


@dataclass
class CriticalVerdict:
    zero_is_eigenvalue: bool
    eigenvector_neutral: bool
    zero_simple: bool | str
    singular_critical_point: bool | str
    evidence: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"zero_is_eigenvalue": self.zero_is_eigenvalue, "eigenvector_neutral": self.eigenvector_neutral,
                "zero_simple": self.zero_simple, "singular_critical_point": self.singular_critical_point,
                "evidence": self.evidence}


def critical_verdict(r: WeightFunction) -> CriticalVerdict:
    ev: dict = {"alpha_plus": r.alpha_plus, "alpha_minus": r.alpha_minus, "turning_points": r.turning_points}
    jsa = check_jsa(r)
    ev["second_moments_diverge"] = jsa
    in_l1 = _in_l1(r)
    total = total_integral(r)
    ev["total_integral"] = total.value if isinstance(total, Finite) else "divergent"
    neutral = False
    if isinstance(total, Finite):
        scale = max(1.0, float(mp.quad(lambda t: abs(r.mp_eval(t)), [-mp.inf] + r.breakpoints() + [mp.inf])))
        neutral = abs(total.value) <= NEUTRAL_TOL * scale
    simple: bool | str
    if not in_l1:
        simple = UNKNOWN
    elif not neutral:
        # a non-neutral eigenvector admits no Jordan chain
        simple = True
    else:
        norm = y1_norm_divergence(r)
        ev["y1_integrand_exponents"] = list(norm.declared_exponents)
        ev["y1_norm_growth_fit"] = list(norm.fitted_growth)
        ev["y1_norm"] = norm.value.value if isinstance(norm.value, Finite) else "divergent"
        if norm.warnings:
            ev["warnings"] = list(norm.warnings)
        simple = isinstance(norm.value, Divergent)
    if not jsa:
        verdict: bool | str = NOT_APPLICABLE
    else:
        verdict = bool(in_l1 and neutral and simple is True)
    return CriticalVerdict(in_l1, neutral, simple, verdict, ev)


def power_weight(alpha: float) -> WeightFunction:
    """sgn(x) (1+|x|)^alpha."""
    return WeightFunction.from_expr(f"sign(x)*(1 + abs(x))**({alpha!r})", alpha, alpha)


def power_weight_y1(alpha: float, x: float) -> float:
    """Closed form of y1 for power_weight(alpha), alpha < -1, alpha != -2."""
    # I(s) = (1+|s|)^(alpha+1)/(-alpha-1) is even, so y1 is odd
    a = alpha
    v = ((1 + abs(x)) ** (a + 2) - 1) / ((-a - 1) * (a + 2))
    return math.copysign(v, x)
