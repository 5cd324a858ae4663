"""Half-line m-coefficients of -y'' + q y by Weyl-disk contraction."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .errors import DiskTooLarge, NoLimit, NumericFailure, SpecError
from .expr import compile_expr
from .measure import Atom, DensityPiece, SpectralMeasure
from .weyl import WeylCoefficient, sqrt_up

RTOL = 1e-10
ATOL = 1e-13
# keep the fundamental system below overflow: rescale after this much growth
_LOG_GROWTH_CHUNK = 200.0


@dataclass(frozen=True)
class PotentialSpec:
    q: Callable
    text: str = ""

    @staticmethod
    def from_expr(text: str) -> "PotentialSpec":
        e = compile_expr(text, "x")
        return PotentialSpec(e.np, text)

    @staticmethod
    def from_samples(samples) -> "PotentialSpec":
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
            raise SpecError("samples must be a list of at least four [x, q] pairs")
        order = np.argsort(arr[:, 0])
        spline = CubicSpline(arr[order, 0], arr[order, 1], extrapolate=True)
        return PotentialSpec(spline, "samples")

    @staticmethod
    def from_dict(d: dict) -> "PotentialSpec":
        if "q" in d:
            return PotentialSpec.from_expr(str(d["q"]))
        if "samples" in d:
            return PotentialSpec.from_samples(d["samples"])
        raise SpecError("potential spec needs 'q' or 'samples'")


FREE = PotentialSpec(lambda x: 0.0 * np.asarray(x, dtype=float), "0")


@dataclass(frozen=True)
class MResult:
    value: complex
    radius: float
    X: float


def _rhs(P: PotentialSpec, mu: complex):
    def f(x, y):
        qm = complex(P.q(x)) - mu
        return np.array([y[1], qm * y[0], y[3], qm * y[2]], dtype=complex)
    return f


def _integrate(P: PotentialSpec, mu: complex, x0: float, x1: float, y0: np.ndarray) -> np.ndarray:
    sol = solve_ivp(_rhs(P, mu), (x0, x1), y0, method="DOP853", rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise NumericFailure(f"integration failed on [{x0}, {x1}]: {sol.message}")
    return sol.y[:, -1]


def _disk(y: np.ndarray, log_scale: float) -> tuple[complex, float]:
    """Center and radius of the Weyl disk from s, s', c, c' at the endpoint.

    The fundamental matrix carries a positive scale factor exp(log_scale)
    removed during integration; its Wronskian is exp(2 log_scale).
    """
    s, sp, c, cp = y
    im = (cp * np.conj(c)).imag
    if im == 0:
        return complex("nan"), math.inf
    center = (sp * np.conj(c) - np.conj(cp) * s) / (2j * im)
    # radius = |W| / (2 |Im c' conj(c)|) with the unscaled Wronskian 1
    radius = 1.0 / (2.0 * abs(im) * math.exp(2.0 * log_scale)) if log_scale < 350 else 0.0
    return complex(center), radius


def _spectral_parameter(side: str, lam: complex) -> complex:
    return lam if side == "+" else -lam


def m_numeric(P: PotentialSpec, side: str, lam: complex, tol: float = 1e-9,
              X0: float = 8.0, X_max: float = 4096.0) -> MResult:
    """M_side(lam) for -y'' + q y = (+-lam) y on the half-line of that side.

    Nonreal lam: Weyl-disk contraction, the error is the disk radius.  Real
    lam below the essential spectrum: backward integration of the decaying
    solution, error from doubling the cut-off.
    """
    lam = complex(lam)
    mu = _spectral_parameter(side, lam)
    if mu.imag == 0:
        return _m_real(P, side, mu, tol, X0, X_max)
    direction = 1.0 if side == "+" else -1.0
    y = np.array([0, 1, 1, 0], dtype=complex)
    x = 0.0
    log_scale = 0.0
    X = X0
    k_im = abs(sqrt_up(mu).imag)
    chunk = _LOG_GROWTH_CHUNK / max(k_im, 1e-12)
    while True:
        while x < X:
            step = min(chunk, X - x)
            y = _integrate(P, mu, direction * x, direction * (x + step), y)
            x += step
            big = float(np.max(np.abs(y)))
            if big > 1e100:
                y = y / big
                log_scale += math.log(big)
        center, radius = _disk(y, log_scale)
        if radius <= tol:
            return MResult(center, radius, X)
        if X >= X_max:
            raise DiskTooLarge(f"Weyl disk radius {radius:.3e} at X={X} exceeds {tol:.1e}")
        X = min(2 * X, X_max)


def _m_real(P: PotentialSpec, side: str, mu: float, tol: float, X0: float, X_max: float) -> MResult:
    direction = 1.0 if side == "+" else -1.0

    def at(X):
        kappa = math.sqrt(max(float(np.real(P.q(direction * X))) - mu.real, 0.0))
        if kappa == 0:
            raise NumericFailure(f"{mu.real} is not below the essential spectrum")
        # decaying solution away from the origin
        y0 = np.array([1.0, -direction * kappa, 0.0, 0.0], dtype=complex)
        y = _integrate(P, complex(mu.real), direction * X, 0.0, y0)
        psi, dpsi = y[0], y[1]
        # psi = -s + M c up to scaling: M = -psi(0)/psi'(0)
        return complex(-psi / dpsi) if side == "+" else complex(psi / dpsi)

    X = X0
    prev = at(X)
    while X < X_max:
        X *= 2
        cur = at(X)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return MResult(cur, err, X)
        prev = cur
    raise DiskTooLarge(f"real-axis m value did not settle by X={X_max}")


def asymptotic_check(P: PotentialSpec, side: str, radii=(10.0, 100.0, 1000.0)) -> tuple[float, list[float]]:
    """|M(iR) -+ i/sqrt(+-iR)| * R along the imaginary axis."""
    devs = []
    for R in radii:
        lam = 1j * R
        free = 1j / sqrt_up(lam) if side == "+" else -1j / sqrt_up(-lam)
        m = m_numeric(P, side, lam, tol=1e-12 / max(1.0, R)).value
        devs.append(abs(m - free) * R)
    return max(devs), devs


# --------------------------------------------------------------------------
# ratio test for a nonempty resolvent set


@dataclass(frozen=True)
class RatioResult:
    certified: bool
    r_plus: float | None
    r_minus: float | None
    status: str


def _aitken(seq: list[float]) -> float:
    a, b, c = seq[-3:]
    den = c - 2 * b + a
    if den == 0:
        return c
    return c - (c - b) ** 2 / den


def _ratio_limit(r: Callable, p: Callable, sign: float, levels=range(1, 9)) -> float:
    vals = []
    for n in levels:
        x = sign * 10.0 ** (-n)
        num = quad(lambda t: float(r(t)), 0.0, x, epsabs=0, epsrel=1e-12, limit=200)[0]
        den = quad(lambda t: 1.0 / float(p(t)), 0.0, x, epsabs=0, epsrel=1e-12, limit=200)[0]
        vals.append(num / den)
    lim = _aitken(vals)
    spread = abs(vals[-1] - vals[-2])
    if not math.isfinite(lim) or spread > 1e-3 * max(1.0, abs(lim)) and abs(vals[-1]) > 1e-3:
        raise NoLimit(f"ratio does not settle as x -> {'+' if sign > 0 else '-'}0: {vals[-3:]}")
    return sign * lim


def resolvent_nonempty_ratio(r: Callable, p: Callable) -> RatioResult:
    """Certify a nonempty resolvent set from the behaviour of
    int_0^x r / int_0^x 1/p near 0.  The left limit is reported with the
    sign of r removed, so r = sgn x gives r_minus = 1.  A failed test is
    inconclusive, never a disproof."""
    rp = _ratio_limit(r, p, 1.0)
    rm = _ratio_limit(r, p, -1.0)
    ok = rp > 1e-6 and rm > 1e-6
    return RatioResult(ok, rp, rm, "certified" if ok else "inconclusive")


# --------------------------------------------------------------------------
# closed-form example with a turning point


def example_potential() -> PotentialSpec:
    return PotentialSpec.from_expr("6*(x**4 - 6*abs(x))/(abs(x)**3 + 3)**2")


def example_m0(lam):
    """lam / (1 + lam sqrt(-lam)) with the principal root."""
    lam = np.asarray(lam, dtype=complex)
    out = lam / (1 + lam * np.sqrt(-lam))
    return complex(out) if out.ndim == 0 else out


def example_density(t):
    t = np.asarray(t, dtype=float)
    return np.abs(t) ** 2.5 / (math.pi * (1 + t ** 3))


def example_measure() -> WeylCoefficient:
    """Spectral measure of example_m0: an atom of mass 2/3 at -1 plus the
    density on [0, inf); C is the first moment so that M = int dSigma/(t - lam)."""
    atom_mass = 2.0 / 3.0
    dens = DensityPiece(0.0, math.inf, example_density, left=2.5, infinity=-0.5, label="example density")
    sigma = SpectralMeasure(atoms=(Atom(-1.0, atom_mass),), densities=(dens,))
    first = quad(lambda t: t / (1 + t * t) * float(example_density(t)), 0, math.inf, epsabs=1e-14, epsrel=1e-13,
                 limit=400)[0]
    C = atom_mass * (-1.0) / 2.0 + first
    return WeylCoefficient(sigma, C)
