"""Weyl functions of spectral measures and their boundary behaviour."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import measure as ms
from .errors import HypothesesFail, NoLimit, OnSupport
from .measure import Divergent, Finite, IntegralValue, SpectralMeasure

ZERO_TOL = 1e-9
DEFAULT_EPS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class WeylCoefficient:
    measure: SpectralMeasure
    C: float = 0.0


@dataclass(frozen=True)
class PhiFunction:
    plus: WeylCoefficient
    minus: WeylCoefficient


def sqrt_up(z):
    """Square root with the cut along [0, inf) and sqrt(-1) = i.

    Values lie in the closed upper half plane; on [0, inf) the nonnegative
    root is returned.
    """
    z = np.asarray(z, dtype=complex)
    out = 1j * np.sqrt(-z)
    on_cut = (z.imag == 0) & (z.real >= 0)
    out = np.where(on_cut, np.sqrt(np.abs(z.real)) + 0j, out)
    # -z with a negative zero imaginary part would land on the wrong side
    out = np.where(out.imag < 0, -out, out)
    return out if out.ndim else complex(out)


def _check_off_support(sigma: SpectralMeasure, lam: np.ndarray, n: int) -> None:
    xs = lam[lam.imag == 0].real
    if not xs.size:
        return
    hits = ms.atom_hits(sigma, xs)
    if np.any(hits):
        raise OnSupport(f"{xs[hits][0]} is an atom of the measure")
    for d in sigma.densities:
        for x in xs[(xs >= d.a) & (xs <= d.b)]:
            beta = d.local_exponent(float(x))
            if beta is not None and beta - (n + 1) <= -1:
                raise OnSupport(f"{x} lies in the support of a density piece")


def _as_array(lam):
    arr = np.asarray(lam, dtype=complex)
    return arr, arr.ndim == 0


def eval_M(W: WeylCoefficient, lam):
    """C + integral of (1/(t-lam) - t/(1+t^2)) dSigma; accepts arrays."""
    arr, scalar = _as_array(lam)
    flat = arr.reshape(-1)
    _check_off_support(W.measure, flat, 0)
    out = ms.atoms_regularized(W.measure, flat, derivative=0) + W.C
    for d in W.measure.densities:
        out = out + np.array([ms.density_cauchy(d, complex(v), n=0) for v in flat])
    out = out.reshape(arr.shape)
    return complex(out) if scalar else out


def eval_M_deriv(W: WeylCoefficient, lam, n: int):
    """n-th derivative, n! times the integral of (t-lam)^-(n+1)."""
    if n < 1:
        raise ValueError("n must be positive")
    arr, scalar = _as_array(lam)
    flat = arr.reshape(-1)
    _check_off_support(W.measure, flat, n)
    out = ms.atoms_regularized(W.measure, flat, derivative=n)
    for d in W.measure.densities:
        out = out + np.array([ms.density_cauchy(d, complex(v), n=n) for v in flat])
    out = out * math.factorial(n)
    out = out.reshape(arr.shape)
    return complex(out) if scalar else out


def eval_Phi(phi: PhiFunction, lam):
    return eval_M(phi.plus, lam) - eval_M(phi.minus, lam)


def eval_Phi_deriv(phi: PhiFunction, lam, n: int):
    if n == 0:
        return eval_Phi(phi, lam)
    return eval_M_deriv(phi.plus, lam, n) - eval_M_deriv(phi.minus, lam, n)


def gamma1_pole(W: WeylCoefficient, lam: complex, j: int) -> complex:
    """Gamma_1 of chi/(t-lam)^j: C plus the regularized Cauchy integral for
    j = 1, the signed moment of order j otherwise (convergence assumed)."""
    if j == 1:
        return W.C + ms.regularized_cauchy(W.measure, lam)
    return ms.signed_moment(W.measure, lam, j)


def eval_Phi_boundary(phi: PhiFunction, lam: float, n: int) -> IntegralValue:
    """Limit of the n-th derivative of Phi at real lam from off the axis.

    The limit is assembled from convergent moment integrals over R minus
    {lam}: with equal atom masses at lam the singular atom terms cancel and
    n! times the difference of order-(n+1) moments remains.
    """
    lam = complex(lam)
    if lam.imag != 0:
        return Finite(complex(eval_Phi_deriv(phi, lam, n)))
    x = lam.real
    mp_, mm_ = ms.mass_at(phi.plus.measure, x), ms.mass_at(phi.minus.measure, x)
    if not ms.values_equal(mp_, mm_, 1e-12, 0.0):
        raise HypothesesFail(f"atom masses differ at {x}: {mp_} vs {mm_}")
    for side in (phi.plus, phi.minus):
        mom = ms.chi_moment(side.measure, x, n + 1, True)
        if isinstance(mom, Divergent):
            return Divergent(mom.reason)
    val = gamma1_pole(phi.plus, x, n + 1) - gamma1_pole(phi.minus, x, n + 1)
    return Finite(complex(val) * math.factorial(n))


def herglotz_residual(func: Callable, samples: Iterable[complex]) -> float:
    """Max of the Herglotz sign violation and the conjugate-symmetry defect."""
    worst = 0.0
    for z in samples:
        z = complex(z)
        v = complex(func(z))
        vc = complex(func(z.conjugate()))
        worst = max(worst, -v.imag * z.imag, abs(vc - v.conjugate()))
    return worst


def r_function_residual(W: WeylCoefficient, samples: Sequence[complex]) -> float:
    return herglotz_residual(lambda z: eval_M(W, z), samples)


def _neville_at_zero(xs: Sequence[float], ys: Sequence[float]) -> float:
    p = list(ys)
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i])
    return p[0]


def stieltjes_invert(f: Callable, t: float, eps_schedule: Sequence[float] = DEFAULT_EPS,
                     tol: float = 1e-7) -> float:
    """Density (1/pi) lim Im f(t + i eps), extrapolated to eps = 0."""
    eps = sorted(eps_schedule, reverse=True)
    vals = [complex(f(complex(t, e))).imag / math.pi for e in eps]
    full = _neville_at_zero(eps, vals)
    tail3 = _neville_at_zero(eps[-3:], vals[-3:])
    if not (math.isfinite(full) and math.isfinite(tail3)):
        raise NoLimit(f"non-finite boundary values at t={t}")
    scale = max(1.0, abs(full))
    if abs(full - tail3) > tol * scale:
        raise NoLimit(f"extrapolation unstable at t={t}: {full} vs {tail3}")
    return full
