"""Closed-form expressions from text, compiled for numpy and mpmath."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import sympy
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .errors import SpecError

_ALIASES = {"abs": sympy.Abs, "sgn": sympy.sign, "sign": sympy.sign, "pi": sympy.pi,
            "e": sympy.E, "E": sympy.E}


@dataclass(frozen=True)
class Expr:
    """A one-variable expression with numpy and mpmath evaluators."""

    text: str
    var: str
    np: Callable = None  # type: ignore[assignment]
    mp: Callable = None  # type: ignore[assignment]

    def __call__(self, x):
        return self.np(x)


def compile_expr(text: str | float | int, var: str = "t") -> Expr:
    if isinstance(text, (int, float)):
        text = repr(float(text))
    sym = sympy.Symbol(var, real=True)
    local = dict(_ALIASES)
    local[var] = sym
    try:
        tree = parse_expr(str(text), local_dict=local, transformations=standard_transformations)
    except Exception as exc:  # parse_expr raises a zoo of exception types
        raise SpecError(f"cannot parse expression {text!r}: {exc}") from exc
    extra = tree.free_symbols - {sym}
    if extra:
        raise SpecError(f"expression {text!r} has unknown symbols {sorted(map(str, extra))}")
    np_f = sympy.lambdify(sym, tree, modules="numpy")
    mp_f = sympy.lambdify(sym, tree, modules="mpmath")
    if tree.is_constant():
        const = float(tree)

        def np_f(x, _c=const):  # noqa: F811 - broadcast constants over arrays
            import numpy as np
            return np.full(np.shape(x), _c) if np.ndim(x) else _c

    return Expr(str(text), var, np_f, mp_f)
