"""Loading measure, zone, potential and weight specifications from JSON or TOML."""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .critical import WeightFunction
from .errors import SpecError
from .expr import compile_expr
from .infzone import ZoneSpec
from .measure import Atom, AtomFamily, DensityPiece, SpectralMeasure, validate
from .sturm import PotentialSpec
from .weyl import WeylCoefficient


def read_spec(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise SpecError(f"no such file: {p}")
    try:
        if p.suffix.lower() == ".toml":
            with p.open("rb") as fh:
                return tomllib.load(fh)
        with p.open() as fh:
            return json.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"{p}: {exc}") from exc


def _num(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        if s in ("-inf", "-infinity"):
            return -math.inf
    if v is None:
        raise SpecError("missing numeric value")
    return float(v)


def _bound(v) -> int | None:
    return None if v is None or (isinstance(v, str) and "inf" in v.lower()) else int(v)


def _family(d: dict, label: str) -> AtomFamily:
    pos = compile_expr(d["positions"], "k")
    w = compile_expr(d["weights"], "k")
    rng = d.get("range", [None, None])
    if len(rng) != 2:
        raise SpecError("atom_family range must be [kmin, kmax]")
    te = d.get("tail_exponent")
    return AtomFamily(pos.np, w.np, _bound(rng[0]), _bound(rng[1]),
                      None if te is None else float(te), float(d.get("position_exponent", 1.0)),
                      label=d.get("label") or f"{label}:positions={d['positions']};weights={d['weights']}",
                      position_mp=pos.mp, weight_mp=w.mp)


def measure_from_dict(d: dict, check: bool = True) -> WeylCoefficient:
    """A measure spec plus an optional real constant ``C``."""
    try:
        atoms = [Atom(_num(a["t"]), _num(a["w"])) for a in d.get("atoms", [])]
        fams = d.get("atom_family") or []
        if isinstance(fams, dict):
            fams = [fams]
        fams += d.get("atom_families", [])
        families = [_family(f, f"family{i}") for i, f in enumerate(fams)]
        dens = []
        for i, p in enumerate(d.get("densities", [])):
            a, b = (_num(x) for x in p["interval"])
            ex = p.get("exponents", {})
            zeros = tuple((float(z[0]), float(z[1])) for z in p.get("zeros", []))
            dens.append(DensityPiece(a, b, compile_expr(p["expr"], "t").np, float(ex.get("left", 0.0)),
                                     float(ex.get("right", 0.0)), float(ex.get("infinity", 0.0)), zeros,
                                     p.get("label") or f"density{i}:{p['expr']}"))
        sigma = SpectralMeasure(tuple(atoms), tuple(families), tuple(dens), d.get("total_mass_infinite"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"bad measure spec: {exc}") from exc
    if check:
        problems = validate(sigma)
        if problems:
            raise SpecError("; ".join(problems))
    return WeylCoefficient(sigma, float(d.get("C", 0.0)))


def load_measure(path, check: bool = True) -> WeylCoefficient:
    return measure_from_dict(read_spec(path), check)


def load_zone(path) -> ZoneSpec:
    return ZoneSpec.from_dict(read_spec(path))


def load_potential(path) -> PotentialSpec:
    return PotentialSpec.from_dict(read_spec(path))


def load_weight(path) -> WeightFunction:
    return WeightFunction.from_dict(read_spec(path))


def parse_complex(text: str) -> complex:
    """Accepts '1.5', '2-0.5i', 'i', '-i', '1+2j'."""
    s = str(text).strip().replace(" ", "").replace("i", "j")
    if s in ("j", "+j"):
        return 1j
    if s == "-j":
        return -1j
    if s.endswith("j") and s[-2:-1] in ("+", "-"):
        s = s[:-1] + "1j"
    try:
        return complex(s)
    except ValueError as exc:
        raise SpecError(f"cannot read {text!r} as a complex number") from exc
