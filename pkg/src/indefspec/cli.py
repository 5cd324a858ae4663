"""Command-line front end: indefspec {classify,spectrum,infzone,mfun,critical,validate}.

Exit codes: 0 ok, 2 bad input, 3 degenerate pair (sigma(A)=C),
4 tolerance ambiguity, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import critical, eigen, infzone, sturm
from . import io as specio
from .errors import (AtXi, BranchAmbiguity, Degenerate, HypothesesFail, IndefSpecError, InnerDivergent,
                     NotInDomain, NotWellPosed, OnSupport, RegionTouchesEssential, SpecError)
from .measure import validate as validate_measure

EXIT_OK, EXIT_SPEC, EXIT_DEGENERATE, EXIT_AMBIGUOUS, EXIT_NUMERIC = 0, 2, 3, 4, 5

_INPUT_ERRORS = (SpecError, OnSupport, AtXi, RegionTouchesEssential, InnerDivergent, HypothesesFail,
                 NotInDomain, NotWellPosed)


class CliExit(Exception):
    def __init__(self, code: int, message: str, payload=None):
        super().__init__(message)
        self.code = code
        self.payload = payload


def _clean(obj):
    """JSON-safe copy: complex as [re, im], non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _pmap(func, items, threads: int):
    if threads <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so output does not depend on scheduling
        return list(pool.map(func, items))


def _region(text: str):
    """'lo,hi' for a real interval or 'x0,x1,y0,y1' for a rectangle."""
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 2:
        return tuple(parts)
    if len(parts) == 4:
        return eigen.Rect(*parts)
    raise SpecError(f"region {text!r} must have 2 or 4 comma-separated numbers")


def _region_empty(region) -> bool:
    if isinstance(region, eigen.Rect):
        return not (region.x0 < region.x1 and region.y0 <= region.y1)
    return not region[0] < region[1]


def _rows_csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _flat_csv(d: dict) -> str:
    rows = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k, x in v.items():
                walk(f"{prefix}.{k}" if prefix else k, x)
        else:
            rows.append((prefix, json.dumps(_clean(v))))

    walk("", d)
    return _rows_csv(("key", "value"), rows)


# --------------------------------------------------------------------------
# commands; each returns (report dict, csv text or None, exit code)


def cmd_classify(args):
    Wp = specio.load_measure(args.plus)
    Wm = specio.load_measure(args.minus)
    lam = specio.parse_complex(args.lam)
    rep = eigen.classify_eigenvalue(Wp, Wm, lam, k_max=args.kmax, tol=args.tol)
    out = rep.as_dict()
    if rep.degenerate:
        raise CliExit(EXIT_DEGENERATE, "sigma(A)=C", out)
    code = EXIT_AMBIGUOUS if rep.ambiguous else EXIT_OK
    return out, _flat_csv(out), code


def _phi_grid(ev, region, n: int, threads: int):
    if isinstance(region, eigen.Rect):
        xs = np.linspace(region.x0, region.x1, n)
        ys = np.linspace(region.y0, region.y1, n)
        pts = [complex(x, y) for y in ys for x in xs]
    else:
        pts = [complex(x) for x in np.linspace(region[0], region[1], n)]

    def one(z):
        try:
            return ev.value(z)
        except IndefSpecError:
            return complex("nan")

    vals = _pmap(one, pts, threads)
    return [(z.real, z.imag, v.real, v.imag) for z, v in zip(pts, vals)]


def cmd_spectrum(args):
    region = _region(args.region)
    if args.zone:
        Z = specio.load_zone(args.zone)
        if _region_empty(region):
            rep = eigen.SpectrumReport(eigen.PointSet(intervals=tuple(infzone.bands(Z, args.n))), [])
            checks = {}
        else:
            rep, checks = infzone.indefinite_spectrum(Z, region, n=args.n, probes=args.probes)
        out = rep.as_dict()
        out["bands"] = [[a, b] for a, b in infzone.bands(Z, args.n)]
        out["checks"] = checks
        ev = None
        if args.grid:
            Wp = infzone.reconstruct_measure(Z, "+", args.n)
            Wm = infzone.reconstruct_measure(Z, "-", args.n)
            ev = infzone.ZonePhiEvaluator(Z, Z.default_n() if args.n is None else args.n, Wp, Wm)
    else:
        Wp = specio.load_measure(args.plus)
        Wm = specio.load_measure(args.minus)
        if eigen.degenerate_check(Wp, Wm):
            rep = eigen.spectrum_report(Wp, Wm, region, args.kmax, args.tol)
            raise CliExit(EXIT_DEGENERATE, "sigma(A)=C", rep.as_dict())
        if _region_empty(region):
            rep = eigen.SpectrumReport(eigen.essential_spectrum(Wp.measure, Wm.measure), [])
        else:
            rep = eigen.spectrum_report(Wp, Wm, region, args.kmax, args.tol)
        out = rep.as_dict()
        out["definitizable"] = eigen.definitizable_check(Wp.measure, Wm.measure)
        out["semibounded"] = {"plus": eigen.semibounded_flag(Wp.measure),
                              "minus": eigen.semibounded_flag(Wm.measure)}
        ev = eigen.PhiEvaluator(Wp, Wm) if args.grid else None
    if ev is not None:
        rows = _phi_grid(ev, region, args.grid, args.threads)
        text = _rows_csv(("re_lambda", "im_lambda", "re_phi", "im_phi"), rows)
        if args.grid_out:
            Path(args.grid_out).write_text(text)
            out["grid_csv"] = str(args.grid_out)
    disc_rows = [(z.real, z.imag, json.dumps(_clean(k))) for z, k in rep.discrete]
    return out, _rows_csv(("re_lambda", "im_lambda", "multiplicity"), disc_rows), EXIT_OK


def cmd_infzone(args):
    Z = specio.load_zone(args.spec)
    n = args.n if args.n is not None else Z.default_n()
    out = {
        "n": n,
        "bands": [[a, b] for a, b in infzone.bands(Z, n)],
        "open_gaps": [[g.mul, g.mur, g.xi, g.eps] for g in infzone.open_gaps(Z, n)],
    }
    for side in ("+", "-"):
        atoms = infzone.a0_discrete(Z, side, n, with_mass=True)
        out[f"atoms{side}"] = [[a.point, a.mass] for a in atoms]
    code = EXIT_OK
    if args.identity_check:
        rng = np.random.default_rng(args.seed)
        samples = rng.uniform(-10, 10, args.samples) + 1j * rng.uniform(-10, 10, args.samples)
        res = infzone.identity_residual(Z, samples, n)
        out["identity_residual"] = res
        out["identity_ok"] = bool(res < 1e-10)
    rows = []
    if args.lam:
        lams = [specio.parse_complex(v) for v in args.lam]

        def one(lam):
            return complex(infzone.m_coefficient(Z, lam, args.side, n))

        vals = _pmap(one, lams, args.threads)
        out["m"] = [{"lambda": lam, "m": v} for lam, v in zip(lams, vals)]
        rows = [(lam.real, lam.imag, v.real, v.imag) for lam, v in zip(lams, vals)]
    text = _rows_csv(("re_lambda", "im_lambda", "re_m", "im_m"), rows) if rows else _flat_csv(out)
    return out, text, code


def cmd_mfun(args):
    P = specio.load_potential(args.q)
    lams = [specio.parse_complex(v) for v in args.lam]

    def one(lam):
        return sturm.m_numeric(P, args.side, lam, tol=args.tol)

    res = _pmap(one, lams, args.threads)
    out = {"side": args.side,
           "values": [{"lambda": lam, "m": r.value, "disk_radius": r.radius, "X": r.X} for lam, r in zip(lams, res)]}
    if args.asymptotic:
        dev, devs = sturm.asymptotic_check(P, args.side)
        out["asymptotic_deviation"] = dev
        out["asymptotic_samples"] = devs
    rows = [(lam.real, lam.imag, r.value.real, r.value.imag, r.radius) for lam, r in zip(lams, res)]
    return out, _rows_csv(("re_lambda", "im_lambda", "re_m", "im_m", "disk_radius"), rows), EXIT_OK


def cmd_critical(args):
    W = specio.load_weight(args.weight)
    v = critical.critical_verdict(W)
    out = v.as_dict()
    return out, _flat_csv(out), EXIT_OK


def cmd_validate(args):
    out: dict = {}
    problems: list[str] = []
    for kind, paths in (("measure", args.measure), ("zone", args.zone), ("potential", args.potential),
                        ("weight", args.weight)):
        for p in paths or []:
            try:
                if kind == "measure":
                    W = specio.load_measure(p, check=False)
                    found = validate_measure(W.measure)
                elif kind == "zone":
                    specio.load_zone(p)
                    found = []
                elif kind == "potential":
                    specio.load_potential(p)
                    found = []
                else:
                    specio.load_weight(p)
                    found = []
            except SpecError as exc:
                found = [str(exc)]
            out[str(p)] = {"kind": kind, "problems": found}
            problems.extend(found)
    out["valid"] = not problems
    return out, _flat_csv(out), EXIT_OK if not problems else EXIT_SPEC


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=eigen.ZERO_TOL, help="zero-test / disk tolerance")
    common.add_argument("--kmax", type=int, default=eigen.K_MAX, help="cap on algebraic multiplicity")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grids")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = argparse.ArgumentParser(prog="indefspec", description=__doc__.splitlines()[0], parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="classify one point lambda")
    p.add_argument("--plus", required=True)
    p.add_argument("--minus", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("spectrum", parents=[common], help="essential and discrete spectrum in a region")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--plus")
    src.add_argument("--zone")
    p.add_argument("--minus")
    p.add_argument("--region", required=True, help="lo,hi or x0,x1,y0,y1")
    p.add_argument("--n", type=int, default=None, help="zone truncation")
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--grid", type=int, default=0, help="samples per axis of Phi for plotting")
    p.add_argument("--grid-out", help="CSV file for the Phi samples")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("infzone", parents=[common], help="infinite-zone Weyl data")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--identity-check", action="store_true")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", nargs="*")
    p.add_argument("--side", choices=("+", "-"), default="+")
    p.set_defaults(func=cmd_infzone)

    p = sub.add_parser("mfun", parents=[common], help="m-coefficient of -y''+qy")
    p.add_argument("--q", required=True)
    p.add_argument("--lambda", dest="lam", nargs="+", required=True)
    p.add_argument("--side", choices=("+", "-"), default="+")
    p.add_argument("--asymptotic", action="store_true")
    p.set_defaults(func=cmd_mfun)

    p = sub.add_parser("critical", parents=[common], help="singular critical point test at 0")
    p.add_argument("--weight", required=True)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("validate", parents=[common], help="check spec files")
    p.add_argument("--measure", nargs="*")
    p.add_argument("--zone", nargs="*")
    p.add_argument("--potential", nargs="*")
    p.add_argument("--weight", nargs="*")
    p.set_defaults(func=cmd_validate)
    return ap


def _emit(args, out, text) -> None:
    if args.format == "csv" and text is not None:
        body = text
    else:
        body = json.dumps(_clean(out), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(body)
    else:
        sys.stdout.write(body)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "spectrum" and args.plus and not args.minus:
        ap.error("--plus needs --minus")
    if args.kmax < 1 or args.tol <= 0 or args.threads < 1:
        ap.error("--kmax and --threads must be positive, --tol must be > 0")
    try:
        out, text, code = args.func(args)
    except CliExit as exc:
        if exc.payload is not None:
            _emit(args, exc.payload, _flat_csv(exc.payload))
        print(str(exc), file=sys.stderr)
        return exc.code
    except Degenerate as exc:
        print(str(exc) or "sigma(A)=C", file=sys.stderr)
        return EXIT_DEGENERATE
    except BranchAmbiguity as exc:
        print(f"ambiguous: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except IndefSpecError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(args, out, text)
    return code


if __name__ == "__main__":
    sys.exit(main())
