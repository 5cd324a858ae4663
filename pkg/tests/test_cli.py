import json
import math
import subprocess
import sys

import pytest

from indefspec import cli, eigen, io as specio
from indefspec.errors import SpecError
from indefspec.weyl import sqrt_up

LATTICE = {"atom_family": {"positions": "k", "weights": "1", "range": [None, None], "tail_exponent": 0}}
LATTICE5 = dict(LATTICE, atoms=[{"t": 5, "w": 1}])
EVEN = {"atom_family": {"positions": "2*k", "weights": "1", "range": [None, None], "tail_exponent": 0}}
ODD = {"atom_family": {"positions": "2*k+1", "weights": "1", "range": [None, None], "tail_exponent": 0}}
ONE_GAP = {"mu0r": 0, "gaps": [{"mul": 1, "mur": 2, "xi": 1.5, "eps": 1}]}


def run(argv, capsys):
    code = cli.main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_classify_lattice_pair(write_json, capsys):
    a, b = write_json("z.json", LATTICE), write_json("z5.json", LATTICE5)
    code, out, _ = run(["classify", "--plus", a, "--minus", b, "--lambda", "0", "--kmax", "16"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["algebraic"] == 2 and rep["is_eigenvalue"]
    # same numbers from a direct library call
    lib = eigen.classify_eigenvalue(specio.load_measure(a), specio.load_measure(b), 0, k_max=16)
    assert rep["trace"] == json.loads(json.dumps(cli._clean(lib.as_dict())))["trace"]


def test_classify_degenerate_and_a0(write_json, capsys):
    a = write_json("z.json", LATTICE)
    code, out, err = run(["classify", "--plus", a, "--minus", a, "--lambda", "0.5+0.5i"], capsys)
    assert code == 3 and "sigma(A)=C" in err and json.loads(out)["algebraic"] == "inf"
    leb = write_json("leb.json", {"densities": [{"interval": ["-inf", "inf"], "expr": "1",
                                                 "exponents": {"infinity": 0}}]})
    code, out, _ = run(["classify", "--plus", leb, "--minus", a, "--lambda", "0.5"], capsys)
    assert code == 0 and json.loads(out)["is_eigenvalue"] is False


def test_spectrum_even_odd(write_json, tmp_path, capsys):
    a, b = write_json("even.json", EVEN), write_json("odd.json", ODD)
    grid = tmp_path / "phi.csv"
    code, out, _ = run(["spectrum", "--plus", a, "--minus", b, "--region", "0,1", "--grid", "11",
                        "--grid-out", str(grid)], capsys)
    rep = json.loads(out)
    lib = eigen.discrete_spectrum(specio.load_measure(a), specio.load_measure(b), (0.0, 1.0))
    assert code == 0 and rep["discrete"] == [] == lib
    assert rep["definitizable"] is False
    lines = grid.read_text().splitlines()
    assert lines[0] == "re_lambda,im_lambda,re_phi,im_phi" and len(lines) == 12


def test_spectrum_empty_region(write_json, capsys):
    a, b = write_json("z.json", LATTICE), write_json("z5.json", LATTICE5)
    code, out, _ = run(["spectrum", "--plus", a, "--minus", b, "--region", "0.5,0.5"], capsys)
    assert code == 0 and json.loads(out)["discrete"] == []


def test_spectrum_zone(write_json, capsys):
    z = write_json("onegap.json", ONE_GAP)
    code, out, _ = run(["spectrum", "--zone", z, "--region=-6,6", "--probes", "6"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["bands"] == [[0.0, 1.0], [2.0, "inf"]]
    assert all("A0" in c[1:] for c in rep["checks"])


def test_infzone_identity(write_json, capsys):
    z = write_json("onegap.json", ONE_GAP)
    code, out, _ = run(["infzone", "--spec", z, "--identity-check", "--lambda", "-1", "2+1i"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["identity_residual"] < 1e-10 and rep["identity_ok"]
    assert len(rep["atoms+"]) == 1 and len(rep["m"]) == 2


def test_mfun_free(write_json, capsys):
    q = write_json("free.json", {"q": "0"})
    code, out, _ = run(["mfun", "--q", q, "--lambda", "i", "--tol", "1e-12"], capsys)
    v = json.loads(out)["values"][0]["m"]
    assert code == 0 and abs(complex(*v) - 1j / sqrt_up(1j)) < 1e-8


def test_mfun_csv(write_json, capsys):
    q = write_json("free.json", {"q": "0"})
    code, out, _ = run(["mfun", "--q", q, "--lambda", "i", "2+1i", "--format", "csv"], capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "re_lambda,im_lambda,re_m,im_m,disk_radius" and len(lines) == 3


def test_critical(write_json, capsys):
    w = write_json("alpha15.json", {"r": "sign(x)*(1+abs(x))**(-1.5)", "exponents": {"plus": -1.5, "minus": -1.5}})
    code, out, _ = run(["critical", "--weight", w], capsys)
    assert code == 0 and json.loads(out)["singular_critical_point"] is True


def test_validate_and_input_errors(tmp_path, write_json, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("atoms = [{t = 0, w = 1}]\n")
    code, out, _ = run(["validate", "--measure", str(bad)], capsys)
    assert code == 2 and json.loads(out)["valid"] is False
    good = tmp_path / "good.toml"
    good.write_text('[atom_family]\npositions = "k"\nweights = "1"\ntail_exponent = 0\n')
    code, out, _ = run(["validate", "--measure", str(good)], capsys)
    assert code == 0
    code, _, err = run(["classify", "--plus", str(tmp_path / "missing.json"), "--minus", str(good),
                        "--lambda", "0"], capsys)
    assert code == 2 and "no such file" in err


def test_parse_complex():
    assert specio.parse_complex("i") == 1j
    assert specio.parse_complex("-i") == -1j
    assert specio.parse_complex("2-0.5i") == 2 - 0.5j
    assert specio.parse_complex("1+i") == 1 + 1j
    with pytest.raises(SpecError):
        specio.parse_complex("one")


def test_threads_do_not_change_output(write_json, tmp_path):
    z = write_json("onegap.json", ONE_GAP)
    outs = []
    for threads in ("1", "4"):
        path = tmp_path / f"out{threads}.json"
        cli.main(["infzone", "--spec", z, "--lambda", "i", "2+1i", "-3", "--threads", threads, "--out", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_entry_point_runs(write_json):
    z = write_json("onegap.json", ONE_GAP)
    proc = subprocess.run([sys.executable, "-m", "indefspec.cli", "infzone", "--spec", z], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["n"] == 1
