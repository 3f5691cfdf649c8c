import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singbif import io as sio
from singbif.cli import main
from singbif.continuation import trace_branch
from singbif.errors import DomainError
from singbif.specfun import build_eigen_table


@pytest.fixture(scope="module")
def branch():
    return trace_branch(1, 1, 1.0, h_max=4.0)


@pytest.fixture(scope="module")
def table():
    return build_eigen_table(1.0, 4)


def test_config_defaults():
    cfg = sio.parse_config()
    assert cfg.radius == 1.0 and cfg.tol_ode == 1e-10 and cfg.tol_quad == 1e-10
    assert cfg.format == "csv" and cfg.grid == [200, 200]


def test_config_precedence(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"radius": 3.0, "kmax": 5}))
    cfg = sio.parse_config({"radius": None}, path)
    assert cfg.radius == 3.0 and cfg.kmax == 5
    cfg = sio.parse_config({"radius": 2.0}, path)
    assert cfg.radius == 2.0 and cfg.kmax == 5


@pytest.mark.parametrize(
    "overrides,key",
    [({"tol_ode": -1e-3}, "tol_ode"), ({"radius": 0}, "radius"), ({"grid": [1, 5]}, "grid"), ({"colour": 1}, "colour")],
)
def test_config_errors_name_the_key(overrides, key):
    with pytest.raises(sio.ConfigError, match=key):
        sio.parse_config(overrides)


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"tolerance": 1e-3}))
    with pytest.raises(sio.ConfigError, match="tolerance"):
        sio.parse_config(None, path)
    path.write_text("{not json")
    with pytest.raises(sio.ConfigError):
        sio.parse_config(None, path)


@given(st.floats(allow_nan=False, allow_infinity=False, max_value=1e300, min_value=-1e300))
def test_fmt_round_trips_to_15_digits(x):
    y = float(sio.fmt(x))
    assert y == x or abs(y - x) <= 1e-14 * abs(x)
    assert sio.fmt(y) == sio.fmt(x)


def test_fmt_special_values():
    assert sio.fmt(float("nan")) == "nan"
    assert sio.fmt(float("inf")) == "inf" and sio.fmt(-math.inf) == "-inf"


def test_csv_round_trip(tmp_path, branch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    sio.write_branch_csv(a, branch)
    recs = sio.read_branch_csv(a)
    assert len(recs) == len(branch.points)
    assert recs[0]["nodes"] and recs[-1]["lambda"] == pytest.approx(branch.points[-1].lam, rel=1e-14)
    header, rows = sio.read_csv(a)
    sio.write_csv(b, header, rows)
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" in a.read_bytes()


def test_json_round_trip(tmp_path):
    obj = {"b": [1.0, 1 / 3, float("nan")], "a": {"z": np.float64(2.5), "y": np.int64(3)}}
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    sio.write_json(a, obj)
    sio.write_json(b, sio.read_json(a))
    assert a.read_bytes() == b.read_bytes()
    assert list(json.loads(a.read_text())) == ["a", "b"]


def test_nice_ticks():
    ticks = sio.nice_ticks(5.78, 7.34)
    assert len(ticks) >= 3 and 5.78 <= ticks[0] and ticks[-1] <= 7.34
    assert np.allclose(np.diff(ticks), ticks[1] - ticks[0])


def test_single_branch_diagram(tmp_path, branch, table):
    svg = sio.diagram_svg([branch], table)
    assert svg.count("<polyline") == 1
    assert svg.count('stroke-dasharray="6,4"/>') == 2 + 2  # two guides plus two legend samples
    # the guides sit at mu_1 / 2 and nu_1
    xs = [float(line.split('x1="')[1].split('"')[0]) for line in svg.splitlines() if "stroke-dasharray" in line and "y2=" in line and 'y1="40"' in line]
    assert len(xs) == 2
    lo, hi = min(p.lam for p in branch.points), max(p.lam for p in branch.points)
    lam_lo = min(lo, table.nu_k(1))
    assert xs[0] > xs[1]  # mu_1 / 2 lies to the right of nu_1
    assert table.origin_lambda(1) == pytest.approx(table.mu_k(1) / 2) and lam_lo <= table.nu_k(1) <= hi


def test_diagram_determinism_and_errors(tmp_path, branch, table):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    sio.emit_diagram([branch], table, a)
    sio.emit_diagram([branch], table, b)
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".csv").read_bytes() == b.with_suffix(".csv").read_bytes()
    with pytest.raises(DomainError):
        sio.emit_diagram([], table, a)


def test_cli_eigen(tmp_path, capsys, table):
    assert main(["eigen", "--kmax", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split(",") == ["k", "y_k", "z_k", "mu_k", "nu_k"]
    assert float(lines[1].split(",")[3]) == pytest.approx(table.mu_k(1), rel=1e-14)
    out = tmp_path / "e.json"
    assert main(["eigen", "--kmax", "3", "--format", "json", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())) == 3


def test_cli_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eigen", "--tol-ode=-1e-3"])
    assert exc.value.code == 2
    assert "tol_ode" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["diagram", "--kmax", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["eigen", "--out", "/nonexistent/dir/x.csv"])
    assert exc.value.code == 2


def test_cli_numeric_error(capsys):
    assert main(["shoot", "--lambda", "-1", "--h", "0.5"]) == 3
    assert "DomainError" in capsys.readouterr().err


def test_cli_shoot_and_phi(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["shoot", "--lambda", "5", "--h", "0.5", "--out", str(out)]) == 0
    header, rows = sio.read_csv(out)
    assert header == ["rho", "w", "dw"] and float(rows[0][1]) == 0.5
    assert main(["phi", "--lambda", "1", "--h", "1"]) == 0
    val = json.loads(capsys.readouterr().out)["value"]
    assert 0 < val < math.pi / 2
    assert main(["phi", "--limits"]) == 0
    lim = json.loads(capsys.readouterr().out)
    for key in ("h->0+", "h->0-"):
        assert lim[key]["analytic"] == pytest.approx(lim[key]["numerical"], rel=1e-9)
    assert abs(lim["h->-1/sqrt(lam)"]["numerical"]) < 1e-6


def test_cli_branch_verify(tmp_path, capsys):
    csv_path = tmp_path / "b1.csv"
    assert main(["branch", "--k", "1", "--hmax", "3", "--out", str(csv_path)]) == 0
    rep = tmp_path / "rep.json"
    assert main(["verify", "--branch", str(csv_path), "--reading", "sign-aware", "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["pass"] is True
    assert main(["verify", "--branch", str(csv_path), "--reading", "literal", "--report", str(rep)]) == 1
    assert json.loads(rep.read_text())["failed_checks"] == ["lambda-lower"]


def test_cli_diagram_twice(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for path in (a, b):
        assert main(["diagram", "--kmax", "1", "--hmax", "3", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".csv").read_bytes() == b.with_suffix(".csv").read_bytes()


def test_cli_dirichlet_and_sandbox(tmp_path, capsys):
    assert main(["dirichlet-scan", "--grid", "20x20"]) == 0
    assert json.loads(capsys.readouterr().out)["zero_cells"] == 0
    rep = tmp_path / "sb.json"
    assert main(["sandbox", "--rho-sweep", "0.1", "--no-levels", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert all(data["sweep"][0]["exclusion"])
    with pytest.raises(SystemExit):
        main(["dirichlet-scan", "--grid", "20by20"])
