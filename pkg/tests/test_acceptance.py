"""Acceptance criteria 1-10, one PASS/FAIL line each (see the terminal summary)."""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest
import scipy.special as sp

from singbif.continuation import blowup_diagnostics, dirichlet_scan, solve_lambda, trace_branch
from singbif.estimates import ScaledTrajectory, verify_point
from singbif.phi import extrapolate_limits, phi
from singbif.sandbox import default_model, galerkin_model, sweep
from singbif.specfun import build_eigen_table

pytestmark = pytest.mark.acceptance

TABLE = build_eigen_table(1.0, 8)
TIMINGS: dict = {}


@pytest.fixture(scope="module")
def branches():
    out = {}
    for k in (1, 2, 3):
        for sign in (1, -1):
            t0 = time.perf_counter()
            out[k, sign] = trace_branch(k, sign, 1.0, 50.0)
            TIMINGS[k, sign] = time.perf_counter() - t0
    return out


def bisect_zero(f, a, b, tol=1e-15):
    fa = f(a)
    while b - a > tol * max(1.0, b):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def oracle_zeros(order, count):
    """Zeros of J_order by a sign scan on a 0.05 grid and bisection in 30-digit arithmetic."""
    mpmath.mp.dps = 30
    f = lambda x: float(mpmath.besselj(order, x))  # noqa: E731
    zeros, x = [], 0.5
    while len(zeros) < count:
        if f(x) * f(x + 0.05) < 0:
            zeros.append(bisect_zero(f, x, x + 0.05))
        x += 0.05
    return zeros


def test_criterion_1_eigen_tables(acceptance):
    t0 = time.perf_counter()
    table = build_eigen_table(1.0, 21)
    ys = list(table.y[:20])
    zs = list(table.z[:21])
    interlaced = all(table.nu_k(k) < table.mu_k(k) < table.nu_k(k + 1) for k in range(1, 21))
    elapsed = time.perf_counter() - t0
    err_y1 = abs(ys[0] - oracle_zeros(1, 1)[0])
    err_z1 = abs(zs[0] - oracle_zeros(0, 1)[0])
    err_all = max(
        max(abs(a - b) for a, b in zip(ys, oracle_zeros(1, 20))),
        max(abs(a - b) for a, b in zip(zs, oracle_zeros(0, 21))),
    )
    ok = err_y1 <= 1e-10 and err_z1 <= 1e-10 and interlaced and elapsed < 1.0
    acceptance(1, ok, f"|y1 err| {err_y1:.1e}, |z1 err| {err_z1:.1e}, max err k<=20 {err_all:.1e}, "
                      f"interlacing {interlaced}, {elapsed:.3f} s")
    assert ok


def test_criterion_2_phi_limits(acceptance):
    t0 = time.perf_counter()
    num = extrapolate_limits(1.0)
    elapsed = time.perf_counter() - t0
    targets = {
        "h->0+": (math.pi / (2 * math.sqrt(2)), 1e-4),
        "h->inf": (math.pi / 2, 1e-2),
        "h->0-": (-math.pi / (2 * math.sqrt(2)), 1e-4),
        "h->-1/sqrt(lam)": (0.0, 1e-3),
    }
    errs = {key: abs(num[key] - target) for key, (target, _) in targets.items()}
    ok = all(errs[key] <= tol for key, (_, tol) in targets.items()) and elapsed < 5.0
    acceptance(2, ok, ", ".join(f"{k} err {v:.1e}" for k, v in errs.items()) + f", {elapsed:.2f} s")
    assert ok


def test_criterion_3_phi_scaling(acceptance):
    worst = 0.0
    for lam in np.geomspace(0.1, 50.0, 10):
        r = math.sqrt(lam)
        for a in np.linspace(-0.9, 20.0, 10):
            h = a / r
            lhs = phi(lam, h, h).value
            rhs = phi(1.0, a, a).value / r
            worst = max(worst, abs(lhs - rhs))
    ok = worst <= 1e-9
    acceptance(3, ok, f"max |difference| over 10x10 grid {worst:.1e}")
    assert ok


def test_criterion_4_local_bifurcation(acceptance, branches):
    parts, ok = [], True
    for k in (1, 2):
        target = TABLE.origin_lambda(k)
        for sign in (1, -1):
            err = abs(branches[k, sign].origin_lambda - target)
            ok &= err <= 1e-3
            parts.append(f"k={k}{'+' if sign > 0 else '-'} origin err {err:.1e}")
            errs = []
            for h in (1e-2, 1e-3, 1e-4):
                pt = solve_lambda(k, sign * h, (target - 2.0, target + 2.0))
                errs.append(abs(pt.lam - target))
            ok &= errs[0] > errs[1] > errs[2]
            parts.append("errs " + "/".join(f"{e:.1e}" for e in errs))
    acceptance(4, ok, "; ".join(parts))
    assert ok


def test_criterion_5_asymptotes(acceptance, branches):
    parts, ok = [], True
    for k, target in ((1, TABLE.nu_k(1)), (2, TABLE.mu_k(1))):
        b = branches[k, 1]
        rel = abs(b.asymptote_lambda - target) / target
        top = max(p.sup_w for p in b.points)
        dt = TIMINGS[k, 1]
        ok &= rel <= 0.02 and top >= 50 and dt < 60
        parts.append(f"k={k} asymptote {b.asymptote_lambda:.5f} vs {target:.5f} (rel {rel:.1e}), sup w {top:.1f}, {dt:.1f} s")
    acceptance(5, ok, "; ".join(parts))
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="per-segment lower bound mu_bar/2 <= lambda is violated on negative segments of true solutions; "
    "see the decisions ledger",
)
def test_criterion_6_inequality_suite(acceptance, branches):
    failures, worst, n = set(), math.inf, 0
    for b in branches.values():
        for p in b.points:
            rep = verify_point(p.trajectory, 1e-7, reading="literal")
            failures |= set(rep.failures)
            worst = min(worst, rep.worst_margin)
            n += 1
    b1 = branches[1, 1]
    admissible = [p for p in b1.points if 1 + 2 * p.trajectory.sqrt_lam * p.inf_w > 0]
    probe = max(admissible, key=lambda q: q.sup_w)
    control = verify_point(ScaledTrajectory(probe.trajectory, 2.0), 1e-7, reading="literal")
    ok = not failures and not control.passed
    acceptance(
        6, ok,
        f"{n} points on k=1,2,3; failing checks {sorted(failures) or 'none'} (worst margin {worst:.3g}); "
        f"scaled-by-2 control at h={probe.h:.3g} fails {control.failures}",
    )
    assert ok


def test_criterion_6_supplement_sign_aware(branches):
    """Everything except the literal lower bound holds, and the negative control still fails."""
    for b in branches.values():
        for p in b.points:
            rep = verify_point(p.trajectory, 1e-7, reading="sign-aware")
            assert rep.passed, (b.k, b.sign, p.h, rep.failures)
            assert set(verify_point(p.trajectory, 1e-7, reading="literal").failures) <= {"lambda-lower"}
    b1 = branches[1, 1]
    admissible = [p for p in b1.points if 1 + 2 * p.trajectory.sqrt_lam * p.inf_w > 0]
    probe = max(admissible, key=lambda q: q.sup_w)
    assert not verify_point(ScaledTrajectory(probe.trajectory, 2.0), reading="sign-aware").passed


def test_criterion_7_blowup_concordance(acceptance, branches):
    parts, ok = [], True
    for k in (1, 2, 3):
        rep = blowup_diagnostics(branches[k, 1])
        ok &= rep.min_tau > 0.9
        parts.append(f"S{k}+ min tau {rep.min_tau:.3f}")
    for k in (1, 2, 3):
        rep = blowup_diagnostics(branches[k, -1])
        parts.append(f"S{k}- (w(0) < 0, informational) min tau {rep.min_tau:.3f}")
    acceptance(7, ok, "; ".join(parts))
    assert ok


def test_criterion_8_dirichlet(acceptance):
    parts, ok = [], True
    for n in (200, 400):
        t0 = time.perf_counter()
        rep = dirichlet_scan(grid=(n, n))
        dt = time.perf_counter() - t0
        ok &= rep.zero_cells == 0 and rep.admissible > 0 and (n > 200 or dt < 120)
        parts.append(f"{n}x{n}: {rep.zero_cells} zero cells of {rep.admissible} admissible, min |w(R)| {rep.min_abs_w:.3g}, {dt:.1f} s")
    acceptance(8, ok, "; ".join(parts))
    assert ok


def _shrinks(values):
    """Non-increasing down each column, strictly unless the column is identically zero."""
    steps = np.diff(values, axis=0)
    return bool(np.all((steps < 0) | ((steps == 0) & (values[1:] == 0))))


def _check_sweep(report, lam_hat):
    rows = report["sweep"]
    ok = True
    devs, c1, c2, kkt = [], [], [], 0.0
    for row in rows:
        ok &= row["distinct"] > 1e-6 and all(row["exclusion"]) and all(row["f_window"])
        devs.append([abs(p["lambda"] - lam_hat) for p in row["pairs"]])
        c1.append([abs(p["C1"]) for p in row["pairs"]])
        c2.append([abs(p["C2"]) for p in row["pairs"]])
        kkt = max(kkt, *(p["kkt_residual"] for p in row["pairs"]))
    devs, c1, c2 = map(np.array, (devs, c1, c2))
    ok &= bool(np.all(np.diff(devs, axis=0) < 0)) and bool(np.all(devs[-1] < 0.05 * lam_hat))
    ok &= kkt <= 1e-8
    ok &= _shrinks(c1[-3:]) and _shrinks(c2[-3:])
    cf, lv = report["levels_closed_form"], report["levels_rho0"]
    closed = max(abs(cf["a1"] - lv["a1"]), abs(cf["b2"] - lv["b2"]))
    ok &= closed <= 1e-10
    return ok, devs, kkt, closed


def test_criterion_9_sandbox(acceptance):
    parts, ok = [], True
    for model in (default_model(), galerkin_model()):
        report = sweep(model, with_levels=False)
        good, devs, kkt, closed = _check_sweep(report, model.lam_hat)
        ok &= good
        dev_text = ", ".join(f"{d.max():.1e}" for d in devs)
        parts.append(f"{model.name}: max |lam - lam_hat| per rho {dev_text}; KKT {kkt:.1e}; closed forms {closed:.1e}")
    acceptance(9, ok, "; ".join(parts))
    assert ok


def _cli(args, cwd, seed):
    env = dict(os.environ, PYTHONHASHSEED=str(seed))
    subprocess.run([sys.executable, "-m", "singbif.cli", *args], cwd=cwd, env=env, check=True,
                   stdout=subprocess.PIPE, stderr=subprocess.PIPE)


def test_criterion_10_determinism(acceptance, tmp_path):
    runs = []
    for seed, name in ((1, "a"), (2, "b")):
        d = tmp_path / name
        d.mkdir()
        (d / "run.json").write_text('{"kmax": 2, "grid": [40, 40]}')
        c = ["--config", "run.json"]
        _cli(["eigen", *c, "--out", "eigen.csv"], d, seed)
        _cli(["eigen", *c, "--format", "json", "--out", "eigen.json"], d, seed)
        _cli(["shoot", *c, "--lambda", "5", "--h", "0.5", "--out", "shoot.csv"], d, seed)
        _cli(["phi", *c, "--limits", "--out", "phi.json"], d, seed)
        _cli(["branch", *c, "--k", "1", "--out", "branch.csv"], d, seed)
        _cli(["branch", *c, "--k", "2", "--sign", "-", "--format", "json", "--out", "branch.json"], d, seed)
        _cli(["diagram", *c, "--out", "diagram.svg"], d, seed)
        _cli(["verify", *c, "--branch", "branch.csv", "--reading", "sign-aware", "--report", "verify.json"], d, seed)
        _cli(["dirichlet-scan", *c, "--out", "dirichlet.json"], d, seed)
        _cli(["sandbox", *c, "--rho-sweep", "0.1", "--no-levels", "--report", "sandbox.json"], d, seed)
        runs.append(d)
    names = sorted(p.name for p in runs[0].iterdir())
    differing = [n for n in names if (runs[0] / n).read_bytes() != (runs[1] / n).read_bytes()]
    ok = not differing and len(names) >= 12
    acceptance(10, ok, f"{len(names)} files compared across two runs; differing: {differing or 'none'}")
    assert ok
