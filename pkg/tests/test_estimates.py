import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from singbif.continuation import trace_branch
from singbif.errors import DomainError
from singbif.estimates import (
    ScaledTrajectory,
    check_interval_and_derivative,
    check_lambda_bounds,
    check_log_inequality,
    check_positive_intervals,
    check_sandwich,
    envelopes,
    global_lambda_bounds,
    mixed_eigenvalue,
    verify_point,
)
from singbif.specfun import build_eigen_table


@pytest.fixture(scope="module")
def k1():
    return trace_branch(1, 1, 1.0, h_max=8.0)


@pytest.fixture(scope="module")
def k2():
    return trace_branch(2, 1, 1.0, h_max=4.0)


def test_log_inequality_values():
    lo, hi = check_log_inequality(1.0, math.e)
    assert lo == pytest.approx(1 - (math.e - 1) / math.e, abs=1e-15)
    assert hi == pytest.approx(math.e - 2, abs=1e-15)
    for eps in (1e-2, 1e-4, 1e-6):
        assert max(check_log_inequality(1.0 - eps, 1.0)) < eps
    with pytest.raises(DomainError):
        check_log_inequality(2.0, 1.0)


@settings(max_examples=2000, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(1e-9, 1e3))
def test_log_inequality_property(a, ratio):
    b = a * (1.0 + ratio)
    if not b > a:
        return
    lo, hi = check_log_inequality(a, b)
    assert lo >= -1e-15 * (b - a) / a and hi >= -1e-15 * (b - a) / a


def test_log_inequality_sweep():
    rng = np.random.default_rng(7)
    a = rng.uniform(1e-3, 10.0, 100_000)
    b = a + rng.uniform(1e-6, 10.0, 100_000)
    lg = np.log(b / a)
    assert np.all(lg - (b - a) / b >= 0) and np.all((b - a) / a - lg >= 0)
    for x, y in zip(a[:200], b[:200]):
        assert min(check_log_inequality(x, y)) >= 0


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_mixed_eigenvalue_full_interval(R):
    z1 = sp.jn_zeros(0, 1)[0]
    table = build_eigen_table(R, 2)
    for method in ("shoot", "bessel"):
        mu = mixed_eigenvalue(0.0, R, "neumann-dirichlet", method=method)
        assert mu == pytest.approx((z1 / R) ** 2, rel=1e-8)
        assert mu == pytest.approx(table.nu_k(1), rel=1e-8)


@pytest.mark.parametrize("r1,r2,bc", [(0.2, 0.7, "neumann-dirichlet"), (0.3, 0.9, "dirichlet-neumann"), (0.0, 0.4, "neumann-dirichlet")])
def test_mixed_eigenvalue_routes_agree_and_scale(r1, r2, bc):
    a = mixed_eigenvalue(r1, r2, bc, method="shoot")
    b = mixed_eigenvalue(r1, r2, bc, method="bessel")
    assert a == pytest.approx(b, rel=1e-8)
    c = 1.7
    assert mixed_eigenvalue(c * r1, c * r2, bc, method="bessel") == pytest.approx(b / c**2, rel=1e-10)


def test_mixed_eigenvalue_monotone_in_length():
    vals = [mixed_eigenvalue(0.2, 0.2 + L, "neumann-dirichlet", method="bessel") for L in np.linspace(0.1, 0.8, 15)]
    assert np.all(np.diff(vals) < 0)


def test_mixed_eigenvalue_domain():
    with pytest.raises(DomainError):
        mixed_eigenvalue(0.5, 0.2, "neumann-dirichlet")
    with pytest.raises(DomainError):
        mixed_eigenvalue(0.0, 1.0, "dirichlet-neumann")
    with pytest.raises(DomainError):
        mixed_eigenvalue(0.0, 1.0, "dirichlet-dirichlet")


def test_global_bounds_nest(k1, k2):
    for branch in (k1, k2):
        lo, hi = global_lambda_bounds(branch.k, 1.0)
        assert 0 < lo < hi
        for p in branch.points[::5]:
            segs = check_lambda_bounds(p.trajectory, method="bessel", reading="sign-aware")
            positive = [s for s in segs if s.h > 0]
            assert lo <= min(2 * s.checks[0].lhs for s in positive) / 2 + 1e-12
    with pytest.raises(DomainError):
        global_lambda_bounds(0, 1.0)


def test_sandwich_envelopes_meet_at_turn(k1):
    traj = k1.points[-1].trajectory
    seg = traj.segments[0]
    lo, hi = envelopes(traj, seg, seg.rho_bar)
    assert lo == pytest.approx(seg.h, rel=1e-10) and hi == pytest.approx(seg.h, rel=1e-10)
    for rho in np.linspace(seg.r1, seg.r2, 9)[1:-1]:
        a, b = envelopes(traj, seg, rho)
        w = traj.eval(rho)[0]
        assert a <= b + 1e-12
        assert a - 1e-7 <= w <= b + 1e-7


def test_case_a_segment(k1):
    traj = k1.points[len(k1.points) // 2].trajectory
    seg = traj.segments[0]
    assert seg.case == "A"
    sc = check_sandwich(traj, seg)
    assert sc.passed, sc.failures
    assert all(c.margin >= -1e-7 for c in sc.checks)
    iv = check_interval_and_derivative(traj, seg)
    assert iv.passed, iv.failures
    names = {c.name for c in iv.checks}
    assert {"interval-A-lower", "interval-A-upper", "derivative-A-lower"} <= names


def test_case_b_derivative(k1):
    traj = k1.points[-1].trajectory
    seg = traj.segments[1]
    assert seg.case == "B"
    iv = check_interval_and_derivative(traj, seg)
    check = next(c for c in iv.checks if c.name == "derivative-B-lower")
    assert check.passed


def test_positive_intervals(k1, k2):
    for b in (k1, k2):
        for p in b.points[::6]:
            checks = check_positive_intervals(p.trajectory)
            assert checks and all(c.passed for c in checks)


def test_sign_aware_reading_passes_all_points(k1, k2):
    for b in (k1, k2):
        for p in b.points:
            rep = verify_point(p.trajectory, reading="sign-aware")
            assert rep.passed, (b.k, p.h, rep.failures)


def test_literal_reading_fails_only_on_negative_segments(k1):
    p = k1.points[-1]
    rep = verify_point(p.trajectory, reading="literal")
    assert rep.failures == ["lambda-lower"]
    bad = [s for s in rep.lambda_bounds if not s.passed]
    assert bad and all(s.h < 0 for s in bad)


def test_scaled_profile_fails(k1):
    admissible = [p for p in k1.points if 1 + 2 * p.trajectory.sqrt_lam * p.inf_w > 0]
    p = max(admissible, key=lambda q: q.sup_w)
    rep = verify_point(ScaledTrajectory(p.trajectory, 2.0), reading="sign-aware")
    assert not rep.passed
    assert verify_point(p.trajectory, reading="sign-aware").passed
    with pytest.raises(DomainError):
        ScaledTrajectory(k1.points[-1].trajectory, 2.0)


def test_report_serializes(k1):
    d = verify_point(k1.points[-1].trajectory, reading="sign-aware").as_dict()
    assert d["pass"] is True and d["failures"] == []
    assert all(set(c) == {"id", "lhs", "rhs", "margin", "pass"} for c in d["positive_intervals"])
