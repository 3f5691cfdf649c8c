import math

import numpy as np
import pytest
import scipy.special as sp
from scipy.integrate import quad

from singbif.continuation import (
    Branch,
    blowup_diagnostics,
    dirichlet_scan,
    multiplicity_count,
    shoot_residual,
    solve_lambda,
    trace_branch,
)
from singbif.errors import BracketError, DomainError
from singbif.estimates import global_lambda_bounds
from singbif.specfun import build_eigen_table

TABLE = build_eigen_table(1.0, 6)
LAM1 = TABLE.mu_k(1) / 2


def first_order_slope(R=1.0):
    """d lam / d h at the first bifurcation point.

    With w = h phi + O(h^2), phi = J0(y_1 rho / R), solvability of the
    second-order equation against phi gives
    lam_1 = lam_0^{3/2} int phi^3 rho / (2 int phi^2 rho).
    """
    y1 = sp.jn_zeros(1, 1)[0]
    lam0 = (y1 / R) ** 2 / 2
    cube = quad(lambda r: sp.j0(y1 * r / R) ** 3 * r, 0, R, epsabs=1e-14)[0]
    square = quad(lambda r: sp.j0(y1 * r / R) ** 2 * r, 0, R, epsabs=1e-14)[0]
    return lam0**1.5 * cube / (2 * square)


@pytest.fixture(scope="module")
def k1_branch():
    return trace_branch(1, 1, 1.0, h_max=8.0)


def test_linearized_residual_vanishes_at_bifurcation_value():
    h = 1e-8
    res = shoot_residual(LAM1, h, 1.0, 1e-12)
    assert abs(res.residual) <= 1e-6 * h * math.sqrt(2 * LAM1)
    assert res.nodes == 1 and not res.barrier_hit


@pytest.mark.parametrize("lam", [10.0, 15.0, 20.0])
def test_linearized_residual_sign(lam):
    h = 1e-8
    res = shoot_residual(lam, h, 1.0, 1e-12)
    k = math.sqrt(2 * lam)
    oracle = -h * k * sp.j1(k)
    assert np.sign(res.residual) == np.sign(oracle)
    assert res.residual == pytest.approx(oracle, rel=1e-5)


def test_residual_continuous_in_h():
    hs = np.linspace(0.05, 1.0, 40)
    vals = np.array([shoot_residual(9.0, h, 1.0, 1e-11).residual for h in hs])
    assert np.max(np.abs(np.diff(vals))) < 0.2


def test_barrier_is_a_tagged_outcome():
    res = shoot_residual(1.0, 12.0, 4.5, 1e-10, barrier="stop")
    assert res.barrier_hit and math.isnan(res.residual) and 0 < res.rho_reached < 4.5


def test_solve_lambda_first_order_oracle():
    slope = first_order_slope()
    assert slope == pytest.approx(3.5034, abs=1e-3)
    errs = []
    for h in (1e-2, 1e-3):
        pt = solve_lambda(1, h, (LAM1 - 0.5, LAM1 + 0.5))
        assert pt.k == 1 and len(pt.nodes) == 1
        assert abs(pt.residual) <= 1e-9
        errs.append(abs(pt.lam - (LAM1 + slope * h)))
    assert errs[1] < 1e-5
    assert errs[0] / errs[1] > 30  # the remainder is quadratic in h


def test_solve_lambda_tolerance_refinement():
    one = solve_lambda(1, 0.3, (6.0, 9.0), tol=1e-10)
    two = solve_lambda(1, 0.3, (6.0, 9.0), tol=1e-11)
    assert abs(one.lam - two.lam) <= 1e-8


def test_solve_lambda_point_within_global_bounds():
    pt = solve_lambda(2, 0.5, (15.0, 35.0))
    lo, hi = global_lambda_bounds(2, 1.0)
    assert lo <= pt.lam <= hi


def test_solve_lambda_bracket_errors():
    with pytest.raises(BracketError):
        solve_lambda(1, 0.01, (8.0, 9.0))
    with pytest.raises(DomainError):
        solve_lambda(1, 0.01, (9.0, 8.0))


def test_branch_invariants(k1_branch):
    b = k1_branch
    assert b.termination == "amplitude cap"
    assert all(p.lam > 0 for p in b.points)
    assert all(len(p.nodes) == 1 for p in b.points)
    assert all(p.h > 0 for p in b.points)
    hs = b.column("h")
    assert np.all(np.diff(hs) > 0)
    assert abs(b.origin_lambda - LAM1) < 1e-3
    lo, hi = global_lambda_bounds(1, 1.0)
    for p in b.points:
        assert lo <= p.lam <= hi
        # first (positive) hump is at least a quarter period
        assert p.nodes[0] >= math.pi / (4 * math.sqrt(hi)) - 1e-8
        assert p.crit_residual < 1e-9


def test_negative_branch_stops_at_barrier_floor():
    b = trace_branch(1, -1, 1.0, h_min=1e-3, ratio=1.6)
    assert b.termination == "barrier floor"
    assert b.asymptote_lambda is None
    assert all(p.h < 0 and p.k == 1 for p in b.points)
    assert abs(b.origin_lambda - LAM1) < 1e-2


def test_blowup_requires_points(k1_branch):
    short = Branch(1, 1, 1.0, k1_branch.points[:3], "amplitude cap")
    with pytest.raises(ValueError):
        blowup_diagnostics(short)


def test_blowup_concordance(k1_branch):
    rep = blowup_diagnostics(k1_branch, tail=12)
    assert rep.concordant
    assert rep.increasing["sup_w"] and rep.increasing["odd_interval_length"]


def test_dirichlet_scan_small_grid():
    rep = dirichlet_scan(grid=(40, 40))
    assert rep.zero_cells == 0
    assert rep.admissible > 0
    with pytest.raises(DomainError):
        dirichlet_scan(lambda_range=(4.0, 9.0), h_range=(-0.6, 1.0), grid=(5, 5))


def test_dirichlet_scan_excludes_trivial_row():
    rep = dirichlet_scan(lambda_range=(2.0, 3.0), h_range=(-0.5, 0.5), grid=(4, 5))
    assert np.all(rep.h_grid[:, 2] == 0.0)
    assert rep.admissible <= 4 * 4


def test_multiplicity(k1_branch):
    nu1 = TABLE.nu_k(1)
    lam = 0.5 * (nu1 + LAM1)
    one = multiplicity_count(lam, [k1_branch], TABLE)
    assert one["count"] >= 1
    assert multiplicity_count(1.0, [k1_branch])["count"] == 0
    k2 = trace_branch(2, 1, 1.0, h_max=2.0)
    assert multiplicity_count(lam, [k1_branch, k2])["count"] >= one["count"]
