"""Shooting, amplitude continuation of the nodal branches, blow-up diagnostics
and the Dirichlet scan.

A Neumann solution with k nodes is a radial profile whose k-th interior
critical point sits at rho = R.  In scaled variables the position s_k of that
critical point depends on the scaled amplitude a = sqrt(lam) h alone, so a
branch is the explicit curve

    a  ->  (lam, h) = ((s_k(a) / R)^2,  a R / s_k(a)).

Continuation therefore walks a geometric sequence in a; the curve has no
folds in this parameter.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import brentq
from scipy.stats import kendalltau

from . import _kernel
from .errors import BarrierHit, BracketError, DomainError, IntegrationError, NodalError
from .radial import BARRIER_FLOOR, RadialTrajectory, integrate, integrate_flow, integrate_to_crit
from .specfun import EigenTable, build_eigen_table

__all__ = [
    "ShootResult",
    "BranchPoint",
    "Branch",
    "shoot_residual",
    "solve_lambda",
    "branch_point",
    "trace_branch",
    "blowup_indicators",
    "blowup_diagnostics",
    "DirichletReport",
    "dirichlet_scan",
    "multiplicity_count",
]


@dataclass(frozen=True)
class ShootResult:
    residual: float
    nodes: int
    barrier_hit: bool = False
    rho_reached: float | None = None


def shoot_residual(
    lam: float, h: float, R: float, tol: float = 1e-10, *, barrier: Literal["stop", "bounce"] = "stop"
) -> ShootResult:
    """w'(R) and the node count after shooting from w(0) = h.

    With ``barrier="stop"`` a barrier approach is returned as a tagged
    outcome (``residual`` is NaN, ``rho_reached`` set).
    """
    try:
        traj = integrate(lam, h, R, tol, bounce=(barrier == "bounce"), n_grid=2)
    except BarrierHit as hit:
        return ShootResult(math.nan, 0, True, hit.rho)
    return ShootResult(traj.residual, traj.node_count, False, R)


@dataclass
class BranchPoint:
    lam: float
    h: float
    k: int
    sup_w: float
    inf_w: float
    log_barrier_gap: float
    nodes: tuple
    residual: float
    crit_residual: float
    trajectory: RadialTrajectory = field(repr=False)

    @property
    def barrier_gap(self) -> float:
        return math.exp(self.log_barrier_gap)

    @property
    def sign(self) -> int:
        return 1 if self.h > 0 else -1


def _point_from_trajectory(traj: RadialTrajectory, k: int, R: float) -> BranchPoint:
    crit_r = [c[0] for c in traj.crits]
    last = crit_r[k] if len(crit_r) > k else math.inf
    crit_w = [c[1] for c in traj.crits]
    ext = list(traj.w) + crit_w
    if len(traj.nodes) != k:
        raise NodalError(f"expected {k} nodes, found {len(traj.nodes)}")
    return BranchPoint(
        lam=traj.lam,
        h=traj.h,
        k=k,
        sup_w=float(max(ext)),
        inf_w=float(min(ext)),
        log_barrier_gap=traj.log_barrier_min,
        nodes=tuple(traj.nodes),
        residual=float(traj.residual),
        crit_residual=abs(last - R),
        trajectory=traj,
    )


def branch_point(a: float, k: int, R: float, tol: float = 1e-11, *, n_grid: int = 401) -> BranchPoint:
    """Solution with k nodes at scaled amplitude a = sqrt(lam) h."""
    traj = integrate_to_crit(a, k, R, tol, n_grid=n_grid)
    return _point_from_trajectory(traj, k, R)


def _crit_offset(k: int, h: float, R: float, tol: float):
    def g(lam):
        r = math.sqrt(lam)
        flow = integrate_flow(r * h, n_crit=k, tol=tol)
        return flow.s_end - r * R

    return g


def solve_lambda(
    k: int, h: float, bracket: tuple[float, float], R: float = 1.0, tol: float = 1e-11, *, n_grid: int = 401
) -> BranchPoint:
    """Solution with k nodes and w(0) = h, lam located inside ``bracket``.

    The residual is the offset between the k-th critical point and the
    boundary, sqrt(lam) (rho_k - R), which is smooth in lam even where w'(R)
    turns within a thin barrier layer.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise DomainError(f"bad bracket {bracket}")
    g = _crit_offset(k, h, R, tol)
    try:
        glo, ghi = g(lo), g(hi)
    except BarrierHit as hit:
        raise BracketError(f"barrier reached at the bracket end: {hit}") from None
    if glo * ghi > 0:
        raise BracketError(f"no sign change of the residual on [{lo}, {hi}]")
    lam = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    traj = integrate(lam, h, R, tol, n_grid=n_grid)
    return _point_from_trajectory(traj, k, R)


@dataclass
class Branch:
    k: int
    sign: int
    R: float
    points: list
    termination: str
    origin_lambda: float | None = None
    asymptote_lambda: float | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _origin_lambda(points) -> float | None:
    if len(points) < 3:
        return None
    small = sorted(points, key=lambda p: abs(p.h))[:4]
    hs = np.array([p.h for p in small])
    lams = np.array([p.lam for p in small])
    deg = min(2, len(small) - 1)
    return float(np.polyfit(hs, lams, deg)[-1])


def _asymptote_lambda(points, n_tail: int = 8) -> float | None:
    if len(points) < n_tail:
        return None
    tail = points[-n_tail:]
    x = np.array([1.0 / p.sup_w for p in tail])
    y = np.array([p.lam for p in tail])
    return float(np.polyfit(x, y, 1)[-1])


def trace_branch(
    k: int,
    sign: int,
    R: float = 1.0,
    h_max: float = 50.0,
    *,
    h_min: float = 1e-4,
    ratio: float = 1.25,
    tol: float = 1e-11,
    barrier_floor: float = BARRIER_FLOOR,
    n_grid: int = 401,
    max_points: int = 2000,
) -> Branch:
    """Trace S_k^+ (sign=+1) up to sup w >= h_max or S_k^- (sign=-1) toward the barrier."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    if not ratio > 1:
        raise DomainError("ratio must exceed 1")
    table = build_eigen_table(R, k)
    a = math.sqrt(table.origin_lambda(k)) * h_min
    # negative side walks the log gap -ln(1 + a) geometrically
    log_gap = -math.log1p(-a)
    points: list = []
    failures = 0
    termination = "amplitude cap"
    while len(points) < max_points:
        amp = a if sign > 0 else -(-math.expm1(-log_gap))
        if sign < 0 and 1.0 + amp < barrier_floor * 10:
            termination = "barrier floor"
            break
        try:
            pt = branch_point(amp, k, R, tol, n_grid=n_grid)
        except (IntegrationError, NodalError, BarrierHit):
            failures += 1
            if failures >= 3:
                termination = "step failure"
                break
            ratio = math.sqrt(ratio)
        else:
            failures = 0
            points.append(pt)
            if sign > 0 and pt.sup_w >= h_max:
                break
        if sign > 0:
            a *= ratio
        else:
            log_gap *= ratio
    branch = Branch(k=k, sign=sign, R=R, points=points, termination=termination)
    branch.origin_lambda = _origin_lambda(points)
    if sign > 0:
        branch.asymptote_lambda = _asymptote_lambda(points)
    return branch


# ------------------------------------------------------------ blow-up indicators


INDICATORS = ("sup_w", "neg_log_min_gap", "even_interval_sup", "odd_interval_gap", "odd_interval_length")


def _interval_data(pt: BranchPoint):
    R = pt.trajectory.R
    edges = [0.0, *pt.nodes, R]
    crits = pt.trajectory.crits
    even_sup, odd_gap, odd_len = [], [], []
    r = math.sqrt(pt.lam)
    for i, (lo, hi) in enumerate(zip(edges, edges[1:])):
        inside = [c for c in crits if lo - 1e-14 <= c[0] <= hi + 1e-14]
        if i % 2 == 0:
            even_sup.append(max(abs(c[1]) for c in inside))
        else:
            odd_gap.append(min(c[2] for c in inside))
            odd_len.append(hi - lo)
    del r
    return even_sup, odd_gap, odd_len


def blowup_indicators(pt: BranchPoint) -> dict[str, float]:
    """The five blow-up quantities at one point, each oriented to grow with blow-up.

    * sup_w: sup of |w| on the first (positive) hump family
    * neg_log_min_gap: -ln min(1 + sqrt(lam) w)
    * even_interval_sup: min over even nodal intervals of sup |w|
    * odd_interval_gap: -ln of max over odd intervals of the interval minimum gap
    * odd_interval_length: -max odd interval length
    """
    even_sup, odd_gap, odd_len = _interval_data(pt)
    return {
        "sup_w": pt.sup_w,
        "neg_log_min_gap": -pt.log_barrier_gap,
        "even_interval_sup": min(even_sup),
        "odd_interval_gap": -max(odd_gap) if odd_gap else math.nan,
        "odd_interval_length": -max(odd_len) if odd_len else math.nan,
    }


@dataclass
class BlowupReport:
    table: dict  # indicator -> array along the tail
    tau: dict  # (name1, name2) -> Kendall tau
    increasing: dict  # indicator -> bool (monotone along the tail)
    min_tau: float

    @property
    def concordant(self) -> bool:
        return self.min_tau > 0.9


def blowup_diagnostics(branch: Branch, tail: int | None = None) -> BlowupReport:
    if len(branch.points) < 5:
        raise ValueError("blow-up diagnostics need at least 5 branch points")
    pts = branch.points if tail is None else branch.points[-tail:]
    rows = [blowup_indicators(p) for p in pts]
    table = {name: np.array([r[name] for r in rows]) for name in INDICATORS}
    names = [n for n in INDICATORS if np.all(np.isfinite(table[n]))]
    tau = {}
    for i, n1 in enumerate(names):
        for n2 in names[i + 1 :]:
            tau[(n1, n2)] = float(kendalltau(table[n1], table[n2]).statistic)
    increasing = {n: bool(np.all(np.diff(table[n]) > 0)) for n in names}
    return BlowupReport(table, tau, increasing, min(tau.values()) if tau else math.nan)


# ------------------------------------------------------------ Dirichlet scan


@dataclass
class DirichletReport:
    lambdas: np.ndarray
    h_grid: np.ndarray  # (n_lam, n_h)
    w_end: np.ndarray
    gap_end: np.ndarray
    status: np.ndarray
    zero_cells: int
    w_crossing_cells: int
    min_abs_gap: float
    min_abs_w: float
    admissible: int

    def summary(self) -> dict:
        return {
            "grid": list(self.h_grid.shape),
            "lambda_min": float(self.lambdas[0]),
            "lambda_max": float(self.lambdas[-1]),
            "admissible_samples": int(self.admissible),
            "barrier_samples": int(np.sum(self.status == _kernel.BARRIER)),
            "failed_samples": int(np.sum(self.status == _kernel.FAILED)),
            "zero_cells": int(self.zero_cells),
            "min_gap_at_R": float(self.min_abs_gap),
            "w_R_sign_change_cells": int(self.w_crossing_cells),
            "min_abs_w_R": float(self.min_abs_w),
        }


def _set_threads():
    n = os.environ.get("SINGBIF_THREADS")
    if n:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def _sign_change_cells(values: np.ndarray, ok: np.ndarray) -> int:
    s = np.sign(values)
    cell_ok = ok[:-1, :-1] & ok[1:, :-1] & ok[:-1, 1:] & ok[1:, 1:]
    corners = np.stack([s[:-1, :-1], s[1:, :-1], s[:-1, 1:], s[1:, 1:]])
    change = (corners.max(axis=0) > 0) & (corners.min(axis=0) < 0) | np.any(corners == 0, axis=0)
    return int(np.sum(change & cell_ok))


def dirichlet_scan(
    lambda_range: tuple[float, float] = (1.0, 30.0),
    h_range: tuple[float | None, float] = (None, 20.0),
    grid: tuple[int, int] = (200, 200),
    R: float = 1.0,
    tol: float = 1e-10,
    barrier_floor: float = BARRIER_FLOOR,
) -> DirichletReport:
    """Scan for radial solutions that vanish on the boundary.

    The boundary condition is u(R) = 0 for the original unknown, i.e. the
    gap 1 + sqrt(lam) w(R) must vanish.  Samples that reach the barrier before
    R are not solutions.  A zero cell is a grid cell whose four corners are
    admissible and whose boundary gap changes sign.  Sign changes of w(R)
    itself are counted separately for information.

    ``h_range[0] = None`` uses the admissible lower end -0.9 / sqrt(lam) per row.
    """
    lam_lo, lam_hi = lambda_range
    n_lam, n_h = grid
    if not 0 < lam_lo < lam_hi:
        raise DomainError("bad lambda range")
    lambdas = np.linspace(lam_lo, lam_hi, n_lam)
    rows = []
    for lam in lambdas:
        lo = h_range[0] if h_range[0] is not None else -0.9 / math.sqrt(lam)
        if not 1.0 + math.sqrt(lam) * lo > 0:
            raise DomainError(f"h range leaves the admissible region at lam={lam}")
        rows.append(np.linspace(lo, h_range[1], n_h))
    h_grid = np.array(rows)
    r = np.sqrt(lambdas)
    a_grid = h_grid * r[:, None]
    _set_threads()
    y_end, _, status = _kernel.scan_grid(a_grid, r * R, tol, barrier_floor - 1.0)
    nontrivial = h_grid != 0.0
    ok = (status == _kernel.OK) & nontrivial
    gap = 1.0 + y_end
    w_end = y_end / r[:, None]
    zero = _sign_change_cells(gap, ok)
    w_cells = _sign_change_cells(w_end, ok)
    return DirichletReport(
        lambdas=lambdas,
        h_grid=h_grid,
        w_end=w_end,
        gap_end=gap,
        status=status,
        zero_cells=zero,
        w_crossing_cells=w_cells,
        min_abs_gap=float(np.min(np.abs(gap[ok]))) if ok.any() else math.nan,
        min_abs_w=float(np.min(np.abs(w_end[ok]))) if ok.any() else math.nan,
        admissible=int(ok.sum()),
    )


# ------------------------------------------------------------ multiplicity


def multiplicity_count(lam: float, branches, table: EigenTable | None = None) -> dict:
    """Number of traced branches whose realized lambda range contains lam.

    Also reports the counts predicted by the closed-form branch ranges under
    two readings of the bracket endpoints: eigenvalues mu_j of the Laplacian
    (``mu``) or bifurcation values mu_j / 2 (``half_mu``).
    """
    count = 0
    for br in branches:
        if not br.points:
            continue
        lams = [p.lam for p in br.points]
        if min(lams) <= lam <= max(lams):
            count += 1
    out = {"count": count}
    if table is not None:
        kmax = max((br.k for br in branches), default=0)
        mu_reading = 0
        half_reading = 0
        for k in range(1, kmax + 1):
            if 2 * ((k + 1) // 2) > table.kmax:
                break
            lo, hi = sorted((table.origin_lambda(k), table.asymptote_lambda(k)))
            if lo < lam < hi:
                mu_reading += 1
            lo2, hi2 = sorted((0.5 * table.origin_lambda(k), 0.5 * table.asymptote_lambda(k)))
            if lo2 < lam < hi2:
                half_reading += 1
        out["mu"] = mu_reading
        out["half_mu"] = half_reading
    return out
