"""A-priori inequalities for radial solutions, checked on computed trajectories.

Each monotone segment runs between a critical point rho_bar (turning value
h = w(rho_bar)) and a node rho0.  The sandwich bounds are verified in the
time-map coordinate: since Phi_{lam,h} is monotone, bounding
``Phi(h) - Phi(w(rho))`` between the two radial expressions is equivalent to
placing w(rho) between the inverse-time-map envelopes, and it avoids one
root solve per sample.  :func:`envelopes` evaluates the envelopes themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import j0, j1, y0, y1

from .errors import BracketError, DomainError
from .phi import phi, phi_at_turning, phi_inverse
from .radial import F_scaled, Segment

__all__ = [
    "Check",
    "SegmentCheck",
    "PointReport",
    "check_log_inequality",
    "check_sandwich",
    "check_interval_and_derivative",
    "check_positive_intervals",
    "mixed_eigenvalue",
    "check_lambda_bounds",
    "global_lambda_bounds",
    "envelopes",
    "ScaledTrajectory",
    "verify_point",
]

SQRT2 = math.sqrt(2.0)
DEFAULT_TOL = 1e-7


@dataclass(frozen=True)
class Check:
    """Assertion ``lhs <= rhs``; ``margin = rhs - lhs``."""

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool

    def as_dict(self) -> dict:
        return {"id": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "pass": self.passed}


def _le(name: str, lhs: float, rhs: float, tol: float) -> Check:
    margin = rhs - lhs
    slack = tol * max(1.0, abs(lhs), abs(rhs))
    return Check(name, float(lhs), float(rhs), float(margin), bool(margin >= -slack))


@dataclass
class SegmentCheck:
    case: str
    r1: float
    r2: float
    h: float
    checks: list = field(default_factory=list)
    tol: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    @property
    def worst_margin(self) -> float:
        return min((c.margin for c in self.checks), default=math.inf)

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "r1": self.r1,
            "r2": self.r2,
            "h": self.h,
            "tol": self.tol,
            "pass": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }


def check_log_inequality(a: float, b: float) -> tuple[float, float]:
    """Margins of (b - a)/b <= ln(b/a) <= (b - a)/a."""
    if not 0 < a < b:
        raise DomainError("need 0 < a < b")
    lg = math.log1p((b - a) / a)
    return lg - (b - a) / b, (b - a) / a - lg


# ------------------------------------------------------------ trajectory views


class ScaledTrajectory:
    """The profile c * w(rho) with the geometry of ``traj``; a non-solution
    used as a negative control."""

    def __init__(self, traj, factor: float):
        self.base = traj
        self.factor = float(factor)
        self.lam = traj.lam
        self.h = factor * traj.h
        self.R = traj.R
        self.nodes = list(traj.nodes)
        r = math.sqrt(traj.lam)
        self.crits = []
        for rho, w, _ in traj.crits:
            q = 1.0 + r * factor * w
            if not q > 0:
                raise DomainError(f"scaled profile crosses the barrier (factor {factor})")
            self.crits.append((rho, factor * w, math.log(q)))
        self.segments = [
            Segment(s.r1, s.r2, s.case, s.rho_bar, s.rho0, factor * s.h,
                    math.log1p(r * factor * s.h), s.complete)
            for s in traj.segments
        ]

    def eval(self, rho):
        w, dw, _ = self.base.eval(rho)
        y = math.sqrt(self.lam) * self.factor * w
        if not 1.0 + y > 0:
            raise DomainError("scaled profile crosses the barrier")
        return self.factor * w, self.factor * dw, math.log1p(y)

    def F_at(self, rho):
        w, _, lq = self.eval(rho)
        return float(F_scaled(math.sqrt(self.lam) * w, lq))


def _F_turn(lam: float, seg: Segment) -> float:
    y = math.sqrt(lam) * seg.h
    return float(F_scaled(y, seg.log_gap_h))


def _phi_h(lam: float, seg: Segment, tol: float) -> float:
    lg = seg.log_gap_h if seg.h < 0 else None
    return phi_at_turning(lam, seg.h, tol, log_gap=lg)


def _phi_w(lam: float, seg: Segment, w: float, log_gap_w: float, tol: float) -> float:
    h = seg.h
    if h > 0:
        w = min(max(w, 0.0), h)
        return phi(lam, h, w, tol).value
    w = max(min(w, 0.0), h)
    if w == 0.0:
        return 0.0
    s_lg = min(max(log_gap_w, seg.log_gap_h), 0.0)
    return phi(lam, h, w, tol, log_gap=seg.log_gap_h, s_log_gap=s_lg).value


def _time_bounds(case: str, rho_bar: float, rho: float) -> tuple[float, float]:
    if case in "AC":
        lower = SQRT2 * rho_bar * math.log(rho / rho_bar) if rho_bar > 0 else 0.0
        upper = SQRT2 * (rho - rho_bar)
    else:
        lower = SQRT2 * (rho_bar - rho)
        upper = SQRT2 * rho_bar * math.log(rho_bar / rho)
    return lower, upper


def _elapsed(case: str, full: float, val: float) -> float:
    # time-map distance from the turn, oriented to be nonnegative
    return full - val if case in "AD" else val - full


def check_sandwich(
    traj, seg: Segment, tol: float = DEFAULT_TOL, *, n_samples: int = 50, quad_tol: float = 1e-12
) -> SegmentCheck:
    """Pointwise envelope bounds on interior samples plus the energy sandwich at the ends."""
    lam = traj.lam
    out = SegmentCheck(seg.case, seg.r1, seg.r2, seg.h, tol=tol)
    full = _phi_h(lam, seg, quad_tol)
    lo_r, hi_r = seg.r1, seg.r2
    worst_lo = worst_hi = None
    order = worst_order = None
    for rho in lo_r + (hi_r - lo_r) * np.linspace(0.02, 0.98, n_samples):
        w, _, lq = traj.eval(rho)
        x = _elapsed(seg.case, full, _phi_w(lam, seg, w, lq, quad_tol))
        lower, upper = _time_bounds(seg.case, seg.rho_bar, rho)
        c_lo = _le("sandwich-lower", lower, x, tol)
        c_hi = _le("sandwich-upper", x, upper, tol)
        order = _le("envelope-order", lower, upper, tol)
        if worst_lo is None or c_lo.margin < worst_lo.margin:
            worst_lo = c_lo
        if worst_hi is None or c_hi.margin < worst_hi.margin:
            worst_hi = c_hi
        if worst_order is None or order.margin < worst_order.margin:
            worst_order = order
    out.checks += [worst_lo, worst_hi, worst_order]

    r1, r2 = seg.r1, seg.r2
    _, p1, _ = traj.eval(r1)
    _, p2, _ = traj.eval(r2)
    dE = r2 * r2 * p2 * p2 - r1 * r1 * p1 * p1
    dF = traj.F_at(r2) - traj.F_at(r1)
    if seg.case in "AC":
        out.checks += [
            _le("energy-AC-lower", 2 * r1 * r1 * dF, dE, tol),
            _le("energy-AC-upper", dE, 2 * r2 * r2 * dF, tol),
        ]
    else:
        out.checks += [
            _le("energy-BD-lower", 2 * r2 * r2 * dF, dE, tol),
            _le("energy-BD-upper", dE, 2 * r1 * r1 * dF, tol),
        ]
    return out


def envelopes(traj, seg: Segment, rho: float, tol: float = 1e-12) -> tuple[float, float]:
    """(lower, upper) bounds for w(rho) from the inverse time map.

    Arguments falling outside the range of the time map are clamped, which
    makes the corresponding bound the trivial one (0 or h).
    """
    lam = traj.lam
    lg = seg.log_gap_h if seg.h < 0 else None
    full = phi_at_turning(lam, seg.h, tol, log_gap=lg)
    t_lo, t_hi = _time_bounds(seg.case, seg.rho_bar, rho)

    def inv(target):
        if full > 0:
            target = min(max(target, 0.0), full)
        else:
            target = max(min(target, 0.0), full)
        return phi_inverse(lam, seg.h, target, tol, log_gap=lg, full=full)

    sgn = 1.0 if seg.case in "AD" else -1.0
    # w is monotone in elapsed time: toward 0 as the distance from the turn grows
    a = inv(full - sgn * t_lo)
    b = inv(full - sgn * t_hi)
    return (min(a, b), max(a, b))


def check_interval_and_derivative(
    traj, seg: Segment, tol: float = DEFAULT_TOL, *, quad_tol: float = 1e-12
) -> SegmentCheck:
    """Two-sided bounds on Phi(h) by segment length and on |w'(rho0)| by sqrt(-F(h))."""
    if not seg.complete:
        raise DomainError("segment does not end at a node")
    lam = traj.lam
    out = SegmentCheck(seg.case, seg.r1, seg.r2, seg.h, tol=tol)
    full = _phi_h(lam, seg, quad_tol)
    rb, r0 = seg.rho_bar, seg.rho0
    t = abs(full)
    if seg.case in "AC":
        log_term = SQRT2 * rb * math.log(r0 / rb) if rb > 0 else 0.0
        out.checks += [
            _le(f"interval-{seg.case}-log", SQRT2 * rb / r0 * (r0 - rb), log_term, tol),
            _le(f"interval-{seg.case}-lower", log_term, t, tol),
            _le(f"interval-{seg.case}-upper", t, SQRT2 * (r0 - rb), tol),
        ]
    else:
        log_term = SQRT2 * rb * math.log(rb / r0)
        out.checks += [
            _le(f"interval-{seg.case}-lower", SQRT2 * (rb - r0), t, tol),
            _le(f"interval-{seg.case}-upper", t, log_term, tol),
            _le(f"interval-{seg.case}-log", log_term, SQRT2 * rb / r0 * (rb - r0), tol),
        ]
    _, dw, _ = traj.eval(r0)
    slope = -dw if seg.case in "AB" else dw
    g = SQRT2 * math.sqrt(max(-_F_turn(lam, seg), 0.0))
    if seg.case in "AC":
        lo, hi = rb / r0 * g, g
    else:
        lo, hi = g, rb / r0 * g
    out.checks += [
        _le(f"derivative-{seg.case}-lower", lo, slope, tol),
        _le(f"derivative-{seg.case}-upper", slope, hi, tol),
    ]
    return out


def check_positive_intervals(traj, tol: float = 1e-8) -> list[Check]:
    """Nodal intervals on which w > 0 are at least pi / (4 sqrt(lam)) long."""
    edges = [0.0, *traj.nodes, traj.R]
    bound = math.pi / (4.0 * math.sqrt(traj.lam))
    out = []
    for i, (a, b) in enumerate(zip(edges, edges[1:])):
        w, _, _ = traj.eval(0.5 * (a + b))
        if w > 0:
            c = _le(f"positive-interval-{i}", bound, b - a, 0.0)
            out.append(Check(c.name, c.lhs, c.rhs, c.margin, c.margin >= -tol))
    return out


# ------------------------------------------------------------ mixed eigenvalues

Bc = Literal["neumann-dirichlet", "dirichlet-neumann"]


def _bessel_det(k: float, r1: float, r2: float, bc: str) -> float:
    x1, x2 = k * r1, k * r2
    if bc == "neumann-dirichlet":
        if r1 == 0.0:
            return j0(x2)
        return y1(x1) * j0(x2) - j1(x1) * y0(x2)
    return j0(x1) * y1(x2) - y0(x1) * j1(x2)


def _shoot_linear(mu: float, r1: float, r2: float, bc: str, tol: float):
    """Integrate e'' + e'/rho + mu e = 0 from r1; return (end residual, interior nodes)."""

    def rhs(t, u):
        return [u[1], -mu * u[0] - u[1] / t]

    if bc == "neumann-dirichlet":
        if r1 == 0.0:
            s0 = 1e-6 * r2
            state = [1.0 - 0.25 * mu * s0 * s0, -0.5 * mu * s0]
            start = s0
        else:
            state, start = [1.0, 0.0], r1
    else:
        state, start = [0.0, 1.0], r1
    node = lambda t, u: u[0]  # noqa: E731
    sol = solve_ivp(rhs, (start, r2), state, method="DOP853", rtol=tol, atol=tol * 1e-3, events=[node])
    e_end, de_end = sol.y[0, -1], sol.y[1, -1]
    interior = [t for t in sol.t_events[0] if start + 1e-12 < t < r2 * (1 - 1e-9)]
    return (e_end if bc == "neumann-dirichlet" else de_end), len(interior)


def mixed_eigenvalue(
    r1: float, r2: float, bc: Bc, *, method: Literal["shoot", "bessel"] = "shoot", tol: float = 1e-12
) -> float:
    """First eigenvalue of -(rho e')' = mu rho e on ]r1, r2[ with one Neumann and one Dirichlet end.

    ``bc`` names the condition at r1 first.  ``method="shoot"`` integrates the
    linear equation and bisects in mu; ``method="bessel"`` solves the
    J0/Y0 cross-product condition.
    """
    if not 0 <= r1 < r2:
        raise DomainError(f"need 0 <= r1 < r2, got ({r1}, {r2})")
    if bc not in ("neumann-dirichlet", "dirichlet-neumann"):
        raise DomainError(f"unknown boundary pairing {bc!r}")
    if bc == "dirichlet-neumann" and r1 == 0.0:
        raise DomainError("a Dirichlet condition at the origin is not admissible in the radial problem")
    L = r2 - r1
    dk = math.pi / (16.0 * L)
    if method == "bessel":
        fun = lambda k: _bessel_det(k, r1, r2, bc)  # noqa: E731
    elif method == "shoot":
        fun = lambda k: _shoot_linear(k * k, r1, r2, bc, tol)[0]  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    k_lo = 1e-9 / L
    f_lo = fun(k_lo)
    k_hi = k_lo
    for _ in range(4000):
        k_hi = k_lo + dk
        f_hi = fun(k_hi)
        if f_lo * f_hi <= 0:
            break
        k_lo, f_lo = k_hi, f_hi
    else:
        raise BracketError("no eigenvalue bracket found")
    k = brentq(fun, k_lo, k_hi, xtol=1e-15, rtol=1e-15)
    mu = k * k
    if method == "shoot":
        _, nodes = _shoot_linear(mu, r1, r2, bc, tol)
        if nodes:
            raise BracketError(f"eigenfunction has {nodes} interior nodes; not the first eigenvalue")
    return mu


def _segment_bc(case: str) -> str:
    return "neumann-dirichlet" if case in "AC" else "dirichlet-neumann"


def check_lambda_bounds(
    traj,
    tol: float = DEFAULT_TOL,
    *,
    method: Literal["shoot", "bessel"] = "bessel",
    reading: Literal["literal", "sign-aware"] = "literal",
) -> list[SegmentCheck]:
    """Per-segment bounds on lam from the mixed eigenvalue mu_bar(r1, r2).

    ``literal``: mu_bar / 2 <= lam <= mu_bar on every segment.
    ``sign-aware``: that bound on segments where w > 0, and lam <= mu_bar / 2
    where w < 0 (the factor 1 + 1/(1 + sqrt(lam) w) exceeds 2 there).
    """
    out = []
    lam = traj.lam
    for seg in traj.segments:
        if not seg.complete:
            continue
        mu = mixed_eigenvalue(seg.r1, seg.r2, _segment_bc(seg.case), method=method)
        sc = SegmentCheck(seg.case, seg.r1, seg.r2, seg.h, tol=tol)
        if reading == "literal" or seg.h > 0:
            sc.checks += [
                _le("lambda-lower", 0.5 * mu, lam, tol),
                _le("lambda-upper", lam, mu, tol),
            ]
        else:
            sc.checks += [_le("lambda-upper-negative", lam, 0.5 * mu, tol)]
        out.append(sc)
    return out


def global_lambda_bounds(
    k: int, R: float, *, length_fraction: float | None = None, n_positions: int = 41
) -> tuple[float, float]:
    """(lam_lower, lam_upper) for solutions with k nodes.

    The lower bound is mu_bar(0, R) / 2 (Neumann at 0, Dirichlet at R).  The
    upper bound is the largest mu_bar over subintervals of length
    ``length_fraction * R``; k nodes cut [0, R] into 2k monotone segments, so
    the default fraction is 1 / (2k).
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    frac = length_fraction if length_fraction is not None else 1.0 / (2 * k)
    lower = 0.5 * mixed_eigenvalue(0.0, R, "neumann-dirichlet", method="bessel")
    L = frac * R
    upper = 0.0
    for a in np.linspace(0.0, R - L, n_positions):
        upper = max(upper, mixed_eigenvalue(a, a + L, "neumann-dirichlet", method="bessel"))
        if a > 0:
            upper = max(upper, mixed_eigenvalue(a, a + L, "dirichlet-neumann", method="bessel"))
    return lower, upper


# ------------------------------------------------------------ point report


@dataclass
class PointReport:
    lam: float
    h: float
    segments: list
    intervals: list
    lambda_bounds: list

    @property
    def checks(self) -> list[Check]:
        out = [c for s in self.segments for c in s.checks]
        out += self.intervals
        out += [c for s in self.lambda_bounds for c in s.checks]
        return out

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return sorted({c.name for c in self.checks if not c.passed})

    @property
    def worst_margin(self) -> float:
        return min(c.margin for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "h": self.h,
            "pass": self.passed,
            "failures": self.failures,
            "segments": [s.as_dict() for s in self.segments],
            "positive_intervals": [c.as_dict() for c in self.intervals],
            "lambda_bounds": [s.as_dict() for s in self.lambda_bounds],
        }


def verify_point(
    traj,
    tol: float = DEFAULT_TOL,
    *,
    reading: Literal["literal", "sign-aware"] = "literal",
    n_samples: int = 50,
    method: Literal["shoot", "bessel"] = "bessel",
) -> PointReport:
    """Every inequality on every complete segment of a solution profile."""
    segs = []
    for seg in traj.segments:
        if not seg.complete:
            continue
        sc = check_sandwich(traj, seg, tol, n_samples=n_samples)
        sc.checks += check_interval_and_derivative(traj, seg, tol).checks
        segs.append(sc)
    intervals = check_positive_intervals(traj)
    lam_checks = check_lambda_bounds(traj, tol, method=method, reading=reading)
    return PointReport(traj.lam, traj.h, segs, intervals, lam_checks)
