"""Radial equation  w'' + w'/rho = f_lam(w),  w'(0) = 0  on a disk of radius R.

All integration is carried out in the scaled variables

    s = sqrt(lam) * rho,     y = sqrt(lam) * w = q - 1,

in which the equation loses its parameter:

    y'' + y'/s = -y (2 + y) / (1 + y).

``q = 1 + sqrt(lam) w`` is the barrier gap; solutions keep ``q > 0``.  Close
to the barrier the force is ~1/q and the turn takes place in a layer far
thinner than any representable step once the energy is large (the gap scales
like ``exp(-v**2 / 2)`` with ``v`` the impact speed).  Below ``q_c`` the
motion is therefore continued with the exact solution of ``q'' = 1/q``
(energy ``q'^2/2 - ln q`` conserved); the dropped terms ``-q`` and ``-q'/s``
contribute O(q_c) over the layer.  The gap inside the layer is carried as
``log q`` so it never underflows.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq
from scipy.special import dawsn

from .errors import BarrierHit, DomainError, IntegrationError

__all__ = [
    "f_lambda",
    "F_lambda",
    "h_lambda",
    "F_scaled",
    "Segment",
    "Flow",
    "RadialTrajectory",
    "integrate",
    "integrate_flow",
]

BARRIER_FLOOR = 1e-9
LAUNCH_FRACTION = 1e-4


def _gap(lam, w):
    return 1.0 + math.sqrt(lam) * w


def f_lambda(lam: float, w: float) -> float:
    """f_lam(w) = -lam w - lam w / (1 + sqrt(lam) w)."""
    q = _gap(lam, w)
    if not q > 0:
        raise DomainError(f"1 + sqrt(lam) w must be positive (w={w!r})")
    return -lam * w - lam * w / q


def F_lambda(lam: float, s: float) -> float:
    """Primitive of f_lam vanishing at 0: ln(1 + sqrt(lam) s) - sqrt(lam) s - lam s^2 / 2."""
    r = math.sqrt(lam)
    q = 1.0 + r * s
    if not q > 0:
        raise DomainError(f"1 + sqrt(lam) s must be positive (s={s!r})")
    return math.log1p(r * s) - r * s - 0.5 * lam * s * s


def h_lambda(lam: float, s: float) -> float:
    """Nonlinearity of the shifted problem: lam sqrt(lam) s^2 / (1 + sqrt(lam) s)."""
    r = math.sqrt(lam)
    q = 1.0 + r * s
    if not q > 0:
        raise DomainError(f"1 + sqrt(lam) s must be positive (s={s!r})")
    return lam * r * s * s / q


def F_scaled(y, log_q=None):
    """F_1 at scaled amplitude y, i.e. F_lam(w) with y = sqrt(lam) w.

    ``log_q`` may be passed when the gap ``1 + y`` is below float resolution.
    """
    if log_q is None:
        log_q = np.log1p(y)
    return log_q - 0.5 * y * (2.0 + y)


def _force(y):
    return -y * (2.0 + y) / (1.0 + y)


def _rhs(s, state):
    y, ys = state
    return [ys, _force(y) - ys / s]


# ---------------------------------------------------------------- flow pieces


@dataclass(frozen=True)
class _OdePiece:
    s0: float
    s1: float
    sol: object

    def eval(self, s):
        y, ys = self.sol(s)
        return float(y), float(ys), math.log1p(y) if y > -1 else -math.inf


@dataclass(frozen=True)
class _WallPiece:
    """Crossing of the layer q < q_c, entered at s_c with speed v."""

    s_c: float
    tau: float
    log_qc: float
    v: float

    @property
    def energy(self) -> float:
        return 0.5 * self.v * self.v

    @property
    def log_qmin(self) -> float:
        return self.log_qc - self.energy

    @property
    def s_turn(self) -> float:
        return self.s_c + 0.5 * self.tau

    @property
    def s1(self) -> float:
        return self.s_c + self.tau

    @property
    def s0(self) -> float:
        return self.s_c

    def _sigma(self, dt: float) -> float:
        # time from the turn to height q = q_min e^sigma is sqrt(2) q D(sqrt(sigma))
        if dt <= 0.0:
            return 0.0
        target = math.log(dt)
        lmin = self.log_qmin

        def g(sig):
            return math.log(math.sqrt(2.0) * dawsn(math.sqrt(sig))) + lmin + sig - target

        hi = self.energy
        if g(hi) <= 0.0:
            return hi
        lo = min(1e-300, hi)
        while g(lo) > 0.0 and lo > 1e-320:
            lo *= 1e-10
        return brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)

    def eval(self, s):
        dt = s - self.s_turn
        sig = self._sigma(abs(dt))
        log_q = self.log_qmin + sig
        speed = math.sqrt(2.0 * sig)
        return math.expm1(log_q), math.copysign(speed, dt), log_q


def _wall_time(log_qc: float, v: float) -> float:
    energy = 0.5 * v * v
    return 2.0 * math.sqrt(2.0) * math.exp(log_qc) * dawsn(math.sqrt(energy))


@dataclass
class Flow:
    """Solution of the scaled equation from s = 0 to ``s_end``."""

    a: float
    s_end: float
    pieces: list
    nodes: list  # (s, y_s)
    crits: list  # (s, y, log_q)
    n_walls: int = 0
    _starts: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._starts = [p.s0 for p in self.pieces]

    def eval(self, s: float):
        """(y, y_s, log q) at scaled radius s."""
        if s <= self.pieces[0].s0:
            return _launch_state(self.a, s)
        i = bisect.bisect_right(self._starts, s) - 1
        return self.pieces[max(i, 0)].eval(min(s, self.pieces[i].s1))


def _launch_coeffs(a: float):
    g = _force(a)
    dg = -(a * a + 2.0 * a + 2.0) / (1.0 + a) ** 2
    return g, dg * g / 64.0


def _launch_state(a: float, s: float):
    g, d = _launch_coeffs(a)
    y = a + 0.25 * g * s * s + d * s**4
    ys = 0.5 * g * s + 4.0 * d * s**3
    return y, ys, math.log1p(y)


def _launch_radius(a: float, s_scale: float) -> float:
    q0 = 1.0 + a
    g = abs(_force(a))
    s0 = LAUNCH_FRACTION * s_scale
    if g > 0:
        s0 = min(s0, 1e-3 * math.sqrt(q0 / g) if q0 < 1 else s0)
    return s0


def integrate_flow(
    a: float,
    s_end: float | None = None,
    n_crit: int | None = None,
    *,
    tol: float = 1e-10,
    barrier_floor: float = BARRIER_FLOOR,
    bounce: bool = True,
    s_scale: float | None = None,
    s_cap: float = 400.0,
) -> Flow:
    """Integrate the scaled radial equation from y(0) = a.

    Either ``s_end`` (fixed end) or ``n_crit`` (stop at the n-th critical
    point after the origin) must be given.
    """
    if a == 0.0:
        raise DomainError("h = 0 is the trivial solution")
    if not 1.0 + a > 0:
        raise DomainError(f"initial gap 1 + sqrt(lam) h = {1 + a!r} must be positive")
    if 1.0 + a < barrier_floor:
        raise BarrierHit(0.0, 1.0 + a)
    if (s_end is None) == (n_crit is None):
        raise ValueError("give exactly one of s_end / n_crit")
    if s_scale is None:
        s_scale = s_end if s_end is not None else math.pi * (n_crit + 0.25)
    rtol = tol
    atol = max(1e-3 * tol * min(1.0, abs(a)), 1e-300)
    log_qc = math.log(barrier_floor)
    y_c = barrier_floor - 1.0

    s = _launch_radius(a, s_scale)
    y0, ys0, _ = _launch_state(a, s)
    state = [y0, ys0]
    pieces: list = []
    nodes: list = []
    crits: list = []
    n_walls = 0
    remaining = n_crit
    stop = s_end if s_end is not None else s_cap

    def ev_node(t, u):
        return u[0]

    def ev_crit(t, u):
        return u[1]

    def ev_wall(t, u):
        return u[0] - y_c

    ev_wall.terminal = True
    ev_wall.direction = -1

    while True:
        ev_crit.terminal = remaining if remaining is not None else False
        if s >= stop:
            break
        sol = solve_ivp(
            _rhs,
            (s, stop),
            state,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=True,
            events=[ev_node, ev_crit, ev_wall],
        )
        if sol.status == -1:
            raise IntegrationError(sol.message)
        t_end = float(sol.t[-1])
        pieces.append(_OdePiece(s, t_end, sol.sol))
        for t, u in zip(sol.t_events[0], sol.y_events[0]):
            nodes.append((float(t), float(u[1])))
        for t, u in zip(sol.t_events[1], sol.y_events[1]):
            crits.append((float(t), float(u[0]), math.log1p(u[0])))
        if remaining is not None:
            remaining -= len(sol.t_events[1])
            if remaining <= 0:
                s_end = t_end
                break
        if sol.status == 0:
            if n_crit is not None:
                raise IntegrationError(f"critical point {n_crit} not reached before s={stop}")
            break
        if len(sol.t_events[2]) == 0:
            break
        # wall event
        s_c = float(sol.t_events[2][0])
        v = -float(sol.y_events[2][0][1])
        if not bounce:
            raise BarrierHit(s_c, barrier_floor)
        n_walls += 1
        wall = _WallPiece(s_c, _wall_time(log_qc, v), log_qc, v)
        pieces.append(wall)
        crits.append((wall.s_turn, math.expm1(wall.log_qmin), wall.log_qmin))
        if remaining is not None:
            remaining -= 1
            if remaining <= 0:
                s_end = wall.s_turn
                break
        if s_end is not None and s_end <= wall.s1:
            break
        s = wall.s1
        state = [y_c, v]

    if s_end is None:
        s_end = stop
    return Flow(a=a, s_end=float(s_end), pieces=pieces, nodes=nodes, crits=crits, n_walls=n_walls)


# ---------------------------------------------------------------- trajectories


@dataclass(frozen=True)
class Segment:
    """Monotone piece between a critical point and a node.

    ``rho_bar`` is the critical end (turning value ``h``), ``rho0`` the node
    end.  Case A: positive, decreasing from the turn; B: negative, decreasing
    into the turn; C: negative, increasing from the turn; D: positive,
    increasing into the turn.
    """

    r1: float
    r2: float
    case: str
    rho_bar: float
    rho0: float
    h: float
    log_gap_h: float
    complete: bool = True


@dataclass
class RadialTrajectory:
    lam: float
    h: float
    R: float
    grid: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    log_gap: np.ndarray
    nodes: list
    crits: list  # (rho, w, log_gap)
    segments: list
    residual: float
    n_walls: int
    flow: Flow = field(repr=False)

    @property
    def sqrt_lam(self) -> float:
        return math.sqrt(self.lam)

    @property
    def log_barrier_min(self) -> float:
        vals = [float(np.min(self.log_gap))] + [c[2] for c in self.crits]
        return min(vals)

    @property
    def barrier_min(self) -> float:
        return math.exp(self.log_barrier_min)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def eval(self, rho: float):
        """(w, w', log gap) at radius rho."""
        r = self.sqrt_lam
        y, ys, lq = self.flow.eval(rho * r)
        return y / r, ys, lq

    def F_at(self, rho: float) -> float:
        y, _, lq = self.flow.eval(rho * self.sqrt_lam)
        return float(F_scaled(y, lq))

    def energy_residuals(self) -> list[float]:
        """Residual of (rho^2 p)' = 2 rho^2 (F_lam(w))' integrated over each segment.

        Uses the integrated-by-parts form
        ``rho^2 p |_{r1}^{r2} = 2 rho^2 F |_{r1}^{r2} - int 4 sigma F dsigma``
        which stays finite through the barrier layer.
        """
        out = []
        for seg in self.segments:
            out.append(self._energy_residual(seg.r1, seg.r2))
        return out

    def _energy_residual(self, r1: float, r2: float) -> float:
        _, p1, _ = self.eval(r1)
        _, p2, _ = self.eval(r2)
        F1, F2 = self.F_at(r1), self.F_at(r2)
        pts = [seg_s / self.sqrt_lam for seg_s in _wall_points(self.flow) if r1 < seg_s / self.sqrt_lam < r2]
        integral, _ = quad(
            lambda t: 4.0 * t * self.F_at(t), r1, r2, epsabs=1e-13, epsrel=1e-12, limit=200,
            points=pts or None,
        )
        lhs = r2 * r2 * p2 * p2 - r1 * r1 * p1 * p1
        rhs = 2.0 * r2 * r2 * F2 - 2.0 * r1 * r1 * F1 - integral
        return lhs - rhs


def _wall_points(flow: Flow):
    for p in flow.pieces:
        if isinstance(p, _WallPiece):
            yield p.s_turn


def _classify(events, r_end, r, flow_crit_at_end):
    """Build segments from the ordered event list [(rho, kind, w, log_gap)]."""
    segs = []
    for (ra, ka, wa, la), (rb, kb, wb, lb) in zip(events, events[1:]):
        if ka == "crit":
            case = "A" if wa > 0 else "C"
            segs.append(Segment(ra, rb, case, ra, rb, wa, la, complete=(kb == "node")))
        else:
            case = "D" if wb > 0 else "B"
            segs.append(Segment(ra, rb, case, rb, ra, wb, lb, complete=(kb == "crit")))
    return segs


def _build_trajectory(flow: Flow, lam: float, R: float, n_grid: int) -> RadialTrajectory:
    r = math.sqrt(lam)
    grid = np.linspace(0.0, R, n_grid)
    vals = np.array([flow.eval(min(t * r, flow.s_end)) for t in grid])
    w = vals[:, 0] / r
    dw = vals[:, 1]
    log_gap = vals[:, 2]
    nodes = [s / r for s, _ in flow.nodes if 0.0 < s / r < R * (1 - 1e-14)]
    crits = [(0.0, flow.a / r, math.log1p(flow.a))]
    crits += [(s / r, y / r, lq) for s, y, lq in flow.crits if s / r <= R * (1 + 1e-14)]
    events = [(c[0], "crit", c[1], c[2]) for c in crits]
    events += [(n, "node", 0.0, 0.0) for n in nodes]
    events.sort(key=lambda e: e[0])
    y_end, ys_end, lq_end = flow.eval(flow.s_end)
    if events[-1][0] < R * (1 - 1e-12):
        events.append((R, "end", y_end / r, lq_end))
    segments = _classify(events, R, r, None)
    return RadialTrajectory(
        lam=lam,
        h=flow.a / r,
        R=R,
        grid=grid,
        w=w,
        dw=dw,
        log_gap=log_gap,
        nodes=nodes,
        crits=crits,
        segments=segments,
        residual=ys_end,
        n_walls=flow.n_walls,
        flow=flow,
    )


def integrate(
    lam: float,
    h: float,
    R: float,
    tol: float = 1e-10,
    *,
    barrier_floor: float = BARRIER_FLOOR,
    bounce: bool = True,
    n_grid: int = 401,
) -> RadialTrajectory:
    """Integrate from w(0) = h, w'(0) = 0 up to rho = R.

    With ``bounce=False`` the integration raises :class:`BarrierHit` as soon
    as the gap drops below ``barrier_floor``; otherwise the barrier layer is
    crossed analytically.
    """
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam}")
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    r = math.sqrt(lam)
    try:
        flow = integrate_flow(
            r * h, s_end=r * R, tol=tol, barrier_floor=barrier_floor, bounce=bounce
        )
    except BarrierHit as exc:
        raise BarrierHit(exc.rho / r, exc.gap) from None
    return _build_trajectory(flow, lam, R, n_grid)


def integrate_to_crit(
    a: float, k: int, R: float, tol: float = 1e-10, *, barrier_floor: float = BARRIER_FLOOR, n_grid: int = 401
) -> RadialTrajectory:
    """Neumann solution with k nodes at scaled amplitude a = sqrt(lam) h.

    The k-th critical point s_k of the scaled flow is placed at rho = R,
    which fixes lam = (s_k / R)^2.
    """
    flow = integrate_flow(a, n_crit=k, tol=tol, barrier_floor=barrier_floor)
    lam = (flow.s_end / R) ** 2
    return _build_trajectory(flow, lam, R, n_grid)
