"""Time map  Phi_{lam,h}(s) = int_0^s dxi / sqrt(F_lam(xi) - F_lam(h)).

Everything reduces to lam = 1 through F_lam(s) = F_1(sqrt(lam) s), so
``Phi_{lam,h}(s) = Phi_{1,b}(sqrt(lam) s) / sqrt(lam)`` with ``b = sqrt(lam) h``.
The quadrature runs in the gap variable ``q = 1 + xi`` where
``F_1 = ln q - (q^2 - 1)/2``:

* ``b > 0``: ``q = q_h - t^2`` removes the inverse square root at the turn;
* ``b < 0``: ``q = q_h exp(v^2)`` does the same and also keeps the integrand
  well scaled when ``q_h`` is far below float resolution (the turn may be
  given through ``log_gap = ln q_h``).

The difference ``F(xi) - F(h)`` is always formed as ``t^2 * Q(t)`` (resp.
``v^2 * Q(v)``) with ``Q`` evaluated from cancellation-free pieces.

``normalized=True`` divides by sqrt(2).  That is the scale on which the
small- and large-amplitude limits read pi/(2 sqrt(2 lam)) and pi/(2 sqrt(lam));
the raw integral has limits pi/(2 sqrt(lam)) and pi/sqrt(2 lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError

__all__ = [
    "PhiEval",
    "phi",
    "phi_at_turning",
    "phi_inverse",
    "phi_limits",
    "richardson",
    "extrapolate_limits",
]

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhiEval:
    lam: float
    h: float
    s: float
    value: float
    err_est: float


def _log1p_minus(y: float) -> float:
    """log1p(y) - y divided by y^2, stable for small |y|."""
    if abs(y) < 1e-3:
        # -1/2 + y/3 - y^2/4 + y^3/5 - ...
        total, term = 0.0, 1.0
        for n in range(2, 12):
            total += (-1) ** (n + 1) * term / n
            term *= y
        return total
    return (math.log1p(y) - y) / (y * y)


def _positive_integrand(t: float, q_h: float, c: float) -> float:
    # Q(t) = (F(q) - F(q_h)) / t^2 with q = q_h - t^2, c = (q_h^2 - 1)/q_h
    y = -t * t / q_h
    Q = c - 0.5 * t * t + t * t / (q_h * q_h) * _log1p_minus(y)
    return 2.0 / math.sqrt(Q)


def _negative_integrand(v: float, L: float) -> float:
    # q = q_h e^{v^2}, q_h = e^{-L};  F(q) - F(q_h) = v^2 - q_h^2 expm1(2 v^2) / 2
    v2 = v * v
    if v2 < 1e-300:
        ratio = math.exp(-2.0 * L)
    elif L < 300.0:
        ratio = math.exp(-2.0 * L) * math.expm1(2.0 * v2) / (2.0 * v2)
    else:
        ratio = math.exp(2.0 * v2 - 2.0 * L) / (2.0 * v2)
    Q = 1.0 - ratio
    return 2.0 * math.exp(v2 - L) / math.sqrt(Q)


def _quad(fun, a, b, args, tol):
    if a == b:
        return 0.0, 0.0
    val, err = quad(fun, a, b, args=args, epsabs=0.0, epsrel=tol, limit=200)
    return val, err


def _scaled_phi(
    b: float, t_end: float, tol: float, log_gap: float | None = None, end_log_gap: float | None = None
):
    """Phi_{1,b}(t_end) for t_end between 0 and b.  Returns (value, err)."""
    if b > 0:
        q_h = 1.0 + b
        c = b * (2.0 + b) / q_h
        lo = math.sqrt(max(b - t_end, 0.0))
        hi = math.sqrt(b)
        return _quad(_positive_integrand, lo, hi, (q_h, c), tol)
    L = -log_gap if log_gap is not None else -math.log1p(b)
    # q_s = 1 + t_end;  v_s = sqrt(ln(q_s / q_h))
    if end_log_gap is not None:
        lo = math.sqrt(max(end_log_gap + L, 0.0))
    elif t_end <= b:
        lo = 0.0
    else:
        lo = math.sqrt(max(math.log1p(t_end) + L, 0.0))
    val, err = _quad(_negative_integrand, lo, math.sqrt(L), (L,), tol)
    return -val, err


def _check(lam: float, h: float, log_gap: float | None):
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam}")
    if h == 0:
        raise DomainError("turning value h must be nonzero")
    if log_gap is None and not 1.0 + math.sqrt(lam) * h > 0:
        raise DomainError(f"h = {h} is at or beyond the barrier -1/sqrt(lam)")
    if log_gap is not None and h > 0:
        raise DomainError("log_gap only applies to negative turning values")


def phi(
    lam: float,
    h: float,
    s: float,
    tol: float = 1e-12,
    *,
    log_gap: float | None = None,
    s_log_gap: float | None = None,
    normalized: bool = False,
) -> PhiEval:
    """Evaluate the time map at s, which must lie between 0 and h.

    For negative turning values the gaps ``ln(1 + sqrt(lam) h)`` and
    ``ln(1 + sqrt(lam) s)`` may be supplied directly when they are below
    float resolution.
    """
    _check(lam, h, log_gap)
    if s * h < 0 or abs(s) > abs(h) * (1 + 1e-15):
        raise DomainError(f"s = {s} is not between 0 and h = {h}")
    r = math.sqrt(lam)
    if s == 0:
        return PhiEval(lam, h, s, 0.0, 0.0)
    b = r * h
    t_end = max(r * s, b) if h < 0 else min(r * s, b)
    val, err = _scaled_phi(b, t_end, tol, log_gap, s_log_gap if h < 0 else None)
    scale = r * (SQRT2 if normalized else 1.0)
    return PhiEval(lam, h, s, val / scale, err / scale)


def phi_at_turning(
    lam: float, h: float, tol: float = 1e-12, *, log_gap: float | None = None, normalized: bool = False
) -> float:
    """Phi_{lam,h}(h)."""
    return phi(lam, h, h, tol, log_gap=log_gap, normalized=normalized).value


def phi_inverse(
    lam: float,
    h: float,
    target: float,
    tol: float = 1e-12,
    *,
    log_gap: float | None = None,
    normalized: bool = False,
    full: float | None = None,
) -> float:
    """s between 0 and h with Phi_{lam,h}(s) = target (monotone root search)."""
    if full is None:
        full = phi_at_turning(lam, h, tol, log_gap=log_gap, normalized=normalized)
    if target * full < 0 or abs(target) > abs(full) * (1 + 1e-12):
        raise DomainError(f"target {target} outside [0, Phi(h) = {full}]")
    if target == 0:
        return 0.0
    if abs(target) >= abs(full):
        return h

    def g(s):
        return phi(lam, h, s, tol, log_gap=log_gap, normalized=normalized).value - target

    return brentq(g, 0.0, h, xtol=1e-15 * max(1.0, abs(h)), rtol=1e-15) if h > 0 else brentq(
        g, h, 0.0, xtol=1e-15 * max(1.0, abs(h)), rtol=1e-15
    )


def phi_limits(lam: float, normalized: bool = True) -> dict[str, float]:
    """Closed-form limits of Phi_{lam,h}(h)."""
    r = math.sqrt(lam)
    scale = SQRT2 if normalized else 1.0
    return {
        "h->0+": math.pi / (2.0 * r) / scale,
        "h->inf": math.pi / (SQRT2 * r) / scale,
        "h->0-": -math.pi / (2.0 * r) / scale,
        "h->-1/sqrt(lam)": 0.0,
    }


def richardson(xs, values, orders) -> float:
    """Extrapolate values(x) to x = 0 assuming values = c0 + sum c_j x^orders[j]."""
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(orders) + 1 > len(xs):
        raise ValueError("need at least len(orders) + 1 samples")
    A = np.column_stack([np.ones_like(xs)] + [xs**p for p in orders])
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    return float(coef[0])


def extrapolate_limits(lam: float = 1.0, normalized: bool = True, tol: float = 1e-13) -> dict[str, float]:
    """Numerical limits of Phi_{lam,h}(h) by Richardson extrapolation.

    The small-amplitude limits are analytic in h, the large-amplitude one is
    read at h = 1e4, and at the barrier the map behaves like a series in
    ``(-ln gap)^(-1/2)``.
    """
    r = math.sqrt(lam)
    hs = [2.0 ** (-k) * 1e-2 for k in range(5)]
    pos = [phi_at_turning(lam, h / r, tol, normalized=normalized) for h in hs]
    neg = [phi_at_turning(lam, -h / r, tol, normalized=normalized) for h in hs]
    big = phi_at_turning(lam, 1e4, tol, normalized=normalized)
    gaps = [2.0**k for k in range(6, 13)]
    bar = [
        phi_at_turning(lam, math.expm1(-L) / r, tol, log_gap=-L, normalized=normalized) for L in gaps
    ]
    ts = [L**-0.5 for L in gaps]
    return {
        "h->0+": richardson(hs, pos, [1, 2, 3, 4]),
        "h->inf": big,
        "h->0-": richardson(hs, neg, [1, 2, 3, 4]),
        "h->-1/sqrt(lam)": richardson(ts, bar, [1, 3, 5]),
    }
