"""Finite-dimensional two-branch bifurcation for potential operators.

Coordinates are Euclidean.  The problem data are

* ``K``: the quadratic form <Au, u>;
* ``B``: the weak inner product <u, v>_L (positive definite);
* ``H``, ``H1``: scalar fields with Euclidean gradient and Hessian.

The strong inner product is taken as ``G = K + B`` when K is positive
semidefinite, which makes <Au, u> >= ||u||^2 - ||u||_L^2 an identity
(nu = 1, M = 1).  The weak form of  A u + grad H(u) = lam (u + grad_L H1(u))
is then the Euclidean system  K u + dH(u) = lam (B u + dH1(u)).

Critical points of f_rho on S_{rho,delta} = {g_rho = 1, ||P2 u||_L >= delta}
are located by constrained minimization over X2 + X3 (first point) and by a
max-min along a path in X2 from that point to its X2-antipode (second point),
then polished with Newton's method on the multiplier system.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import DomainError, RegimeError, SearchError
from .specfun import bessel_j0, j1_zero

__all__ = [
    "PowerSum",
    "Cutoff",
    "RadialGalerkinField",
    "SandboxModel",
    "CriticalPair",
    "default_model",
    "galerkin_model",
    "load_model",
    "scaled_functionals",
    "sphere_project",
    "find_critical_pairs",
    "boundary_exclusion_check",
    "level_values",
    "level_values_closed_form",
    "regime_report",
    "hypothesis_report",
    "sweep",
    "radial_crosscheck",
    "boundary_point",
    "collar_multipliers",
]


# ---------------------------------------------------------------- fields


class PowerSum:
    """sum_p c_p sum_i u_i^p."""

    def __init__(self, coeffs: dict[int, float]):
        self.coeffs = {int(p): float(c) for p, c in coeffs.items() if c != 0.0}
        if any(p < 3 for p in self.coeffs):
            raise DomainError("powers below 3 violate the vanishing-gradient hypothesis")

    def value(self, u):
        return float(sum(c * np.sum(u**p) for p, c in self.coeffs.items()))

    def grad(self, u):
        out = np.zeros_like(u, dtype=float)
        for p, c in self.coeffs.items():
            out += p * c * u ** (p - 1)
        return out

    def hess(self, u):
        d = np.zeros_like(u, dtype=float)
        for p, c in self.coeffs.items():
            d += p * (p - 1) * c * u ** (p - 2)
        return np.diag(d)

    def describe(self):
        return {"power_sum": {str(p): c for p, c in sorted(self.coeffs.items())}}


class _Zero:
    def value(self, u):
        return 0.0

    def grad(self, u):
        return np.zeros_like(u, dtype=float)

    def hess(self, u):
        n = len(u)
        return np.zeros((n, n))

    def describe(self):
        return {"zero": True}


ZERO = _Zero()


def _smoothstep(x):
    """Quintic step: 0 for x <= 0, 1 for x >= 1, C^2; returns (S, S', S'')."""
    x = min(max(x, 0.0), 1.0)
    s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    ds = 30.0 * x * x * (1.0 - x) ** 2
    dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    return s, ds, dds


class Cutoff:
    """eta(||u||_G) F(u), eta = 1 on [0, r] and 0 beyond 3r."""

    def __init__(self, inner: object, radius: float, gram: np.ndarray):
        self.inner = inner
        self.radius = float(radius)
        self.gram = np.asarray(gram, dtype=float)

    def _eta(self, u):
        Gu = self.gram @ u
        r = math.sqrt(max(float(u @ Gu), 0.0))
        x = (3.0 * self.radius - r) / (2.0 * self.radius)
        s, ds, dds = _smoothstep(x)
        k = -1.0 / (2.0 * self.radius)
        return r, Gu, s, ds * k, dds * k * k

    def value(self, u):
        _, _, eta, _, _ = self._eta(u)
        return eta * self.inner.value(u) if eta else 0.0

    def grad(self, u):
        r, Gu, eta, d1, _ = self._eta(u)
        g = eta * self.inner.grad(u)
        if d1 and r > 0:
            g = g + d1 * self.inner.value(u) * Gu / r
        return g

    def hess(self, u):
        r, Gu, eta, d1, d2 = self._eta(u)
        H = eta * self.inner.hess(u)
        if (d1 or d2) and r > 0:
            F = self.inner.value(u)
            dF = self.inner.grad(u)
            dr = Gu / r
            d2r = self.gram / r - np.outer(Gu, Gu) / r**3
            H = H + d2 * F * np.outer(dr, dr) + d1 * F * d2r + d1 * (np.outer(dr, dF) + np.outer(dF, dr))
        return H

    def describe(self):
        return {"cutoff": self.radius, "inner": self.inner.describe()}


def _bump(x):
    """C-infinity step from 0 (x <= 0) to 1 (x >= 1) with derivative."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        da = np.where(x > 0, a / np.where(x > 0, x * x, 1.0), 0.0)
        db = np.where(x < 1, -b / np.where(x < 1, (1.0 - x) ** 2, 1.0), 0.0)
    s = a / (a + b)
    ds = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return s, ds


class _TruncatedH1:
    """h1(s) = s^2/(1+s) cut off smoothly: equal to h1 for |s| <= s0, zero beyond 2 s0."""

    def __init__(self, s0: float = 0.45, n_nodes: int = 40):
        if not 0 < s0 < 0.5:
            raise DomainError("cutoff level must lie in (0, 1/2)")
        self.s0 = s0
        self._x, self._w = leggauss(n_nodes)
        self._tail = {1: self._primitive_tail(np.array([2 * s0]))[0], -1: self._primitive_tail(np.array([-2 * s0]))[0]}

    def eta(self, s):
        a = np.abs(s)
        x = (2.0 * self.s0 - a) / self.s0
        e, de = _bump(x)
        return e, -np.sign(s) * de / self.s0

    def h(self, s):
        if np.max(np.abs(s)) <= self.s0:
            return s * s / (1.0 + s)
        e, _ = self.eta(s)
        safe = np.where(np.abs(s) < 2 * self.s0, s, 0.0)
        return e * safe * safe / (1.0 + safe)

    def dh(self, s):
        if np.max(np.abs(s)) <= self.s0:
            return s * (2.0 + s) / (1.0 + s) ** 2
        e, de = self.eta(s)
        safe = np.where(np.abs(s) < 2 * self.s0, s, 0.0)
        h1 = safe * safe / (1.0 + safe)
        dh1 = safe * (2.0 + safe) / (1.0 + safe) ** 2
        return e * dh1 + de * h1

    _SERIES = np.array([(-1) ** (n + 1) / n for n in range(19, 2, -1)])

    @classmethod
    def _H1(cls, s):
        # log1p(s) - s + s^2/2, by its Taylor series where that cancels badly
        out = np.log1p(s) - s + 0.5 * s * s
        small = np.abs(s) < 0.1
        if small.any():
            t = s[small]
            out[small] = np.polyval(np.append(cls._SERIES, [0.0, 0.0, 0.0]), t)
        return out

    def _primitive_tail(self, s):
        # H1(+-s0) + int_{+-s0}^{s} eta h1
        start = np.sign(s) * self.s0
        mid = 0.5 * (s + start)
        half = 0.5 * (s - start)
        pts = mid[:, None] + half[:, None] * self._x[None, :]
        vals = self.h(pts.ravel()).reshape(pts.shape)
        return self._H1(start) + half * (vals @ self._w)

    def H(self, s):
        s = np.asarray(s, dtype=float)
        if np.max(np.abs(s), initial=0.0) <= self.s0:
            return self._H1(s)
        out = np.empty_like(s)
        a = np.abs(s)
        inner = a <= self.s0
        out[inner] = self._H1(s[inner])
        mid = (a > self.s0) & (a < 2 * self.s0)
        if mid.any():
            out[mid] = self._primitive_tail(s[mid])
        far = a >= 2 * self.s0
        out[far & (s > 0)] = self._tail[1]
        out[far & (s < 0)] = self._tail[-1]
        return out


class RadialGalerkinField:
    """-1/2 int_0^R rho H1~(v(rho)) drho with v = sum_j c_j phi_j(rho)."""

    def __init__(self, R: float, roots, n_quad: int = 200, s0: float = 0.45):
        x, w = leggauss(n_quad)
        self.rho = 0.5 * R * (x + 1.0)
        self.weight = 0.5 * R * w * self.rho
        cols = []
        for y in roots:
            norm = R / math.sqrt(2.0) if y == 0.0 else R * abs(bessel_j0(y)) / math.sqrt(2.0)
            cols.append(np.array([bessel_j0(y * r / R) for r in self.rho]) / norm)
        self.P = np.column_stack(cols)
        self.h1 = _TruncatedH1(s0)

    def profile(self, c):
        return self.P @ c

    def value(self, c):
        return float(-0.5 * self.weight @ self.h1.H(self.P @ c))

    def grad(self, c):
        return -0.5 * self.P.T @ (self.weight * self.h1.h(self.P @ c))

    def hess(self, c):
        d = self.weight * self.h1.dh(self.P @ c)
        return -0.5 * (self.P.T * d) @ self.P

    def describe(self):
        return {"radial_galerkin": {"modes": self.P.shape[1], "quad_nodes": len(self.rho), "s0": self.h1.s0}}


# ---------------------------------------------------------------- model


@dataclass
class SandboxModel:
    name: str
    K: np.ndarray
    B: np.ndarray
    H: object
    H1: object
    lam_hat: float
    delta: float
    eps0: float
    spectrum: np.ndarray = field(init=False)
    vectors: np.ndarray = field(init=False)  # B-orthonormal columns
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.K.shape != self.B.shape or self.K.shape[0] != self.K.shape[1]:
            raise DomainError("K and B must be square of equal size")
        if not np.allclose(self.K, self.K.T) or not np.allclose(self.B, self.B.T):
            raise DomainError("K and B must be symmetric")
        vals, vecs = eigh(self.K, self.B)
        self.spectrum, self.vectors = vals, vecs
        scale = max(1.0, abs(self.lam_hat))
        self._idx2 = np.where(np.abs(vals - self.lam_hat) <= 1e-9 * scale)[0]
        if len(self._idx2) == 0:
            raise DomainError(f"{self.lam_hat} is not an eigenvalue of the pencil (K, B)")
        self._idx1 = np.where(vals < self.lam_hat - 1e-9 * scale)[0]
        self._idx3 = np.where(vals > self.lam_hat + 1e-9 * scale)[0]
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def gram(self) -> np.ndarray:
        return self.K + self.B

    @property
    def lam_below(self) -> float:
        return float(self.spectrum[self._idx1[-1]]) if len(self._idx1) else -math.inf

    @property
    def lam_above(self) -> float:
        return float(self.spectrum[self._idx3[0]]) if len(self._idx3) else math.inf

    def basis(self, which: str) -> np.ndarray:
        idx = {"1": self._idx1, "2": self._idx2, "3": self._idx3}
        cols = np.concatenate([idx[c] for c in which]) if which else np.array([], dtype=int)
        return self.vectors[:, np.sort(cols)]

    def coords(self, u, which: str = "2") -> np.ndarray:
        return self.basis(which).T @ (self.B @ u)

    def project(self, u, which: str = "2") -> np.ndarray:
        E = self.basis(which)
        return E @ (E.T @ (self.B @ u))

    def norm_L(self, u) -> float:
        return math.sqrt(float(u @ self.B @ u))

    def regime(self) -> dict:
        gap = min(self.lam_hat - self.lam_below, self.lam_above - self.lam_hat)
        return {
            "five_eps0_below_gap": bool(5 * self.eps0 < gap),
            "delta_sq_gap_le_eps0": bool(self.delta**2 * (self.lam_hat - self.lam_below) <= self.eps0),
            "delta_le_one_eighth": bool(self.delta <= 0.125),
        }

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "lam_hat": self.lam_hat,
            "delta": self.delta,
            "eps0": self.eps0,
            "spectrum": [float(x) for x in self.spectrum],
            "H": self.H.describe(),
            "H1": self.H1.describe(),
            **self.meta,
        }


def default_model(delta: float = 0.1, eps0: float = 0.19) -> SandboxModel:
    """n = 5, A = diag(1, 2, 2, 5, 9), double eigenvalue 2, quartic H and sextic H1."""
    K = np.diag([1.0, 2.0, 2.0, 5.0, 9.0])
    return SandboxModel(
        name="default",
        K=K,
        B=np.eye(5),
        H=PowerSum({4: 0.25}),
        H1=PowerSum({6: -1.0 / 6.0}),
        lam_hat=2.0,
        delta=delta,
        eps0=eps0,
    )


def galerkin_model(
    R: float = 4.0, n_modes: int = 5, delta: float = 0.1, eps0: float = 0.18, n_quad: int = 200, s0: float = 0.45
) -> SandboxModel:
    """Fourier-Bessel truncation of the radial Neumann problem near its first eigenvalue.

    Modes J0(y_j rho / R), j = 0..n_modes-1 (j = 0 the constant), normalized
    in the weighted inner product int rho u v drho.  Then A = diag(mu_j),
    H = 0, H1(v) = -1/2 int rho H1~(v) with H1~' the cut-off h1(s) = s^2/(1+s),
    and lam_hat = mu_1.  A critical pair (v, mu) gives a radial solution with
    lam = mu / 2 and sqrt(lam) w = v.

    The default radius 4 keeps sup |rho v| below the cutoff level over the
    whole default sweep (so the cutoff never engages) and puts rho = 0.2
    inside the regime where the level ordering holds.
    """
    roots = [0.0] + [j1_zero(j) for j in range(1, n_modes)]
    mu = np.array([(y / R) ** 2 for y in roots])
    field_ = RadialGalerkinField(R, roots, n_quad, s0)
    return SandboxModel(
        name="galerkin",
        K=np.diag(mu),
        B=np.eye(n_modes),
        H=ZERO,
        H1=field_,
        lam_hat=float(mu[1]),
        delta=delta,
        eps0=eps0,
        meta={"R": R, "roots": roots},
    )


def load_model(path: str | Path) -> SandboxModel:
    """Model from JSON: {"n", "A", ["B"], "H", "H1", "lam_hat", "delta", "eps0"}.

    ``H`` and ``H1`` map a power p (>= 3) to the coefficient of sum_i u_i^p.
    """
    data = json.loads(Path(path).read_text())
    allowed = {"name", "n", "A", "B", "H", "H1", "lam_hat", "delta", "eps0"}
    unknown = set(data) - allowed
    if unknown:
        raise DomainError(f"unknown model keys: {sorted(unknown)}")
    n = int(data["n"])
    K = np.asarray(data["A"], dtype=float)
    B = np.asarray(data.get("B", np.eye(n)), dtype=float)
    if K.shape != (n, n):
        raise DomainError("A must be n x n")
    return SandboxModel(
        name=data.get("name", Path(path).stem),
        K=K,
        B=B,
        H=PowerSum(data.get("H", {})) if data.get("H") else ZERO,
        H1=PowerSum(data.get("H1", {})) if data.get("H1") else ZERO,
        lam_hat=float(data["lam_hat"]),
        delta=float(data["delta"]),
        eps0=float(data["eps0"]),
    )


# ---------------------------------------------------------------- functionals


@dataclass(frozen=True)
class Functionals:
    f: float
    g: float
    df: np.ndarray
    dg: np.ndarray


def _scaled(field_, rho, u):
    if rho == 0.0:
        return 0.0, np.zeros_like(u), np.zeros((len(u), len(u)))
    x = rho * u
    return field_.value(x) / rho / rho, field_.grad(x) / rho, field_.hess(x)


def scaled_functionals(model: SandboxModel, rho: float, u) -> Functionals:
    """f_rho(u) = 1/2 <Au,u> + H(rho u)/rho^2 and g_rho(u) = 1/2 ||u||_L^2 + H1(rho u)/rho^2."""
    if not 0 <= rho <= 1:
        raise DomainError("rho must lie in [0, 1]")
    u = np.asarray(u, dtype=float)
    h, dh, _ = _scaled(model.H, rho, u)
    h1, dh1, _ = _scaled(model.H1, rho, u)
    Ku, Bu = model.K @ u, model.B @ u
    return Functionals(0.5 * u @ Ku + h, 0.5 * u @ Bu + h1, Ku + dh, Bu + dh1)


def _hessians(model, rho, u):
    _, _, hh = _scaled(model.H, rho, u)
    _, _, hh1 = _scaled(model.H1, rho, u)
    return model.K + hh, model.B + hh1


def _g(model, rho, u):
    return scaled_functionals(model, rho, u).g


def sphere_project(model: SandboxModel, rho: float, u, *, check_slope: bool = False) -> tuple[float, np.ndarray]:
    """(t_bar, Gamma(u, t_bar)): radial retraction of the collar onto S_{rho,delta}."""
    u = np.asarray(u, dtype=float)
    nL = model.norm_L(u)
    p2 = model.project(u)
    n2 = model.norm_L(p2)
    if not (1.0 - 1e-12 < nL < 2.0 + 1e-12) or n2 < model.delta * (1 - 1e-12):
        raise DomainError("u is outside the collar C_delta")
    c = model.delta * p2 / n2

    def phi(t):
        return _g(model, rho, c + t * (u - c)) - 1.0

    lo, hi = phi(0.5), phi(2.0)
    if not (lo < 0 < hi):
        raise RegimeError(f"phi(1/2) - 1 = {lo:.3g}, phi(2) - 1 = {hi:.3g}: rho = {rho} too large")
    if check_slope:
        ts = np.linspace(0.5, 2.0, 31)
        slope = min(_dphi_dt(model, rho, u, c, t) for t in ts)
        if slope < 0.125:
            raise RegimeError(f"d phi / dt = {slope:.3g} < 1/8")
    t = brentq(phi, 0.5, 2.0, xtol=1e-15, rtol=1e-15)
    return t, c + t * (u - c)


def _dphi_dt(model, rho, u, c, t):
    fun = scaled_functionals(model, rho, c + t * (u - c))
    return float(fun.dg @ (u - c))


# ---------------------------------------------------------------- critical pairs


@dataclass
class CriticalPair:
    u: np.ndarray
    lam: float
    mu: float
    f_val: float
    rho: float
    residual: float
    g_error: float
    kind: str
    C1: float = 0.0
    C2: float = 0.0
    p2_norm: float = 0.0
    unscaled_residual: float = 0.0

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rho": self.rho,
            "u": [float(x) for x in self.u],
            "lambda": self.lam,
            "mu": self.mu,
            "f": self.f_val,
            "kkt_residual": self.residual,
            "g_error": self.g_error,
            "C1": self.C1,
            "C2": self.C2,
            "multiplier_identity_error": self.f_val - (self.C1 + self.lam * (1.0 + self.C2)),
            "P2_norm_L": self.p2_norm,
            "unscaled_residual": self.unscaled_residual,
        }


def _kkt_residual(model, rho, u, lam):
    fun = scaled_functionals(model, rho, u)
    r = fun.df - lam * fun.dg
    return np.concatenate([r, [fun.g - 1.0]])


def _newton_kkt(model, rho, u, lam, *, tol=1e-13, max_iter=60):
    best = (math.inf, u, lam)
    for _ in range(max_iter):
        F = _kkt_residual(model, rho, u, lam)
        err = float(np.max(np.abs(F)))
        if err < best[0]:
            best = (err, u.copy(), lam)
        if err < tol:
            break
        fun = scaled_functionals(model, rho, u)
        Hf, Hg = _hessians(model, rho, u)
        n = len(u)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = Hf - lam * Hg
        J[:n, n] = -fun.dg
        J[n, :n] = fun.dg
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        u = u + step[:n]
        lam = lam + step[n]
    return best


def _multiplier(model, rho, u):
    fun = scaled_functionals(model, rho, u)
    return float(fun.df @ fun.dg / (fun.dg @ fun.dg))


def _finish(model, rho, u, lam, kind) -> CriticalPair:
    err, u, lam = _newton_kkt(model, rho, u, lam)
    fun = scaled_functionals(model, rho, u)
    h, dh, _ = _scaled(model.H, rho, u)
    h1, dh1, _ = _scaled(model.H1, rho, u)
    C1 = h - 0.5 * float(dh @ u)
    C2 = 0.5 * float(dh1 @ u) - h1
    residual = float(np.max(np.abs(fun.df - lam * fun.dg)))
    if rho > 0:
        x = rho * u
        lhs = model.K @ x + model.H.grad(x)
        rhs = lam * (model.B @ x + model.H1.grad(x))
        unscaled = float(np.max(np.abs(lhs - rhs)))
    else:
        unscaled = residual
    return CriticalPair(
        u=u,
        lam=float(lam),
        mu=0.0,
        f_val=float(fun.f),
        rho=rho,
        residual=residual,
        g_error=abs(fun.g - 1.0),
        kind=kind,
        C1=float(C1),
        C2=float(C2),
        p2_norm=model.norm_L(model.project(u)),
        unscaled_residual=unscaled,
    )


def _min_on_ray(model, rho, d2, E3, z0):
    """min f_rho over u = r d2 + E3 z on {g_rho = 1}; r solved from the constraint."""

    def solve_r(z):
        base = E3 @ z if E3.shape[1] else np.zeros(model.n)

        def gr(r):
            return _g(model, rho, r * d2 + base) - 1.0

        hi = 2.0
        while gr(hi) < 0 and hi < 64:
            hi *= 2
        if gr(1e-8) >= 0 or gr(hi) < 0:
            return None
        return brentq(gr, 1e-8, hi, xtol=1e-15, rtol=1e-15), base

    def obj(z):
        sol = solve_r(z)
        if sol is None:
            return 1e6 + float(z @ z)
        r, base = sol
        return scaled_functionals(model, rho, r * d2 + base).f

    if E3.shape[1]:
        res = minimize(obj, z0, method="BFGS", options={"gtol": 1e-11, "maxiter": 500})
        z = res.x
    else:
        z = np.zeros(0)
    r, base = solve_r(z)
    u = r * d2 + base
    return scaled_functionals(model, rho, u).f, u, z


def _direction(E2, theta_vec):
    d = E2 @ theta_vec
    return d / math.sqrt(float(theta_vec @ theta_vec))


def find_critical_pairs(model: SandboxModel, rho: float, *, n_starts: int = 16) -> tuple[CriticalPair, CriticalPair]:
    """Two distinct constrained critical points of f_rho on S_{rho,delta}.

    The reduced function m(d) = min{f_rho(u): u in (X2 + X3) cap S_rho,
    P2 u along d} is minimized over X2 directions d (first point); the second
    point is the lowest maximum of m along the half great circles joining the
    first direction to its antipode (for dim X2 = 1, the minimizer on the
    opposite ray).  Both are polished with Newton's method on
    grad f = lam grad g, g = 1.
    """
    E2 = model.basis("2")
    E3 = model.basis("3")
    m2 = E2.shape[1]
    B = model.B
    # X2 directions are B-orthonormal coordinates theta
    z_start = np.zeros(E3.shape[1])

    def m_of(theta):
        d = E2 @ theta
        d = d / model.norm_L(d)
        return _min_on_ray(model, rho, d, E3, z_start)

    if m2 == 1:
        cands = [m_of(np.array([1.0])), m_of(np.array([-1.0]))]
        cands.sort(key=lambda c: c[0])
        first = _finish(model, rho, cands[0][1], _multiplier(model, rho, cands[0][1]), "minimum")
        second = _finish(model, rho, cands[1][1], _multiplier(model, rho, cands[1][1]), "opposite")
    else:
        # minimize over directions: coarse sampling then local refinement
        rng = np.random.default_rng(12345)
        starts = rng.standard_normal((n_starts, m2))
        starts = np.vstack([np.eye(m2), starts])
        best = None
        for th in starts:
            val = m_of(th)[0]
            if best is None or val < best[0]:
                best = (val, th)

        def obj(th):
            if np.allclose(th, 0):
                return 1e6
            return m_of(th)[0]

        res = minimize(obj, best[1], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        th1 = res.x / np.linalg.norm(res.x)
        u1 = m_of(th1)[1]
        first = _finish(model, rho, u1, _multiplier(model, rho, u1), "minimum")
        th1 = model.coords(first.u)
        th1 = th1 / np.linalg.norm(th1)
        # half circles from th1 to -th1 through each orthogonal direction
        perp = np.linalg.svd(np.eye(m2) - np.outer(th1, th1))[0][:, : m2 - 1]
        best_path = None
        for j in range(m2 - 1):
            for sgn in (1.0, -1.0):
                q = sgn * perp[:, j]

                def neg(t, q=q):
                    return -m_of(math.cos(t) * th1 + math.sin(t) * q)[0]

                grid = np.linspace(0.0, math.pi, 17)
                vals = [neg(t) for t in grid]
                i = int(np.argmin(vals))
                lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
                opt = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
                peak = -opt.fun
                if best_path is None or peak < best_path[0]:
                    best_path = (peak, math.cos(opt.x) * th1 + math.sin(opt.x) * q)
        u2 = m_of(best_path[1])[1]
        second = _finish(model, rho, u2, _multiplier(model, rho, u2), "mountain-pass")
    del B
    if np.linalg.norm(first.u - second.u) <= 1e-6:
        raise SearchError("the two critical points coincide", max(first.residual, second.residual))
    for p in (first, second):
        if p.residual > 1e-8 or p.g_error > 1e-10:
            raise SearchError(f"{p.kind} point did not converge", p.residual)
    return first, second


def boundary_exclusion_check(model: SandboxModel, pair: CriticalPair, *, margin: float = 1e-9) -> bool:
    """True iff the point is off the collar boundary and carries no collar multiplier."""
    return bool(model.norm_L(model.project(pair.u)) > model.delta + margin and pair.mu == 0.0)


def collar_multipliers(model: SandboxModel, rho: float, u) -> tuple[float, float, float]:
    """Least-squares (lam, mu) for grad f = lam grad g + mu B P2 u and the residual.

    Off the collar boundary the constraint is inactive and mu is 0.
    """
    fun = scaled_functionals(model, rho, u)
    p2 = model.project(u)
    if model.norm_L(p2) > model.delta * (1 + 1e-12):
        lam = float(fun.dg @ fun.df / (fun.dg @ fun.dg))
        return lam, 0.0, float(np.max(np.abs(lam * fun.dg - fun.df)))
    M = np.column_stack([fun.dg, model.B @ p2])
    coef, *_ = np.linalg.lstsq(M, fun.df, rcond=None)
    res = float(np.max(np.abs(M @ coef - fun.df)))
    return float(coef[0]), float(coef[1]), res


def boundary_point(model: SandboxModel, rho: float = 0.0) -> CriticalPair:
    """A lower critical point on Sigma_{rho,delta} inside X1 + X2 (negative control).

    At rho = 0 the point delta e_2 + sqrt(2 - delta^2) e_1 with e_1 the top
    eigenvector of X1 is critical for f_0 restricted to the collar, with
    collar multiplier mu = lam_hat - lam_{i-1} > 0 and f = a'_0.
    """
    E1, E2 = model.basis("1"), model.basis("2")
    if E1.shape[1] == 0:
        raise DomainError("X1 is trivial: no boundary point below lam_hat")
    u = model.delta * E2[:, 0] + math.sqrt(2.0 - model.delta**2) * E1[:, -1]
    if rho > 0:
        _, u = sphere_project(model, rho, u)
    lam, mu, res = collar_multipliers(model, rho, u)
    fun = scaled_functionals(model, rho, u)
    return CriticalPair(
        u=u, lam=lam, mu=mu, f_val=float(fun.f), rho=rho, residual=res, g_error=abs(fun.g - 1.0),
        kind="boundary", p2_norm=model.norm_L(model.project(u)),
    )


# ---------------------------------------------------------------- level values


def level_values_closed_form(model: SandboxModel) -> dict[str, float]:
    d2 = model.delta**2
    lo, hi, lh = model.lam_below, model.lam_above, model.lam_hat
    return {
        "a1": lo + 0.5 * d2 * (lh - lo),
        "a2": lh,
        "b1": lh,
        "b2": hi - 0.5 * d2 * (hi - lh),
    }


def _rayleigh_extreme(model, which: str, largest: bool) -> float:
    E = model.basis(which)
    vals = np.linalg.eigvalsh(E.T @ model.K @ E)
    return float(vals[-1] if largest else vals[0])


def level_values(model: SandboxModel, rho: float, *, n_starts: int = 8) -> dict[str, float]:
    """a'_rho, a''_rho, b'_rho, b''_rho (sup/inf of f_rho over subspace slices of S and Sigma).

    At rho = 0 the slices are spheres and the values are exact Rayleigh
    extremes; for rho > 0 they are found by constrained optimization.
    """
    d2 = model.delta**2
    lh = model.lam_hat
    if rho == 0.0:
        return {
            "a1": 0.5 * ((2.0 - d2) * _rayleigh_extreme(model, "1", True) + d2 * lh),
            "a2": min(lh, _rayleigh_extreme(model, "3", False)) if model.basis("3").shape[1] else lh,
            "b1": max(lh, _rayleigh_extreme(model, "1", True)) if model.basis("1").shape[1] else lh,
            "b2": 0.5 * ((2.0 - d2) * _rayleigh_extreme(model, "3", False) + d2 * lh),
        }
    return {
        "a1": _slice_opt(model, rho, "12", boundary=True, maximize=True, n_starts=n_starts),
        "a2": _slice_opt(model, rho, "23", boundary=False, maximize=False, n_starts=n_starts),
        "b1": _slice_opt(model, rho, "12", boundary=False, maximize=True, n_starts=n_starts),
        "b2": _slice_opt(model, rho, "23", boundary=True, maximize=False, n_starts=n_starts),
    }


def _collar_radius(model, rho, base, d, r_max):
    """r in (0, r_max) with g_rho(base + r d) = 1, or None if the ray leaves the collar first."""

    def gr(r):
        return _g(model, rho, base + r * d) - 1.0

    if gr(r_max) < 0 or gr(0.0) >= 0:
        return None
    # safeguarded Newton from the rho = 0 root, bisection fallback
    lo, hi = 0.0, r_max
    r = min(max(math.sqrt(max(2.0 - float(base @ model.B @ base), 0.0)), 1e-3), 0.999 * r_max)
    for _ in range(60):
        fun = scaled_functionals(model, rho, base + r * d)
        val = fun.g - 1.0
        if val < 0:
            lo = r
        else:
            hi = r
        slope = float(fun.dg @ d)
        step = val / slope if slope > 0 else math.inf
        r_new = r - step
        if not lo < r_new < hi:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) <= 1e-15 * max(1.0, r):
            return r_new
        r = r_new
    return brentq(gr, lo, hi, xtol=1e-15, rtol=1e-15)


def _slice_opt(model, rho, which, *, boundary, maximize, n_starts):
    """Extreme of f_rho over (X_which) cap S (or cap Sigma), inside the collar.

    On S the point is r d with d an L-unit direction of the slice; on Sigma
    it is delta t + r d with t an L-unit X2 direction and d an L-unit
    direction of the complementary part of the slice.  In both cases r is
    solved from g_rho = 1 with ||u||_L < 2, leaving an unconstrained search
    over directions.
    """
    sign = -1.0 if maximize else 1.0
    rng = np.random.default_rng(7)
    E2 = model.basis("2")
    if boundary:
        other = which.replace("2", "")
        Eo = model.basis(other)
        m2, mo = E2.shape[1], Eo.shape[1]
        r_max = math.sqrt(4.0 - model.delta**2)

        def point(x):
            t, d = x[:m2], x[m2:]
            nt, nd = np.linalg.norm(t), np.linalg.norm(d)
            if nt == 0 or nd == 0:
                return None
            base = model.delta * (E2 @ t) / nt
            r = _collar_radius(model, rho, base, Eo @ d / nd, r_max)
            return None if r is None else base + r * (Eo @ d) / nd

        dim = m2 + mo
    else:
        E = model.basis(which)
        E2c = E.T @ model.B @ E2

        def point(x):
            nx = np.linalg.norm(x)
            if nx == 0:
                return None
            r = _collar_radius(model, rho, np.zeros(model.n), E @ x / nx, 2.0)
            if r is None or r * np.linalg.norm(E2c.T @ x) / nx < model.delta:
                return None
            return r * (E @ x) / nx

        dim = E.shape[1]

    def obj(x):
        u = point(x)
        return 1e6 if u is None else sign * scaled_functionals(model, rho, u).f

    starts = list(np.eye(dim)) + list(rng.standard_normal((n_starts, dim)))
    best = math.inf
    for x0 in starts:
        if obj(x0) >= 1e6:
            continue
        res = minimize(obj, x0, method="BFGS", options={"gtol": 1e-9, "maxiter": 1000})
        best = min(best, float(res.fun))
    if not best < 1e6:
        raise SearchError(f"no collar point on the X{which} slice")
    return sign * best


# ---------------------------------------------------------------- reports


def regime_report(model: SandboxModel, rhos, *, n_samples: int = 64, seed: int = 3) -> dict:
    """Checks phi(1/2) < 1 < phi(2) and d phi/dt >= 1/8 on random collar points for each rho."""
    rng = np.random.default_rng(seed)
    E2 = model.basis("2")
    pts = []
    while len(pts) < n_samples:
        u = rng.standard_normal(model.n)
        u = u / model.norm_L(u) * rng.uniform(1.05, 1.95)
        if model.norm_L(model.project(u)) >= model.delta:
            pts.append(u)
    del E2
    out = {}
    largest = None
    for rho in sorted(rhos):
        ok = True
        min_slope = math.inf
        for u in pts:
            p2 = model.project(u)
            c = model.delta * p2 / model.norm_L(p2)
            lo = _g(model, rho, c + 0.5 * (u - c))
            hi = _g(model, rho, c + 2.0 * (u - c))
            slope = min(_dphi_dt(model, rho, u, c, t) for t in np.linspace(0.5, 2.0, 7))
            min_slope = min(min_slope, slope)
            ok &= lo < 1 < hi and slope >= 0.125
        out[f"{rho:g}"] = {"holds": bool(ok), "min_slope": float(min_slope)}
        if ok:
            largest = rho
    return {"per_rho": out, "largest_rho": largest}


def hypothesis_report(model: SandboxModel, *, seed: int = 5) -> dict:
    """Values at 0 and gradient-to-norm ratios along a shrinking sequence, in both norms."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(model.n)
    G = model.gram
    Ginv = np.linalg.inv(G)
    scales = [10.0**-k for k in range(1, 6)]

    def ratios(field_, grad_in_L):
        out_L, out_H = [], []
        for s in scales:
            u = s * d
            gE = field_.grad(u)
            gL = np.linalg.solve(model.B, gE)
            gH = Ginv @ gE
            nL = math.sqrt(float(u @ model.B @ u))
            out_L.append(math.sqrt(float(gL @ model.B @ gL)) / nL if grad_in_L else math.sqrt(float(gH @ model.B @ gH)) / nL)
            out_H.append(math.sqrt(float(gH @ G @ gH)) / math.sqrt(float(u @ G @ u)))
        return out_L, out_H

    zero = np.zeros(model.n)
    hL, hH = ratios(model.H, False)
    h1L, h1H = ratios(model.H1, True)
    rng2 = np.random.default_rng(seed + 1)
    coer = min(
        float(u @ model.K @ u - (u @ G @ u - u @ model.B @ u)) for u in rng2.standard_normal((64, model.n))
    )
    return {
        "H_at_0": model.H.value(zero),
        "H1_at_0": model.H1.value(zero),
        "grad_H_at_0": float(np.max(np.abs(model.H.grad(zero)))),
        "grad_H1_at_0": float(np.max(np.abs(model.H1.grad(zero)))),
        "H_ratio_L": hL,
        "H_ratio_H": hH,
        "H1_ratio_L": h1L,
        "H1_ratio_H": h1H,
        "coercivity_nu": 1.0,
        "coercivity_M": 1.0,
        "coercivity_min_slack": coer,
        "regime": model.regime(),
    }


def sweep(model: SandboxModel, rhos=(0.2, 0.1, 0.05, 0.02), *, with_levels: bool = True) -> dict:
    """Critical pairs, level values and checks for each rho in the sweep."""
    eps = 0.5 * model.eps0
    rows = []
    for rho in rhos:
        p1, p2 = find_critical_pairs(model, rho)
        row = {
            "rho": rho,
            "pairs": [p1.as_dict(), p2.as_dict()],
            "distinct": float(np.linalg.norm(p1.u - p2.u)),
            "exclusion": [boundary_exclusion_check(model, p1), boundary_exclusion_check(model, p2)],
            "f_window": [
                bool(model.lam_hat - 3 * eps <= p.f_val <= model.lam_hat + 2 * eps) for p in (p1, p2)
            ],
        }
        if with_levels:
            row["levels"] = level_values(model, rho)
        rows.append(row)
    return {
        "model": model.describe(),
        "eps": eps,
        "levels_rho0": level_values(model, 0.0),
        "levels_closed_form": level_values_closed_form(model),
        "sweep": rows,
    }


def radial_crosscheck(model: SandboxModel, pair: CriticalPair, *, tol: float = 1e-11) -> dict:
    """Compare a Galerkin pair with the one-node radial solution of equal first-mode amplitude.

    The radial profile y = sqrt(lam) w is projected on the retained modes;
    the relative coefficient mismatch and the relative lambda mismatch are
    returned.
    """
    from .radial import integrate_to_crit

    field_ = model.H1
    if not isinstance(field_, RadialGalerkinField):
        raise DomainError("radial cross-check needs a Galerkin model")
    R = model.meta["R"]
    coeffs = pair.rho * pair.u
    target = coeffs[1]

    def project(a):
        traj = integrate_to_crit(a, 1, R, tol)
        r = traj.sqrt_lam
        y = np.array([traj.flow.eval(r * x)[0] for x in field_.rho])
        return traj, field_.P.T @ (field_.weight * y)

    def miss(a):
        return project(a)[1][1] - target

    # near onset y is about a phi_1 / phi_1(0)
    guess = target / field_.P[0, 1]
    lo, hi = 0.5 * guess, 2.0 * guess
    if guess < 0:
        lo, hi = hi, lo
    lo = max(lo, -0.999)
    a = brentq(miss, lo, hi, xtol=1e-14, rtol=1e-13)
    traj, d = project(a)
    lam_galerkin = 0.5 * pair.lam
    return {
        "a": a,
        "lam_radial": traj.lam,
        "lam_galerkin": lam_galerkin,
        "lam_rel_error": abs(lam_galerkin - traj.lam) / traj.lam,
        "coeff_rel_error": float(np.linalg.norm(d - coeffs) / np.linalg.norm(coeffs)),
        "coeffs_radial": [float(x) for x in d],
        "coeffs_galerkin": [float(x) for x in coeffs],
    }
