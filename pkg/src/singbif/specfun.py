"""Bessel J0 / J0' and the radial Neumann and Dirichlet eigenvalue tables of the disk.

Evaluation uses three regimes:

* ``|x| <= 8``: power series (largest term stays below ~1e2, so the
  cancellation loss is a few ulps);
* ``8 < |x| <= 25``: Miller backward recurrence normalised by
  ``J0 + 2 (J2 + J4 + ...) = 1``;
* ``|x| > 25``: Hankel asymptotic expansion, truncated at its smallest term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError

__all__ = [
    "EigenTable",
    "bessel_j0",
    "bessel_j1",
    "bessel_j0_prime",
    "j0_zero",
    "j1_zero",
    "build_eigen_table",
    "eigenfunction",
]

_SERIES_MAX = 8.0
_MILLER_MAX = 25.0


def _series(x: float, order: int) -> float:
    q = -0.25 * x * x
    term = 1.0 if order == 0 else 0.5 * x
    total = term
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + order))
        total += term
        if abs(term) < 1e-17 * abs(total) or m > 60:
            return total


def _miller(x: float) -> tuple[float, float]:
    n = 2 * int((x + 30.0 + 8.0 * math.sqrt(x)) / 2.0)
    jp1, j = 0.0, 1e-30
    norm = 0.0
    j0 = j1 = 0.0
    for k in range(n, 0, -1):
        jm1 = 2.0 * k / x * j - jp1
        jp1, j = j, jm1
        # j now holds J_{k-1}
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if k - 1 == 1:
            j1 = j
        if abs(j) > 1e250:
            j *= 1e-250
            jp1 *= 1e-250
            norm *= 1e-250
            j1 *= 1e-250
    j0 = j
    norm += j0
    return j0 / norm, j1 / norm


def _hankel(x: float, order: int) -> float:
    mu = 4.0 * order * order
    chi = x - (0.5 * order + 0.25) * math.pi
    p, q = 0.0, 0.0
    term = 1.0
    k = 0
    last = math.inf
    while k < 60:
        if abs(term) > last:
            break
        if k % 4 == 0:
            p += term
        elif k % 4 == 1:
            q += term
        elif k % 4 == 2:
            p -= term
        else:
            q -= term
        last = abs(term)
        if last < 1e-18:
            break
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def _check(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"Bessel argument must be finite, got {x!r}")
    return x


def bessel_j0(x: float) -> float:
    """J0(x) for real finite x."""
    ax = abs(_check(x))
    if ax <= _SERIES_MAX:
        return _series(ax, 0)
    if ax <= _MILLER_MAX:
        return _miller(ax)[0]
    return _hankel(ax, 0)


def bessel_j1(x: float) -> float:
    """J1(x) for real finite x (odd in x)."""
    x = _check(x)
    ax = abs(x)
    if ax <= _SERIES_MAX:
        val = _series(ax, 1)
    elif ax <= _MILLER_MAX:
        val = _miller(ax)[1]
    else:
        val = _hankel(ax, 1)
    return -val if x < 0 else val


def bessel_j0_prime(x: float) -> float:
    """J0'(x) = -J1(x)."""
    return -bessel_j1(x)


def _newton_bisect(fun, dfun, lo: float, hi: float, tol: float = 1e-16) -> float:
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise RuntimeError(f"no sign change on [{lo}, {hi}]")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = fun(x)
        if fx == 0.0:
            return x
        if fx * flo < 0:
            hi = x
        else:
            lo, flo = x, fx
        d = dfun(x)
        step = fx / d if d != 0.0 else math.inf
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)) or hi - lo <= tol:
            return xn
        x = xn
    return x


def j0_zero(k: int) -> float:
    """k-th positive zero of J0 (k >= 1)."""
    if k < 1:
        raise IndexError("zero index starts at 1")
    guess = math.pi * (k - 0.25)
    return _newton_bisect(bessel_j0, lambda t: -bessel_j1(t), guess - math.pi / 4, guess + math.pi / 4)


def j1_zero(k: int) -> float:
    """k-th nontrivial positive zero of J1, i.e. of J0' (k >= 1)."""
    if k < 1:
        raise IndexError("zero index starts at 1")
    guess = math.pi * (k + 0.25)
    return _newton_bisect(
        bessel_j1,
        lambda t: bessel_j0(t) - bessel_j1(t) / t,
        guess - math.pi / 4,
        guess + math.pi / 4,
    )


@dataclass(frozen=True)
class EigenTable:
    """Radial eigenvalues of the disk of radius R.

    ``mu[k-1] = (y_k/R)**2`` (Neumann at R), ``nu[k-1] = (z_k/R)**2``
    (Dirichlet at R). Index ``k`` is 1-based in every accessor; the
    constant mode ``mu_0 = 0`` is available through :meth:`mu_k`.
    """

    R: float
    y: tuple[float, ...]
    z: tuple[float, ...]

    @property
    def kmax(self) -> int:
        return len(self.y)

    @property
    def mu(self) -> tuple[float, ...]:
        return tuple((yk / self.R) ** 2 for yk in self.y)

    @property
    def nu(self) -> tuple[float, ...]:
        return tuple((zk / self.R) ** 2 for zk in self.z)

    def mu_k(self, k: int) -> float:
        if k == 0:
            return 0.0
        self._index(k)
        return (self.y[k - 1] / self.R) ** 2

    def nu_k(self, k: int) -> float:
        self._index(k)
        return (self.z[k - 1] / self.R) ** 2

    def _index(self, k: int) -> None:
        if not 1 <= k <= self.kmax:
            raise IndexError(f"mode index {k} outside 1..{self.kmax}")

    def origin_lambda(self, k: int) -> float:
        """Bifurcation point mu_k / 2 of the k-node branches."""
        return 0.5 * self.mu_k(k)

    def asymptote_lambda(self, k: int) -> float:
        """Limit of lambda along the unbounded part of S_k^+."""
        if k % 2 == 0:
            return self.mu_k(k // 2)
        return self.nu_k((k + 1) // 2)

    def rows(self):
        for k in range(1, self.kmax + 1):
            yield k, self.y[k - 1], self.z[k - 1], self.mu_k(k), self.nu_k(k)


def build_eigen_table(R: float, kmax: int) -> EigenTable:
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    if kmax < 1:
        raise DomainError(f"kmax must be >= 1, got {kmax}")
    y = tuple(j1_zero(k) for k in range(1, kmax + 1))
    z = tuple(j0_zero(k) for k in range(1, kmax + 1))
    for k in range(kmax):
        nxt = z[k + 1] if k + 1 < kmax else math.inf
        if not (z[k] < y[k] < nxt):
            raise RuntimeError(f"interlacing violated at k={k + 1}")
    return EigenTable(R=float(R), y=y, z=z)


def eigenfunction(
    table: EigenTable, kind: Literal["neumann", "dirichlet"], k: int, rho
):
    """w_k(rho) = J0(y_k rho / R) or v_k(rho) = J0(z_k rho / R)."""
    if kind == "neumann":
        if k == 0:
            root = 0.0
        else:
            table._index(k)
            root = table.y[k - 1]
    elif kind == "dirichlet":
        table._index(k)
        root = table.z[k - 1]
    else:
        raise ValueError(f"unknown eigenfunction kind {kind!r}")
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0) or np.any(r > table.R * (1 + 1e-12)):
        raise DomainError("rho must lie in [0, R]")
    scale = root / table.R
    if r.ndim == 0:
        return bessel_j0(scale * float(r))
    return np.array([bessel_j0(scale * t) for t in r.ravel()]).reshape(r.shape)
