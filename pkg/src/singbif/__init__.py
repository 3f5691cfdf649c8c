"""Radial solutions of a Neumann problem with a singular nonlinearity.

Modules: ``specfun`` (Bessel zeros, eigen tables), ``radial`` (the ODE with
barrier handling), ``phi`` (time map), ``continuation`` (shooting, branches,
Dirichlet scan), ``estimates`` (inequality suite), ``sandbox``
(finite-dimensional two-branch construction), ``io`` and ``cli``.
"""

from .continuation import Branch, BranchPoint, solve_lambda, trace_branch
from .errors import (
    BarrierHit,
    BracketError,
    DomainError,
    IntegrationError,
    NodalError,
    RegimeError,
    SearchError,
)
from .phi import phi, phi_limits
from .radial import integrate
from .specfun import EigenTable, build_eigen_table

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "BranchPoint",
    "EigenTable",
    "BarrierHit",
    "BracketError",
    "DomainError",
    "IntegrationError",
    "NodalError",
    "RegimeError",
    "SearchError",
    "build_eigen_table",
    "integrate",
    "phi",
    "phi_limits",
    "solve_lambda",
    "trace_branch",
]
