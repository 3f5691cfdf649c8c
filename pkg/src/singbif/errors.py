"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class BarrierHit(RuntimeError):
    """Integration stopped because 1 + sqrt(lam) w dropped below the barrier floor.

    This is data rather than failure: the radius reached and the gap at the
    stopping point drive the blow-up diagnostics.
    """

    def __init__(self, rho, gap, message=None):
        self.rho = float(rho)
        self.gap = float(gap)
        super().__init__(message or f"barrier floor reached at rho={rho:.12g} (gap={gap:.3g})")


class IntegrationError(RuntimeError):
    """The initial-value solver failed (step-size underflow or similar)."""


class BracketError(ValueError):
    """A root-finding bracket does not enclose a sign change."""


class NodalError(ValueError):
    """A located solution does not carry the requested number of nodes."""


class RegimeError(ValueError):
    """A scale parameter is outside the regime where a construction is valid."""


class SearchError(RuntimeError):
    """A critical-point search did not converge."""

    def __init__(self, message, best_residual=None):
        self.best_residual = best_residual
        super().__init__(message)
