"""Exception hierarchy.

Configuration problems derive from :class:`ConfigurationError`; everything the
numerics can run into at runtime derives from :class:`NumericalError`.  The CLI
maps the two families onto exit codes 2 and 3.
"""


class PoissonAveragingError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PoissonAveragingError, ValueError):
    """Malformed input: arity mismatch, bad schema, invalid scenario."""


class NumericalError(PoissonAveragingError, ArithmeticError):
    """A numerical procedure failed or left its domain of validity."""


class DomainError(NumericalError):
    """A point lies outside the domain where a map is defined."""


class RankDegeneracyError(NumericalError):
    """The rescaling factor eta vanished (structure rank dropped)."""


class InversionError(NumericalError):
    """Newton inversion of the Darboux chart did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateChartError(NumericalError):
    """The chart Jacobian is singular."""


class PolarSingularityError(NumericalError):
    """Cylindrical coordinates evaluated at r <= r_min."""


class SlowAngleError(NumericalError):
    """|dtheta/dtau| fell below the guard; averaging hypotheses fail."""


class QuadratureError(NumericalError):
    """Periodic quadrature did not converge within the doubling budget."""

    def __init__(self, message, delta=None):
        super().__init__(message)
        self.delta = delta


class IntegrationError(NumericalError):
    """ODE integration failed (guard trip, step exhaustion, singularity)."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta
