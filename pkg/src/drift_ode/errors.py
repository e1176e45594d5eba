"""Exception taxonomy shared by all drift_ode modules."""


class DriftOdeError(Exception):
    """Base class for every error raised by this package."""


class MathDomainError(DriftOdeError):
    """Base class for errors where the inputs leave the supported regime."""


# --- numerics ---------------------------------------------------------------

class SubdivisionLimit(DriftOdeError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""


class NonFiniteSample(DriftOdeError):
    """An integrand or right-hand side returned NaN/inf."""


# --- signal -----------------------------------------------------------------

class PeriodicityViolation(MathDomainError):
    """A function failed the sampled periodicity test it was declared with."""


class NonContracting(MathDomainError):
    """The per-period multiplier exp(a(T)) is >= 1.

    Downstream geometric series (limit initial value, drift function,
    window recursion) diverge in this regime, so it is rejected up front.
    """


# --- compartments -----------------------------------------------------------

class ComplexSpectrum(MathDomainError):
    """The coupling matrix has a genuinely complex eigenvalue pair."""


class DefectiveMatrix(MathDomainError):
    """The eigenvector matrix is numerically singular (not diagonalizable)."""


class NonNegativeEigenvalue(MathDomainError):
    """An eigenvalue is >= 0; the scalar theory needs a strictly negative rate."""


# --- perturbed --------------------------------------------------------------

class ConditionsNotVerified(DriftOdeError):
    """The sufficient-condition verdict was fail/indeterminate and no override
    was given."""


# --- expression language ----------------------------------------------------

class ExpressionError(DriftOdeError):
    """Base class for expression parsing/evaluation errors."""


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression source.

    Carries the byte offset of the offending token and the set of token
    kinds that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        super().__init__(message)
        self.offset = offset
        self.expected = tuple(expected)


class UnknownIdentifier(ExpressionError):
    """Identifier that is neither a variable, a constant nor a function."""

    def __init__(self, name, offset):
        super().__init__(f"unknown identifier '{name}' at byte {offset}")
        self.name = name
        self.offset = offset


class UnboundVariable(ExpressionError):
    """A free variable had no value bound at evaluation time."""


class DomainError(MathDomainError, ExpressionError):
    """Evaluation hit a math-domain fault (log of nonpositive, division by
    zero, zero to a negative power, ...)."""


# --- configuration ----------------------------------------------------------

class ConfigError(DriftOdeError):
    """Scenario config file is missing, malformed, or inconsistent."""
