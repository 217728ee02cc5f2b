from typing import Dict, Optional


class BellError(Exception):
    """Base class for every error raised by tailoredbell."""


class ScenarioError(BellError, ValueError):
    """Invalid scenario parameters, indices, shapes or documents."""


class PoleError(ScenarioError):
    """The cotangent g(x) was evaluated at one of its poles."""


class NonProjectiveError(ScenarioError):
    """A measurement is not a complete set of orthogonal projectors."""


class NumericalError(BellError, ArithmeticError):
    """A quantity that must be real or normalised is not, within tolerance."""


class BudgetExceededError(BellError, RuntimeError):
    """A brute-force enumeration would exceed the configured budget."""


class CertificationError(BellError):
    """
    A mathematical check failed (SOS residual above tolerance, bound ordering).
    `record` holds the machine-readable failure description.
    """

    def __init__(self, message: str, record: Optional[Dict] = None):
        super().__init__(message)
        self.record = record if record is not None else {}
