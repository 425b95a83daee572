"""Exceptions shared by the engines; the CLI maps each class to an exit code."""


class AreaWalksError(RuntimeError):
    """Base class for engine failures."""

    exit_code = 2


class BudgetExceededError(AreaWalksError):
    """A run would exceed an enumeration, table or float-precision budget."""

    exit_code = 3


class ConsistencyError(AreaWalksError):
    """Two engines (or an engine and a closed form) disagree."""


class CalibrationError(ConsistencyError):
    """No candidate phase factor reproduces the oracle trace."""


class SpectralError(AreaWalksError):
    """Eigendecomposition failed or produced values outside the norm bound."""


class QuadratureError(AreaWalksError):
    """A Fourier-inversion quadrature did not meet its tail or step-halving check."""
