class ParameterError(ValueError):
    """Invalid parameters or inconsistent dimensions."""


class FormatError(ValueError):
    """Malformed edge-list file."""


class NumericalError(ArithmeticError):
    """A root finder or iterative method failed to produce a valid answer."""


class DecodeFailure(RuntimeError):
    """Iterative decoder produced non-finite values."""


class InfeasibleError(RuntimeError):
    """No configuration on the search grid meets the error target."""
