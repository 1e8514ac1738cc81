"""
Exceptions raised by ``vmtd``. Everything derives from ``VMTDError`` so
callers (and the CLI) can catch the whole family at once.
"""


class VMTDError(Exception):
    pass


class DimensionError(VMTDError, ValueError):
    """
    Array shapes do not agree with each other or with the MDP.
    """


class DegeneracyError(VMTDError):
    """
    A Markov chain has no unique stationary distribution.
    """


class NumericError(VMTDError):
    pass


class SingularityError(NumericError):
    """
    A matrix is singular or too ill-conditioned to solve against.
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class CoverageError(VMTDError, ValueError):
    """
    The behavior policy never takes an action the target policy takes.
    """


class ConfigError(VMTDError, ValueError):
    pass


class ProbabilityError(VMTDError, ValueError):
    """
    A distribution has negative entries or does not sum to one.
    """


class LayoutError(VMTDError, ValueError):
    pass
