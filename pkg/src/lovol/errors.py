"""Exception hierarchy shared by every lovol module.

Errors split into two families so the command line can map them to exit
codes: :class:`InputError` (bad parameters, unsupported requests) and
:class:`NumericalError` (the computation itself failed).
"""

from __future__ import annotations


class LovolError(Exception):
    """Base class for all lovol errors."""


class InputError(LovolError, ValueError):
    """The request is malformed or asks for something unsupported."""


class NumericalError(LovolError, ArithmeticError):
    """A numerical precondition failed during computation."""


class BadParameter(InputError):
    pass


class UnsupportedWeight(InputError):
    """Raised for invariant weights whose formulas are not available (j >= 3)."""

    def __init__(self, weight: int):
        self.weight = weight
        super().__init__(f"local invariant of weight {weight} is not available (only 0, 1, 2)")


class MissingDerivatives(InputError):
    """A file-backed grid cannot be differentiated along a non-periodic axis."""


class NonPositiveDefinite(NumericalError):
    def __init__(self, node=None, message: str | None = None):
        self.node = node
        if message is None:
            message = "metric is not positive definite"
            if node is not None:
                message += f" at node {node}"
        super().__init__(message)


class CutoffTooSmall(NumericalError):
    def __init__(self, required: int, message: str | None = None):
        self.required = int(required)
        super().__init__(message or f"spectral cutoff too small; need at least {self.required}")


class InsufficientLadder(NumericalError):
    pass
