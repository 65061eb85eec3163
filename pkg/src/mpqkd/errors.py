"""Exception types raised by the library.

Every error derives from :class:`QkdError`, which is itself a ``ValueError``
so callers validating input can catch the usual builtin.
"""

from __future__ import annotations


class QkdError(ValueError):
    """Base class for all library errors."""


class InvalidStateError(QkdError):
    """A matrix failed the density-operator invariants."""


class InvalidBlochVector(QkdError):
    pass


class NotUnitaryError(QkdError):
    pass


class CPViolation(QkdError):
    """Kraus operators do not satisfy sum K^dag K = I."""


class NotAPauliChannel(QkdError):
    pass


class NotDepolarizing(QkdError):
    """A channel's PTM is not of the form diag(1, c, c, c).

    ``deviation`` holds the maximum absolute entry-wise distance to the
    closest isotropic PTM.
    """

    def __init__(self, deviation: float, tol: float):
        super().__init__(f"channel is not depolarizing: deviation {deviation:.3e} > tol {tol:.1e}")
        self.deviation = deviation
        self.tol = tol


class ArityMismatch(QkdError):
    pass


class UnsupportedEnsemble(QkdError):
    pass


class InvalidParametrization(QkdError):
    pass


class OutOfRange(QkdError):
    pass


class InsufficientBits(QkdError):
    pass
