"""Exception types raised across the toolchain."""

from __future__ import annotations


class QsimError(ValueError):
    """Base class for toolchain errors."""


class DimensionCapError(QsimError):
    pass


class UnboundParameterError(QsimError):
    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__(f"unbound parameter(s): {', '.join(self.names)}")


class IncompatibleOperatorError(QsimError):
    pass


class EncodingError(QsimError):
    pass


class LeakageError(QsimError):
    pass
