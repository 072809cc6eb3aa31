"""Error hierarchy with stable machine-readable codes.

Every exception raised by this package derives from QpcaError and carries a
stable string code so CLI consumers can match on it without parsing messages.
"""

from __future__ import annotations


class QpcaError(Exception):
    """Base error. ``code`` is stable across releases."""

    code = "ERROR"

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


class InvalidInputError(QpcaError):
    code = "INVALID_INPUT"


class ParseError(QpcaError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column

    def payload(self) -> dict:
        out = super().payload()
        if self.line is not None:
            out["line"] = self.line
        if self.column is not None:
            out["column"] = self.column
        return out


class OutOfRangeError(QpcaError):
    code = "OUT_OF_RANGE"


class NumericalFailureError(QpcaError):
    code = "NUMERICAL_FAILURE"


class ContractViolationError(QpcaError):
    """An operation was applied outside its stated preconditions."""

    code = "CONTRACT_VIOLATION"


class UnknownRegisterError(QpcaError):
    code = "UNKNOWN_REGISTER"


class DegenerateSpectrumError(QpcaError):
    """Two targeted eigenvalues share one quantized label."""

    code = "DEGENERATE_SPECTRUM"


class InvalidRotationError(QpcaError):
    """Rotation constant exceeds the smallest estimated anchor coefficient."""

    code = "INVALID_ROTATION"


class VanishingSuccessError(QpcaError):
    """Post-selection probability below the configured floor."""

    code = "VANISHING_SUCCESS"


class WeakAnchorError(QpcaError):
    """An anchor coefficient estimate fell below the usability floor."""

    code = "WEAK_ANCHOR"

    def __init__(self, message: str, anchor_index: int | None = None):
        super().__init__(message)
        self.anchor_index = anchor_index


class UnderSampledError(QpcaError):
    """Spectrum sampling budget ran out before the target was covered."""

    code = "UNDER_SAMPLED"

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularSystemError(QpcaError):
    code = "SINGULAR_SYSTEM"


class DegenerateRegressionError(QpcaError):
    code = "DEGENERATE_REGRESSION"
