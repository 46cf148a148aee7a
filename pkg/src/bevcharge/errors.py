"""Exception types shared by the engine, the loader and the CLI."""

from __future__ import annotations


class BevChargeError(Exception):
    """Base class. ``code`` is a stable machine-readable identifier."""

    code = "ERROR"

    def __init__(self, message, *, code=None, file=None, row=None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.file = file
        self.row = row

    def location(self) -> str:
        if self.file is None:
            return "-"
        if self.row is None:
            return self.file
        return f"{self.file}:{self.row}"

    def __str__(self):
        msg = super().__str__()
        if self.file is None:
            return f"[{self.code}] {msg}"
        return f"[{self.code}] {self.location()}: {msg}"


class UsageError(BevChargeError, ValueError):
    """Inputs that violate an operation's preconditions."""

    code = "USAGE"


class ComputationError(BevChargeError, ArithmeticError):
    """Arithmetic produced a non-finite or otherwise undefined value."""

    code = "COMPUTATION"


class ValidationError(BevChargeError, ValueError):
    """A dataset or derived input failed a data-level rule."""

    code = "VALIDATION"


class DatasetInvalid(BevChargeError):
    """Raised by :func:`bevcharge.dataset.load_dataset` when the report has errors."""

    code = "DATASET_INVALID"

    def __init__(self, report):
        first = report.errors[0] if report.errors else None
        super().__init__(
            f"dataset has {len(report.errors)} error(s)",
            file=first.file if first else None,
            row=first.row if first else None,
        )
        self.report = report
