"""Exception hierarchy shared by every module."""


class RelamalgError(Exception):
    """Base class for all errors raised by the package."""


class StructureError(RelamalgError, ValueError):
    """Malformed signature or structure (bad token, pair outside domain, partial table)."""


class SignatureMismatch(RelamalgError):
    pass


class NotClosed(RelamalgError):
    pass


class DomainMismatch(RelamalgError):
    pass


class NotSubstructure(RelamalgError):
    pass


class NotConformant(RelamalgError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnknownRelation(RelamalgError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnsupportedSignature(RelamalgError):
    pass


class Inconsistent(RelamalgError):
    pass


class UnknownEntry(RelamalgError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ExpectationViolated(RelamalgError, AssertionError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BudgetExceeded(RelamalgError):
    pass


class FormatError(RelamalgError, ValueError):
    """Structure file could not be parsed."""
