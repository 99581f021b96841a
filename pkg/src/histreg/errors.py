"""Exception hierarchy."""


class HistRegError(Exception):
    """Base class for all package errors."""


class InvalidHistogram(HistRegError, ValueError):
    pass


class DomainError(HistRegError, ValueError):
    pass


class DegenerateDispersion(HistRegError, ArithmeticError):
    pass


class EmptyColumn(HistRegError, ValueError):
    pass


class DimensionMismatch(HistRegError, ValueError):
    pass


class SingularDesign(HistRegError, ArithmeticError):
    pass


class MaxIterations(HistRegError, ArithmeticError):
    pass


class KindMismatch(HistRegError, TypeError):
    pass


class AllResamplesFailed(HistRegError, RuntimeError):
    pass


class ParseError(HistRegError, ValueError):
    pass


class ValidationError(HistRegError, ValueError):
    """Carries every violated invariant found while validating a table."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(self.findings))
