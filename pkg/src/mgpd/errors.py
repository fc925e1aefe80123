"""Exception hierarchy shared by all modules."""


class MgpdError(Exception):
    """Base class for library errors."""


class DomainError(MgpdError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ContractError(MgpdError, ValueError):
    """A generator or spectral law violated its defining conditions."""


class NumericalError(MgpdError, ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Attributes
    ----------
    detail : dict
        Diagnostic information (achieved error estimate, last iterates, ...).
    """

    def __init__(self, message, **detail):
        super().__init__(message)
        self.detail = detail
