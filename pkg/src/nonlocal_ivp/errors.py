"""Exception hierarchy shared by all modules."""


class NonlocalIVPError(Exception):
    """Base class for every error raised by this package."""


# -- matrices -----------------------------------------------------------------

class NotConvergent(NonlocalIVPError):
    """A matrix required to be convergent to zero is not."""


class DisagreementOutsideBoundary(NonlocalIVPError):
    """Equivalent convergence criteria disagree away from the boundary band.

    This signals a numerical bug and is never swallowed.
    """


# -- expressions --------------------------------------------------------------

class ExprError(NonlocalIVPError):
    pass


class ExpressionSyntaxError(ExprError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifier(ExprError):
    pass


class AbscissaOutOfRange(ExprError):
    pass


class FreeTimeVariable(ExprError):
    pass


class EvalError(ExprError):
    pass


class DivisionByZero(EvalError):
    pass


class DomainError(EvalError):
    pass


# -- grids and operators ------------------------------------------------------

class GridMismatch(NonlocalIVPError):
    pass


# -- solvers ------------------------------------------------------------------

class NotContractive(NonlocalIVPError):
    pass


class NoBoundFound(NonlocalIVPError):
    pass


class NoRoot(NonlocalIVPError):
    pass


class NonFiniteState(NonlocalIVPError):
    pass


class ConfigError(NonlocalIVPError):
    pass
