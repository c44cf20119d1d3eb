"""Exception hierarchy.

Domain rejections derive from :class:`DomainError`, numerical failures from
:class:`NumericalError`; the CLI maps the two families to distinct exit codes.
"""


class RenormError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RenormError, ValueError):
    pass


class NumericalError(RenormError, ArithmeticError):
    pass


class ConstraintViolation(DomainError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnsupportedBreak(DomainError):
    pass


class DomainViolation(DomainError):
    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)


class PoleOnDomain(NumericalError):
    pass


class NotRenormalizable(DomainError):
    pass


class PrefixUnreachable(DomainError):
    pass


class CombinatoricsMismatch(NumericalError):
    pass


class HeightCapExceeded(NumericalError):
    def __init__(self, r_cap, partial=None):
        self.r_cap = r_cap
        self.partial = partial
        super().__init__(f"height exceeds cap {r_cap} (near-parabolic regime)")


class DegenerateExtraction(NumericalError):
    pass


class Undecided(NumericalError):
    def __init__(self, message, value=None):
        self.value = value
        super().__init__(message)


class NoConvergence(NumericalError):
    pass


class ToleranceStall(NumericalError):
    pass


class NoIntersection(NumericalError):
    pass


class NotHyperbolic(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class DegenerateAlignment(NumericalError):
    pass


class IterateBudgetExceeded(NumericalError):
    pass
