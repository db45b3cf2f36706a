"""Exception hierarchy shared by all modules."""


class RHTauError(Exception):
    """Base class for every numerical or configuration failure raised here."""


class EvaluationError(RHTauError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NearZeroOnContour(RHTauError):
    pass


class PhaseJumpTooLarge(RHTauError):
    pass


class NonzeroIndex(RHTauError):
    pass


class NonzeroIndexB(NonzeroIndex):
    pass


class NoAdmissiblePermutation(RHTauError):
    pass


class RootRefinementFailed(RHTauError):
    pass


class DerivativeUnstable(RHTauError):
    pass


class ZeroOnContour(RHTauError):
    pass


class CaseNotAdmissible(RHTauError):
    pass


class NonAdmissibleCase(CaseNotAdmissible):
    pass


class CannotSeparate(RHTauError):
    pass


class NoConvergence(RHTauError):
    pass


class OnDivisor(RHTauError):
    pass


class MiddleFactorSingular(RHTauError):
    pass


class CVanishesAtZero(RHTauError):
    pass


class ConfigError(RHTauError):
    """Bad experiment or family configuration; carries a field path and line if known."""

    def __init__(self, message, field=None, line=None):
        loc = []
        if field is not None:
            loc.append(f"field {field!r}")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.field = field
        self.line = line
