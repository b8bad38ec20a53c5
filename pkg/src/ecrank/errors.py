"""Exception types shared across the package."""


class EcrankError(Exception):
    pass


# curve arithmetic
class SingularCurve(EcrankError):
    pass


class BadReductionPrime(EcrankError):
    pass


class GoodReductionPrime(EcrankError):
    pass


class IncompleteFactorization(EcrankError):
    pass


class PointNotOnCurve(EcrankError):
    pass


# sums
class InsufficientApData(EcrankError):
    pass


class DeltaOutOfRange(EcrankError):
    pass


# dataset
class DegenerateConfiguration(EcrankError):
    pass


class SingularCubic(EcrankError):
    pass


class PointAtSingularity(EcrankError):
    pass


class ParseError(EcrankError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(EcrankError):
    pass


class ConductorExceedsMax(EcrankError):
    pass


class EmptySplit(EcrankError):
    pass


class MissingClass(EcrankError):
    pass


# nn
class ShapeMismatch(EcrankError):
    pass


class ConfigInvariantViolation(EcrankError):
    pass


class NonfiniteLoss(EcrankError):
    pass


class ArchMismatch(EcrankError):
    pass
