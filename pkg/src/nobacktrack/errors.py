"""Exception hierarchy shared by every module of the package."""


class ChainError(Exception):
    """Base class for all errors raised by nobacktrack."""


class NotSquare(ChainError):
    pass


class RowSumViolation(ChainError):
    def __init__(self, row, total):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, expected 1")


class NegativeEntry(ChainError):
    def __init__(self, row, col, value=None):
        self.row = row
        self.col = col
        super().__init__(f"entry ({row}, {col}) = {value!r} is outside [0, 1]")


class DimensionMismatch(ChainError):
    pass


class NonUniqueStationary(ChainError):
    pass


class NumericalFailure(ChainError):
    pass


class NotIrreducible(ChainError):
    pass


class SingularSystem(NotIrreducible):
    pass


class NotReversible(ChainError):
    pass


class ZeroTargetProbability(ChainError):
    pass


class InvalidInit(ChainError):
    pass


class KernelConditionViolation(ChainError):
    def __init__(self, violations):
        self.violations = list(violations)
        head = ", ".join(str(v) for v in self.violations[:3])
        super().__init__(f"{len(self.violations)} kernel condition violation(s): {head}")


class DominationViolation(ChainError):
    pass


class NotElementaryPair(ChainError):
    pass


class NoMarks(ChainError):
    pass


class EmptySubset(ChainError):
    pass


class RhoAsymmetric(ChainError):
    pass


class DeltaOutOfRange(ChainError):
    pass


class UnknownTarget(ChainError):
    pass


class ParseError(ChainError):
    pass
