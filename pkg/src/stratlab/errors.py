"""Exception hierarchy shared by all stratlab modules."""


class StratError(Exception):
    """Base class for every error raised by stratlab."""


class ContextMismatch(StratError, ValueError):
    """Objects built over different primes (or levels) were combined."""


class DenominatorDivisibleByP(StratError, ValueError):
    """A rational does not lie in the localization Z_(p)."""


class LevelTooLow(StratError, ValueError):
    """The working precision cannot separate rationals within the bound."""


class NoReconstruction(StratError, ArithmeticError):
    """No rational within the bound matches the digit vector."""


class RankMismatch(StratError, ValueError):
    pass


class NotInvertible(StratError, ArithmeticError):
    pass


class LevelExceeded(StratError, ValueError):
    """Operator order is beyond what the truncation level stores."""


class WindowTooSmall(StratError):
    pass


class NotDescendable(StratError):
    pass


class NotSemisimple(StratError):
    """Boundary residues are not diagonalizable over the prime field."""


class ExponentNotPresent(StratError, KeyError):
    pass


class UnreconstructableExponent(StratError):
    pass


class NonzeroExponent(StratError):
    pass


class WildKummer(StratError, ValueError):
    """Kummer degree divisible by p."""


class ParseError(StratError, ValueError):
    pass
