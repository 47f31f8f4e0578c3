"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) so the
CLI can print ``error: <code>: <message>`` on a single line.
"""


class TradecastError(Exception):
    """Base class for all errors raised by tradecast."""

    @property
    def code(self) -> str:
        return type(self).__name__


# panel ingest
class MissingFile(TradecastError):
    pass


class HeaderMismatch(TradecastError):
    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"expected header {expected!r}, found {found!r}")


class RowError(TradecastError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateKey(TradecastError):
    def __init__(self, key, line: int | None = None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate key {key}{where}")


class InsufficientYears(TradecastError):
    pass


# statistics
class ZeroVariance(TradecastError):
    pass


class TooFewPairs(TradecastError):
    pass


class LengthMismatch(TradecastError):
    pass


class UnknownColumn(TradecastError):
    pass


# clustering
class KTooLarge(TradecastError):
    pass


class DimensionMismatch(TradecastError):
    pass


# arima
class TooShort(TradecastError):
    pass


class NonStationary(TradecastError):
    pass


class SingularDesign(TradecastError):
    pass


class NoFeasibleModel(TradecastError):
    pass


# gbdt
class EmptyTrain(TradecastError):
    pass


class NonNumericTarget(TradecastError):
    pass


class NoValidWithEarlyStop(TradecastError):
    pass


class SchemaMismatch(TradecastError):
    pass


class ModelFormatError(TradecastError):
    pass


# cli
class ConfigError(TradecastError):
    pass
