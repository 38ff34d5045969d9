"""Exception types raised across the package."""


class MPCFLError(Exception):
    """Base class for every error raised by mpcfl."""


# field arithmetic and fixed-point codec
class ZeroInverseError(MPCFLError, ZeroDivisionError):
    pass


class EncodingOverflowError(MPCFLError, OverflowError):
    pass


class FieldParamsError(MPCFLError, ValueError):
    pass


# secret sharing
class BadCountError(MPCFLError, ValueError):
    pass


class BadDegreeError(MPCFLError, ValueError):
    pass


class LengthMismatchError(MPCFLError, ValueError):
    pass


class DuplicateSlotError(MPCFLError, ValueError):
    pass


class SlotMismatchError(MPCFLError, ValueError):
    pass


class InsufficientSharesError(MPCFLError, ValueError):
    pass


# simulated network
class UnknownPartyError(MPCFLError, KeyError):
    pass


class SelfSendError(MPCFLError, ValueError):
    pass


class DeadlockError(MPCFLError, RuntimeError):
    """Some endpoints wait for envelopes that were never sent."""

    def __init__(self, waiting):
        self.waiting = dict(waiting)
        desc = ", ".join(f"{k} <- {sorted(map(str, v))}" for k, v in sorted(self.waiting.items()))
        super().__init__(f"deadlock: {desc}")


# protocols
class ElectionStalledError(MPCFLError, RuntimeError):
    pass


class BadCommitteeError(MPCFLError, ValueError):
    pass


# learner
class DimensionMismatchError(MPCFLError, ValueError):
    pass


class EmptyDatasetError(MPCFLError, ValueError):
    pass


class DatasetParseError(MPCFLError, ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class SchemaError(MPCFLError, ValueError):
    pass


# configuration / CLI
class ConfigError(MPCFLError, ValueError):
    pass


class UsageError(MPCFLError, ValueError):
    pass
