"""Domain errors that callers need to tell apart."""


class LayoutMismatchError(ValueError):
    """Two feature vectors (or a vector and a store/bank) disagree on layout."""


class InsufficientDataError(ValueError):
    """Not enough records, samples or tasks left to fit or evaluate."""


class EmptyBankError(InsufficientDataError):
    """No prior feature vector passed the topological bank admission rules."""


class NonFiniteLossError(RuntimeError):
    """A training loss became NaN or infinite."""


class StoreCorruptionError(ValueError):
    """A line of a JSON-lines store could not be parsed into a record."""
