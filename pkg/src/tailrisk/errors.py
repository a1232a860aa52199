"""Exception hierarchy shared by all stages.

The CLI maps ``ConfigError`` to exit code 1, ``DataError`` subclasses to 2 and
``NumericError`` subclasses to 3.
"""


class TailRiskError(Exception):
    pass


class ConfigError(TailRiskError):
    """``problems`` holds ``(key, reason)`` pairs (bare strings get an empty key)."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = [p if isinstance(p, tuple) else ("", p) for p in problems]
        super().__init__("; ".join(f"{k}: {why}" if k else why for k, why in self.problems))


class DataError(TailRiskError):
    pass


class AlignmentError(DataError):
    pass


class DomainError(DataError, ValueError):
    pass


class NumericError(TailRiskError):
    pass


class FitError(NumericError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SelectionError(NumericError):
    pass


class CorrelationError(NumericError):
    pass
