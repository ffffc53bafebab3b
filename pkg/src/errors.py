from typing import Optional


class MatchingError(Exception):
    """Base class for every error raised by the toolkit."""


class GraphFormatError(MatchingError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidMatchingError(MatchingError, ValueError):
    def __init__(self, message: str, violations: Optional[list] = None):
        self.violations = list(violations or [])
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)


class InfeasibleInstanceError(MatchingError):
    pass


class LimitExceededError(MatchingError):
    pass


class UsageError(MatchingError, ValueError):
    pass
