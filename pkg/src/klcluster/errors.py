"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for bad data or out-of-domain arguments, 3 for numeric failures.
"""


class KLClusterError(Exception):
    exit_code = 2


class DomainError(KLClusterError, ValueError):
    """An argument or data value lies outside the operation's domain."""


class ParseError(DomainError):
    """A data file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class NumericError(KLClusterError, ArithmeticError):
    exit_code = 3


class SupportError(NumericError):
    """P puts mass where the model distribution Q has none."""

    def __init__(self, message, uncovered_mass):
        self.uncovered_mass = uncovered_mass
        super().__init__(f"{message} (uncovered P mass {uncovered_mass:.6g})")


class DegenerateError(NumericError):
    """A reduction is undefined, e.g. a zero variance or a zero index."""
