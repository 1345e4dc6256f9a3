"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class PreconditionError(ValueError):
    """An input violates a stated precondition (CLI exit code 2)."""


class ConfigurationError(PreconditionError):
    """An ensemble or experiment configuration is inconsistent."""


class DomainError(PreconditionError):
    """A function was asked for a value outside its domain."""


class NumericError(ArithmeticError):
    """A numerical routine failed (CLI exit code 3)."""
