"""Exception types shared by the compute modules and the CLI."""


class BellSimError(Exception):
    """Base class for all errors raised by bellsim."""


class ConfigError(BellSimError):
    """Bad command line, config file or run parameters."""


class InputError(BellSimError):
    """An input file is missing, unreadable or malformed."""


class DomainError(BellSimError, ValueError):
    """A numeric argument lies outside the model's domain of validity."""


class InvariantError(BellSimError):
    """An internal consistency check failed."""
