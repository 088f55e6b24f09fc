"""Exception hierarchy shared across the package.

CLI exit codes: ConfigurationError family -> 2, ResourceLimitError -> 3,
ProtocolViolationError -> 4.
"""


class MenurecError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MenurecError):
    """Malformed numeric input (dimension mismatch, bad range, ...)."""


class InvalidModelError(MenurecError):
    """A preference model violates a structural requirement (e.g. score <= 0)."""


class InfeasibleSetError(MenurecError):
    """A set descriptor describes an empty set."""


class NotRealizableError(MenurecError):
    """Target item distribution lies outside the realizable (IRD) set."""


class InfeasibleParametersError(MenurecError):
    """Parameter combination cannot satisfy its accuracy contract."""


class ConfigurationError(MenurecError):
    """Experiment or algorithm configuration violates a precondition."""


class ResourceLimitError(MenurecError):
    """Instance exceeds a hard enumeration or size cap."""


class ProtocolViolationError(MenurecError):
    """A recommender broke the round protocol (e.g. emitted an invalid menu)."""


class ContractViolationError(MenurecError):
    """An optimizer was fed a non-contracting action set sequence."""
