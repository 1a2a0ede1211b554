"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: DomainError -> 1, SpecIOError -> 2,
ResourceCapError -> 3.
"""


class ZdmnError(Exception):
    """Base class for all package errors."""


class DomainError(ZdmnError):
    """A precondition on values or dimensions was violated."""


class ZeroProbabilityEvent(DomainError):
    """Conditioning on an event of probability zero."""


class SpecIOError(ZdmnError):
    """A file could not be read or parsed."""


class ResourceCapError(ZdmnError):
    """An enumeration would exceed its configured size cap."""
