"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: validation problems (``DomainError``,
``ContractError``) exit with 2, ``ResourceError`` with 3 and
``ConsistencyError`` with 4.
"""


class WiretapError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(WiretapError, ValueError):
    """An argument lies outside the domain of an operation."""


class ContractError(WiretapError, ValueError):
    """A structural precondition of an operation does not hold."""


class ResourceError(WiretapError, RuntimeError):
    """An enumeration or grid would exceed its configured cap.

    ``required`` holds the size the caller would have to allow.
    """

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class ConsistencyError(WiretapError, RuntimeError):
    """Two independent computations of the same quantity disagree."""
