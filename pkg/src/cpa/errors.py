"""Exception types shared across the package."""


class CpaError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CpaError):
    """A point lies outside the partition domain.

    Carries the offending dimension and coordinate value.
    """

    def __init__(self, message: str, dim: int | None = None, value: float | None = None):
        super().__init__(message)
        self.dim = dim
        self.value = value


class WindowMismatchError(CpaError):
    """Two objects whose site windows must agree do not."""


class ZeroMassError(CpaError):
    """An operation produced or received a weight function with zero total mass."""


class PatternOverflowError(CpaError):
    """n_symbols ** window length does not fit in a 64-bit pattern code."""


class NonExtendableError(CpaError):
    """A de Bruijn density outside the extendable set was passed to a
    reconstruction that is only defined on extendable inputs."""


class UnexploredPreimageError(CpaError):
    """A local-function lookup hit a preimage pattern with no estimated image."""

    def __init__(self, message: str, pattern: int | None = None, site: int | None = None,
                 step: int | None = None):
        super().__init__(message)
        self.pattern = pattern
        self.site = site
        self.step = step


class StateSpaceError(CpaError):
    """The global state space is too large to enumerate."""


class ModelInstabilityError(CpaError):
    """A flow map produced non-finite values during fine integration."""


class StabilityError(CpaError):
    """A scheme parameter violates its stability bound (e.g. the Courant condition)."""


class FormatError(CpaError):
    """A persisted table file is malformed or has the wrong version/magic."""


class ChecksumError(FormatError):
    """A persisted table file failed its integrity check."""


class TableMismatchError(CpaError):
    """A loaded table disagrees with the partition or run configuration."""


class ConfigError(CpaError):
    """A run configuration is invalid; carries the offending section/key."""

    def __init__(self, message: str, section: str | None = None, key: str | None = None):
        loc = ""
        if section is not None:
            loc = f"[{section}]" + (f" {key}" if key else "")
            message = f"{loc}: {message}"
        super().__init__(message)
        self.section = section
        self.key = key
