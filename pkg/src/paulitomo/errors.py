"""Exception types shared across the package."""


class PauliTomoError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(PauliTomoError, ValueError):
    """Operands refer to different Hilbert-space or basis dimensions."""


class InvalidStateError(PauliTomoError, ValueError):
    """Coefficient vector does not describe a physical quantum state."""


class InvalidEffectError(PauliTomoError, ValueError):
    """Coefficient vector does not describe a valid POVM effect."""


class BasisSizeError(PauliTomoError, ValueError):
    """Requested operator basis exceeds the configured memory budget."""


class SingularInformationError(PauliTomoError):
    """Fisher information is singular or divergent for the requested point."""


class UnidentifiableError(PauliTomoError):
    """The measurement records carry no information about a parameter."""


class BlockStructureError(PauliTomoError):
    """A subalgebra block lacks the structure required by the operation."""


class InvalidModelError(PauliTomoError, ValueError):
    """Model probabilities fall outside [0, 1] beyond numerical slack."""


class SpecFileError(PauliTomoError, ValueError):
    """A spec file failed to parse or validate."""
