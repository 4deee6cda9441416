"""Exception types shared across the package."""


class VortexCensusError(Exception):
    """Base class for all package-specific errors."""


class FieldFormatError(VortexCensusError):
    """Field file has a bad magic string or an unsupported version."""


class FieldCorruptionError(VortexCensusError):
    """Field file is truncated or its length disagrees with the header."""


class FieldDataError(VortexCensusError):
    """Field payload contains non-finite values."""


class NumericalError(VortexCensusError):
    """A linear solve failed even after ridge stabilization."""


class SimulationBlowupError(VortexCensusError):
    """Time integration produced non-finite values."""


class EmptyVortexError(VortexCensusError):
    """A reconstructed vortex field is identically zero."""
