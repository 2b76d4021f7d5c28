"""Exception types shared across the package."""


class TorusHolonomyError(Exception):
    """Base class for package-specific errors."""


class DimensionMismatchError(TorusHolonomyError, ValueError):
    """Objects built over incompatible models or dimensions were combined."""


class BandwidthError(TorusHolonomyError, ValueError):
    """A Fourier field is wider than the mode box (or a declared cap) allows."""


class SplitViolationError(TorusHolonomyError, ValueError):
    """Hamiltonian or connection data breaks the controlled/dynamic split."""


class OpenCurveError(TorusHolonomyError, ValueError):
    """An operation requiring a closed parameter loop received an open curve."""


class ConfigError(TorusHolonomyError, ValueError):
    """An experiment configuration failed schema or range validation."""
