"""Exception types raised across the package."""


class IDNLSError(Exception):
    """Base class for all errors raised by idnls_lab."""


class OutOfRegimeError(IDNLSError, ValueError):
    """Some |R_n| >= 1: outside the defocusing regime."""


class BlowupError(IDNLSError):
    """An amplitude reached |R_n| >= 1 during integration."""


class BoundaryLeakError(IDNLSError):
    """Edge amplitudes exceeded the leak threshold; the window is too small."""


class DriftError(IDNLSError):
    """The conserved functional drifted beyond the configured tolerance."""


class UnitarityError(IDNLSError):
    """|a|^2 - |b|^2 disagrees with prod(1 - |R_n|^2) on the circle."""


class UnsupportedStokesDataError(IDNLSError, ValueError):
    """Stokes triple outside the (p, -p, 0), p purely imaginary family."""


class DivergenceError(IDNLSError):
    """Painleve II integration left the bounded branch."""


class DomainError(IDNLSError, ValueError):
    """Argument outside the supported domain of a function."""


class ZeroReflectionError(IDNLSError, ValueError):
    """r(T_1) = 0, so no time shift is defined."""


class OutsideRegionError(IDNLSError, ValueError):
    """A prediction was requested outside the region where it applies."""


class DegenerateFitError(IDNLSError, ValueError):
    """Power-law fit impossible (non-positive samples, too few points)."""


class CalibrationError(IDNLSError):
    """Sign calibration missing or inconclusive."""
