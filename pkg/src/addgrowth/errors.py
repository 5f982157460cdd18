"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GrowthError(Exception):
    exit_code = 3


class SpecError(GrowthError, ValueError):
    """Malformed spec file, invalid parameter or configuration."""

    exit_code = 2


class IntegrabilityError(GrowthError):
    """A Lévy-measure integral that must be finite diverges."""


class DriftUndefinedError(GrowthError):
    """The small-jump first moment is infinite, so the drift does not exist."""


class UnsupportedShapeError(GrowthError):
    """The operation needs a structural form the spec does not have."""


class InsufficientRangeError(GrowthError):
    """Too few decades of samples to estimate an exponent."""


class GrowthRangeError(GrowthError):
    """Requested growth value lies outside what the process reaches by T_max."""


class InapplicableError(GrowthError):
    """Hypotheses of a simplified formula are not met."""


class StepSizeError(GrowthError):
    """Jump intensity per step is too large for the chosen time grid."""


class CertificateError(GrowthError):
    """A moderate/quasiconvex certificate fails on sampled pairs."""
