"""Exception types shared across the package."""


class IpnasError(Exception):
    """Base class for all package-specific errors."""


class RangeError(IpnasError):
    """A numeric field or index is outside its allowed closed range."""


class InvalidSubnetError(IpnasError):
    """An address does not fall inside any of the four layer subnets."""


class InvalidParticleError(IpnasError):
    """A particle position cannot be decoded into a valid architecture."""


class StateError(IpnasError):
    """An operation was invoked before required state was initialized."""


class ShapeError(IpnasError):
    """Tensor shapes are inconsistent with the layer parameters."""


class NumericError(IpnasError):
    """A non-finite value appeared during training."""


class EvaluatorFailure(IpnasError):
    """A fitness evaluation could not produce a usable score."""


class FormatError(IpnasError):
    """A dataset file is malformed (bad magic, truncation, ragged rows)."""


class ConsistencyError(IpnasError):
    """Two dataset files that must agree (image/label counts) do not."""


class ConfigError(IpnasError):
    """A configuration value is unknown, unparseable, or out of range."""


class DegenerateError(IpnasError):
    """The covariance of the supplied points carries no variance."""
