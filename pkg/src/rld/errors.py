"""Exception types shared across the package."""


class RldError(Exception):
    """Base class for library errors."""


class ParameterError(RldError, ValueError):
    """An argument is outside its documented domain."""


class DegenerateBasisError(RldError):
    """Basis columns are linearly dependent within tolerance."""


class UniformSamplingRegimeError(ParameterError):
    """List size is so large that the optimum confidence collapses to zero.

    Solving for the confidence parameter requires K < e^(2n); beyond that
    the sampler degenerates to uniform sampling of the lattice and there
    is no useful optimum.
    """


class GainLimitError(ParameterError):
    """Requested gain exceeds the achievable limit (G must be < 8n)."""


class SizeGuardError(ParameterError):
    """Problem size exceeds a desk-scale safety guard."""


class ConfigError(RldError):
    """Malformed experiment configuration."""
