"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the physically meaningful domain."""


class DimensionError(ValueError):
    """Array shapes or band plans do not line up."""


class ConfigurationError(ValueError):
    """A parameter set or config file is internally inconsistent."""


class ReconstructionError(RuntimeError):
    """A channel could not be reconstructed (e.g. no valid pixels at all)."""
