"""Exception types raised across the package."""


class OutsideRootError(ValueError):
    """A cube or point does not lie in the root cube of a grid function."""


class ResolutionError(ValueError):
    """An object is too fine for the resolution it is evaluated at."""


class UnsupportedDimensionError(NotImplementedError):
    pass


class GeometryError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid experiment configuration."""
