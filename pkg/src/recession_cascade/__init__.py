"""Global recessions as a threshold cascade among country agents on a small-world network."""

from .model import ConfigError, CountryRoster, ModelParams

__version__ = "0.1.0"

__all__ = ["ConfigError", "CountryRoster", "ModelParams", "__version__"]
