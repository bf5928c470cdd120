"""Full-duplex C-RAN uplink/downlink rate simulator and analytic engine."""

from .config import (ConfigError, NormalizedConfig, SystemConfig,
                     load_config, normalize)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NormalizedConfig",
    "SystemConfig",
    "load_config",
    "normalize",
    "__version__",
]
