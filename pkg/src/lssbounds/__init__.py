"""Non-asymptotic confidence intervals for linear spectral statistics of
random matrices, with MIMO mutual-information and MMSE specialisations and a
seeded Monte Carlo harness that checks every interval empirically."""

from lssbounds.errors import (
    ConfigurationError,
    DomainError,
    NumericError,
    PreconditionError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "NumericError",
    "PreconditionError",
    "__version__",
]
