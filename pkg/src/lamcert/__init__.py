"""Exact-rational certificates for growth-rate drops of nonnegative integer matrices."""

__version__ = "0.1.0"

from .errors import LamcertError  # noqa: E402
from .pfcore import IncidenceMatrix, PerronCertificate, perron_bounds  # noqa: E402

__all__ = ["IncidenceMatrix", "LamcertError", "PerronCertificate", "perron_bounds", "__version__"]
