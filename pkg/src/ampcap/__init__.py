"""Capacity of Gaussian vector channels under peak and average power constraints."""

from .bounds import (BoundSet, MimoSpec, constant_amplitude_rate, epi_lower, gaussian_upper,
                     mimo_bounds, miso_capacity)
from .dist import AmplitudeDistribution, make_distribution
from .entropy import kkt_report, output_entropy, rate
from .exceptions import CertificationError, DomainError, NumericalError, ValidationError
from .kernel import ChannelSpec
from .scalar import scalar_capacity
from .solver import SolverResult, solve_capacity
from .threshold import peak_threshold
from .verify import mc_entropy, sample_input_vectors

__version__ = "0.1.0"

__all__ = [
    "AmplitudeDistribution", "BoundSet", "CertificationError", "ChannelSpec", "DomainError",
    "MimoSpec", "NumericalError", "SolverResult", "ValidationError", "constant_amplitude_rate",
    "epi_lower", "gaussian_upper", "kkt_report", "make_distribution", "mc_entropy",
    "mimo_bounds", "miso_capacity", "output_entropy", "peak_threshold", "rate",
    "sample_input_vectors", "scalar_capacity", "solve_capacity",
]
