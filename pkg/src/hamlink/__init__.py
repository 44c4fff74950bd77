"""Variational toolkit for M-periodic solutions of second-order discrete Hamiltonian systems."""

from hamlink.core import NormPair, PeriodicSequence, forward_difference, norms, second_difference
from hamlink.functional import FunctionalContext, i_gradient, i_value, make_context
from hamlink.potential import PotentialSpec, check_hypotheses, example31_potential, table_potential
from hamlink.solver import SolverConfig, find_critical_points, two_solution_certificate
from hamlink.spectral import SpectralData, build_A, build_L, decompose, spectrum_A

__all__ = [
    "FunctionalContext",
    "NormPair",
    "PeriodicSequence",
    "PotentialSpec",
    "SolverConfig",
    "SpectralData",
    "build_A",
    "build_L",
    "check_hypotheses",
    "decompose",
    "example31_potential",
    "find_critical_points",
    "forward_difference",
    "i_gradient",
    "i_value",
    "make_context",
    "norms",
    "second_difference",
    "spectrum_A",
    "table_potential",
    "two_solution_certificate",
]

__version__ = "0.1.0"
