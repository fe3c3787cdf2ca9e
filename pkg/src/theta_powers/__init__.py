"""Certified constructions for fractional parts of real powers and sums of roots."""

from .approx import approx_single, approx_sum_roots, calibrated_constant, gamma, oracle_min_sum
from .caps import CapExceeded, NotRepresentable
from .certreal import BoundVerdict, CertReal, Undecided, dist_nearest_int
from .gaps import approx_two_powers, gap_element, oracle_next_element, psi
from .kernels import BACKEND
from .metric import construct_theta, count_solutions, sample_Vm_measure, verify_witness
from .radical import build_basis, find_small_fracpart, min_nonzero_dist_oracle
from .schedules import parse_phi, parse_rho

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundVerdict",
    "CapExceeded",
    "CertReal",
    "NotRepresentable",
    "Undecided",
    "approx_single",
    "approx_sum_roots",
    "approx_two_powers",
    "build_basis",
    "calibrated_constant",
    "construct_theta",
    "count_solutions",
    "dist_nearest_int",
    "find_small_fracpart",
    "gamma",
    "gap_element",
    "min_nonzero_dist_oracle",
    "oracle_min_sum",
    "oracle_next_element",
    "parse_phi",
    "parse_rho",
    "psi",
    "sample_Vm_measure",
    "verify_witness",
]
