"""Poisson limits of scaled empirical point processes near quantile anchors.

Submodules
----------
rvdist
    Model families, Philox-based sampling and scaling constants.
epp
    Scaled empirical point processes and box counts.
compensator
    Exact and limiting compensators.
knn
    Nearest-neighbour density estimation and the gap test.
copula
    Normal copula joint tails and joint extremes.
verify
    Monte Carlo replication and goodness-of-fit checks.
"""

from .copula import NormalCopula, fit_tail_law, joint_tail
from .compensator import exact_compensator_1d, joint_compensator, limit_measure
from .epp import Box, ScaledEmpiricalProcess, build_scaled_1d, build_scaled_multid, count_in
from .errors import PLLError
from .knn import KNNDensity, InverseGammaLaw, lr_gap_test
from .rvdist import GapModel, PiecewisePolynomial, PowerLaw, RegVarSpec, Uniform, sample, scaling_constants
from .verify import FitReport, ReplicationConfig

__version__ = "0.1.0"

__all__ = [
    "Box",
    "FitReport",
    "GapModel",
    "InverseGammaLaw",
    "KNNDensity",
    "NormalCopula",
    "PLLError",
    "PiecewisePolynomial",
    "PowerLaw",
    "RegVarSpec",
    "ReplicationConfig",
    "ScaledEmpiricalProcess",
    "Uniform",
    "build_scaled_1d",
    "build_scaled_multid",
    "count_in",
    "exact_compensator_1d",
    "fit_tail_law",
    "joint_compensator",
    "joint_tail",
    "limit_measure",
    "lr_gap_test",
    "sample",
    "scaling_constants",
]
