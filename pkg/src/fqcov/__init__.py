"""Generalized quadratic covariation and weighted local time of rough fBm."""

__version__ = "0.1.0"

from .engine import FbmPath, TimeGrid, derive_seed, generate_path, generate_paths
from .functions import Curve, FunctionSpec
from .kernel import HurstIndex, covariance
from .montecarlo import McEstimate, mc_estimate
from .norms import NormValue, norm_H, norm_H_star
from .qcov import QcovEstimate, closed_form, estimate_decomposed, estimate_eps, estimate_eps_td, estimate_riemann

__all__ = [
    "Curve",
    "FbmPath",
    "FunctionSpec",
    "HurstIndex",
    "McEstimate",
    "NormValue",
    "QcovEstimate",
    "TimeGrid",
    "closed_form",
    "covariance",
    "derive_seed",
    "estimate_decomposed",
    "estimate_eps",
    "estimate_eps_td",
    "estimate_riemann",
    "generate_path",
    "generate_paths",
    "mc_estimate",
    "norm_H",
    "norm_H_star",
]
