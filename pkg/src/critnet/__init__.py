"""Loss fluctuations of packet networks at the onset of congestion.

Single-link queue simulation, the analytic loss law and its Laplace
inversion, path-level aggregation over scale-free load disorder, an
idealized AIMD feedback loop and the supporting graph tools.
"""
__version__ = "0.1.0"

from .errors import ConvergenceError, CritnetError, InsufficientDataError, ParameterError
from .model import (BaseDesign, CriticalitySpread, LinkParams, LoadModel, PathSpec, WindowSpec, realize_link,
                    sample_eta, sample_load, sample_path)
from .analytics import Regime, classify, invert_laplace_pdf, no_loss_weight

__all__ = [
    "BaseDesign", "ConvergenceError", "CriticalitySpread", "CritnetError", "InsufficientDataError", "LinkParams",
    "LoadModel", "ParameterError", "PathSpec", "Regime", "WindowSpec", "classify", "invert_laplace_pdf",
    "no_loss_weight", "realize_link", "sample_eta", "sample_load", "sample_path",
]
