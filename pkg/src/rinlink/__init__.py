"""Optimal detection and shaping for IM-DD links with laser RIN."""

__version__ = "0.1.0"

from .constellation import Constellation, ImBias, entropy, oma_dbm_to_watts, solve_bias, solve_eta
from .detection import (
    ARGMAX_MAP,
    ThresholdRule,
    ThresholdSet,
    approx_threshold,
    awgn_threshold,
    build_thresholds,
    detect_map,
    detect_threshold,
    optimal_threshold,
    uniform_exact_threshold,
)
from .estimators import GeometricShaper, MAPDetector, ProbabilisticShaper, ThresholdDetector
from .link import ChannelModel, LinkParams, build_channel, cond_variance, fiber_loss, tia_gain
from .metrics import SerBreakdown, analytic_ser, mutual_information, q_function
from .montecarlo import McConfig, McResult, SweepResult, simulate, sweep
from .shaping import GsProblem, PsProblem, ShapingResult, optimize_gs, optimize_ps_mi, optimize_ps_ser

__all__ = [
    "ARGMAX_MAP",
    "ChannelModel",
    "Constellation",
    "GeometricShaper",
    "GsProblem",
    "ImBias",
    "LinkParams",
    "MAPDetector",
    "McConfig",
    "McResult",
    "ProbabilisticShaper",
    "PsProblem",
    "SerBreakdown",
    "ShapingResult",
    "SweepResult",
    "ThresholdDetector",
    "ThresholdRule",
    "ThresholdSet",
    "analytic_ser",
    "approx_threshold",
    "awgn_threshold",
    "build_channel",
    "build_thresholds",
    "cond_variance",
    "detect_map",
    "detect_threshold",
    "entropy",
    "fiber_loss",
    "mutual_information",
    "oma_dbm_to_watts",
    "optimal_threshold",
    "optimize_gs",
    "optimize_ps_mi",
    "optimize_ps_ser",
    "q_function",
    "simulate",
    "solve_bias",
    "solve_eta",
    "sweep",
    "tia_gain",
    "uniform_exact_threshold",
]
