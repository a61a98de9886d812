"""Threshold-waiting and scheduling policies trading AoI against time-stamp credibility."""

from aoicred.model import (
    ASSchedule,
    ConvergenceError,
    InfeasibleError,
    MetricReport,
    ProcessSpec,
    RecoveryFunction,
    RRPolicy,
    ServiceDistribution,
    SystemConfig,
    ThresholdPolicy,
    H_gamma,
    H_gamma_inverse,
    h_eval,
)
from aoicred.single import (
    SingleSolution,
    aoi_of_threshold,
    dinkelbach_p,
    error_of_threshold,
    solve_single,
    solve_threshold_for_credibility,
    solve_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "ASSchedule",
    "ConvergenceError",
    "InfeasibleError",
    "MetricReport",
    "ProcessSpec",
    "RecoveryFunction",
    "RRPolicy",
    "ServiceDistribution",
    "SingleSolution",
    "SystemConfig",
    "ThresholdPolicy",
    "H_gamma",
    "H_gamma_inverse",
    "aoi_of_threshold",
    "dinkelbach_p",
    "error_of_threshold",
    "h_eval",
    "solve_single",
    "solve_threshold_for_credibility",
    "solve_weighted",
]
