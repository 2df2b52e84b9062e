"""Waiting-time analysis for cyclic single-server networks with rerouting."""

from .analysis import (
    QueueWaitReport,
    WaitReport,
    cycle_time,
    cycle_time_little,
    intervisit_time,
    intervisit_time_little,
    little_gap,
    report,
    wait_arbitrary,
    wait_external,
    wait_internal,
    wait_internal_cond,
    wait_switch,
    wait_visit,
)
from .errors import RovingError, StabilityWarning
from .kernels import KernelTable, UVectors, busy_period, kernel_table, u_vectors
from .model import (
    EXHAUSTIVE,
    GATED,
    DistributionSpec,
    NetworkModel,
    QueueSpec,
    TrafficSolution,
    solve_traffic,
    validate,
)
from .pgf import (
    Boundary,
    arbitrary_epoch_pgf,
    boundary_pgf,
    cycle_map,
    lb_service,
    lb_visit,
    lc_service,
)
from .transforms import Jet, Moments, jet_div, lst, moments_from_jet, past_residual

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "DistributionSpec",
    "EXHAUSTIVE",
    "GATED",
    "Jet",
    "KernelTable",
    "Moments",
    "NetworkModel",
    "QueueSpec",
    "QueueWaitReport",
    "RovingError",
    "StabilityWarning",
    "TrafficSolution",
    "UVectors",
    "WaitReport",
    "arbitrary_epoch_pgf",
    "boundary_pgf",
    "busy_period",
    "cycle_map",
    "cycle_time",
    "cycle_time_little",
    "intervisit_time",
    "intervisit_time_little",
    "jet_div",
    "kernel_table",
    "lb_service",
    "lb_visit",
    "lc_service",
    "little_gap",
    "lst",
    "moments_from_jet",
    "past_residual",
    "report",
    "solve_traffic",
    "u_vectors",
    "validate",
    "wait_arbitrary",
    "wait_external",
    "wait_internal",
    "wait_internal_cond",
    "wait_switch",
    "wait_visit",
]
