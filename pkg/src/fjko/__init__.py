"""Fractional-memory JKO stepping for Fokker-Planck dynamics.

L1 memory weights for the time-fractional derivative, entropic Wasserstein
proximal steps solved by Dykstra scaling iterations, convergence-study
tooling, and a subdiffusion Monte-Carlo cross-check.
"""
from ._version import __version__
from .caputo import (
    FractionalOrder,
    HistoryWeights,
    L1WeightRow,
    caputo_apply,
    history_weights,
    initial_trace_term,
    l1_weights,
    right_caputo_apply,
)
from .entropic import (
    ConvergenceError,
    GibbsKernel,
    ScalingState,
    dykstra_jko_step,
    gibbs_kernel,
    kl_prox,
    plan_cost,
    sinkhorn_distance,
)
from .grids import (
    CostMatrix,
    DiscreteDensity,
    Potential,
    SpatialGrid,
    build_grid,
    cost_matrix,
    density_from_function,
    midpoint_integral,
    potential_from_function,
)
from .mc import (
    McConfig,
    density_histogram,
    first_passage_time,
    first_passage_times,
    simulate_endpoint,
    simulate_endpoints,
    stable_increment,
    stable_samples,
)
from .metrics import fit_rate, l1_error, l2_error, second_moment, w_error
from .solver import (
    SolverConfig,
    SolverStepError,
    StepRecord,
    Trajectory,
    free_energy,
    history_combination,
    interpolant,
    jko_step,
    solve,
)
from .study import (
    FORCINGS,
    ErrorRow,
    ErrorTable,
    ExperimentConfig,
    Forcing,
    McValidationReport,
    default_grid_size,
    emit,
    emit_validation,
    mc_validation,
    parse_csv,
    parse_json,
    run_convergence_study,
)

__all__ = [
    "__version__",
    "FractionalOrder",
    "L1WeightRow",
    "HistoryWeights",
    "l1_weights",
    "history_weights",
    "caputo_apply",
    "right_caputo_apply",
    "initial_trace_term",
    "SpatialGrid",
    "DiscreteDensity",
    "Potential",
    "CostMatrix",
    "build_grid",
    "density_from_function",
    "potential_from_function",
    "cost_matrix",
    "midpoint_integral",
    "GibbsKernel",
    "ScalingState",
    "ConvergenceError",
    "gibbs_kernel",
    "sinkhorn_distance",
    "kl_prox",
    "dykstra_jko_step",
    "plan_cost",
    "SolverConfig",
    "StepRecord",
    "Trajectory",
    "SolverStepError",
    "free_energy",
    "history_combination",
    "jko_step",
    "solve",
    "interpolant",
    "McConfig",
    "stable_samples",
    "stable_increment",
    "first_passage_time",
    "first_passage_times",
    "simulate_endpoint",
    "simulate_endpoints",
    "density_histogram",
    "l1_error",
    "l2_error",
    "w_error",
    "fit_rate",
    "second_moment",
    "Forcing",
    "FORCINGS",
    "ExperimentConfig",
    "ErrorRow",
    "ErrorTable",
    "McValidationReport",
    "run_convergence_study",
    "mc_validation",
    "emit",
    "emit_validation",
    "parse_csv",
    "parse_json",
    "default_grid_size",
]
