"""Memory-weighted JKO time stepping.

Each level n forms the convex history combination of all past densities
with the L1 memory weights and advances it by one entropic proximal step.
At order alpha = 1 the combination collapses to the previous iterate and
the classical JKO scheme is recovered exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .caputo import FractionalOrder, history_weights
from .entropic import ConvergenceError, GibbsKernel, dykstra_jko_step, gibbs_kernel, plan_cost
from .grids import DiscreteDensity, Potential, SpatialGrid, cost_matrix

__all__ = [
    "SolverConfig",
    "StepRecord",
    "Trajectory",
    "SolverStepError",
    "free_energy",
    "history_combination",
    "jko_step",
    "solve",
    "interpolant",
]


class SolverStepError(RuntimeError):
    """A proximal step failed; carries the failing time level."""

    def __init__(self, level: int, cause: ConvergenceError):
        super().__init__(f"step {level} failed: {cause}")
        self.level = level
        self.cause = cause


@dataclass(frozen=True)
class SolverConfig:
    """Everything one solve needs.

    gamma defaults to 1/steps (the relaxation rule used throughout the
    studies); eps defaults to 1e-8 per cell; the initial density defaults
    to uniform.
    """

    order: FractionalOrder
    horizon: float
    steps: int
    grid: SpatialGrid
    potential: Potential
    gamma: float | None = None
    eps: float | None = None
    max_iter: int = 5000
    representation: str = "auto"
    initial: DiscreteDensity | None = None

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise ValueError(f"step count must be >= 1, got {self.steps}")
        if self.gamma is not None and self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.potential.grid != self.grid:
            raise ValueError("potential lives on a different grid")
        if self.initial is not None and self.initial.grid != self.grid:
            raise ValueError("initial density lives on a different grid")

    @property
    def tau(self) -> float:
        return self.horizon / self.steps

    @property
    def gamma_value(self) -> float:
        return self.gamma if self.gamma is not None else 1.0 / self.steps

    @property
    def eps_value(self) -> float:
        return self.eps if self.eps is not None else 1e-8 * self.grid.n_cells

    @property
    def tau_prime(self) -> float:
        """Proximal weight 2 tau^alpha / C_alpha of one step."""
        return 2.0 * self.tau**self.order.alpha / self.order.c_alpha

    def initial_density(self) -> DiscreteDensity:
        if self.initial is not None:
            return self.initial
        n = self.grid.n_cells
        return DiscreteDensity(self.grid, np.full(n, 1.0 / n))

    def build_kernel(self) -> GibbsKernel:
        return gibbs_kernel(cost_matrix(self.grid), self.gamma_value, self.representation)


@dataclass(frozen=True)
class StepRecord:
    """Per-level diagnostics collected during a solve."""

    level: int
    iterations: int
    violation: float
    mass_error: float
    free_energy: float
    history_free_energy: float
    plan_cost: float


@dataclass(frozen=True)
class Trajectory:
    """The densities p^0..p^N of one solve plus step diagnostics."""

    config: SolverConfig
    densities: tuple[DiscreteDensity, ...]
    steps: tuple[StepRecord, ...] = field(default=())

    @property
    def final(self) -> DiscreteDensity:
        return self.densities[-1]


def free_energy(p: DiscreteDensity | np.ndarray, psi: Potential | np.ndarray) -> float:
    """sum_i p_i (log p_i + psi_i) with 0 log 0 = 0."""
    pv = p.p if isinstance(p, DiscreteDensity) else np.asarray(p, dtype=float)
    psi_v = psi.values if isinstance(psi, Potential) else np.asarray(psi, dtype=float)
    ent = np.zeros_like(pv)
    np.log(pv, out=ent, where=pv > 0.0)
    return float(pv @ (ent + psi_v))


def history_combination(
    prefix: Sequence[DiscreteDensity], order: FractionalOrder, n: int
) -> DiscreteDensity:
    """Convex combination of p^0..p^(n-1) with the memory weights of level n.

    At alpha = 1 returns the previous iterate itself (bitwise, no blend).
    """
    if n < 1:
        raise ValueError(f"time level must be >= 1, got {n}")
    if len(prefix) < n:
        raise ValueError(f"need {n} past densities, got {len(prefix)}")
    if order.alpha == 1.0:
        return prefix[n - 1]
    w = history_weights(order, n).weights
    q = w @ np.stack([d.p for d in prefix[:n]])
    return DiscreteDensity(prefix[0].grid, q)


def jko_step(
    prefix: Sequence[DiscreteDensity],
    config: SolverConfig,
    kernel: GibbsKernel | None = None,
) -> tuple[DiscreteDensity, StepRecord]:
    """Advance by one level given the history p^0..p^(n-1)."""
    n = len(prefix)
    kernel = kernel if kernel is not None else config.build_kernel()
    q_bar = history_combination(prefix, config.order, n)
    try:
        density, state = dykstra_jko_step(
            q_bar, kernel, config.potential, config.tau_prime, config.eps_value, config.max_iter
        )
    except ConvergenceError as exc:
        raise SolverStepError(n, exc) from exc
    record = StepRecord(
        level=n,
        iterations=state.ell,
        violation=state.violation,
        mass_error=abs(float(density.p.sum()) - 1.0),
        free_energy=free_energy(density, config.potential),
        history_free_energy=free_energy(q_bar, config.potential),
        plan_cost=plan_cost(kernel, state),
    )
    return density, record


def solve(config: SolverConfig) -> Trajectory:
    """Run all steps of the scheme; deterministic given the config."""
    kernel = config.build_kernel()
    densities = [config.initial_density()]
    records = []
    for _ in range(config.steps):
        density, record = jko_step(densities, config, kernel)
        densities.append(density)
        records.append(record)
    return Trajectory(config, tuple(densities), tuple(records))


def interpolant(trajectory: Trajectory, t: float) -> DiscreteDensity:
    """Piecewise-constant-in-time lookup: p^n on ((n-1) tau, n tau], p^0 at 0."""
    cfg = trajectory.config
    if t < 0.0 or t > cfg.horizon * (1.0 + 1e-12):
        raise ValueError(f"time {t} outside [0, {cfg.horizon}]")
    n = int(math.ceil(t / cfg.tau - 1e-12))
    n = min(max(n, 0), cfg.steps)
    return trajectory.densities[n]
