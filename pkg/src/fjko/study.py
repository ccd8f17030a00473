"""Convergence studies and the stochastic cross-validation harness.

Runs the solver over an (alpha, N) ladder against a fine reference, fits
rates, and emits tables as CSV / JSON / pretty text. All output is
byte-deterministic for a fixed configuration and seed.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._version import __version__
from .caputo import FractionalOrder
from .grids import (
    DiscreteDensity,
    Potential,
    SpatialGrid,
    build_grid,
    potential_from_function,
)
from .mc import McConfig, density_histogram, simulate_endpoints, stable_samples
from .metrics import fit_rate, l1_error, l2_error, w_error
from .solver import SolverConfig, free_energy, solve

__all__ = [
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

METRICS = ("l1", "l2", "w")


@dataclass(frozen=True)
class Forcing:
    """A named forcing: midpoint samples for the solver, gradient for the paths."""

    name: str
    dim: int
    fn: Callable[..., np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]


FORCINGS: dict[str, Forcing] = {
    "linear": Forcing("linear", 1, lambda x: x, lambda x: np.ones_like(x)),
    "half-square": Forcing("half-square", 1, lambda x: 0.5 * x * x, lambda x: x),
    "sum-2d": Forcing("sum-2d", 2, lambda x1, x2: x1 + x2, lambda x: np.ones_like(x)),
}


def default_grid_size(dim: int) -> int:
    """Desk-scale defaults keeping spatial error below the temporal one."""
    return 128 if dim == 1 else 32


def resolve_forcing(name: str) -> Forcing:
    try:
        return FORCINGS[name]
    except KeyError:
        raise ValueError(f"unknown forcing {name!r}; choose from {sorted(FORCINGS)}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence study: an N ladder per alpha against a fine reference.

    gamma_eval = None evaluates the transport error with the same 1/N rule
    the solver uses for each row; a float pins it instead.
    """

    forcing: str
    alphas: tuple[float, ...]
    n_values: tuple[int, ...]
    n_ref: int
    m: int | None = None
    horizon: float = 1.0
    gamma_eval: float | None = None
    eps: float | None = None
    max_iter: int = 5000
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        resolve_forcing(self.forcing)
        if not self.alphas:
            raise ValueError("need at least one alpha")
        if not self.n_values:
            raise ValueError("need at least one step count")
        if self.n_ref < max(self.n_values):
            raise ValueError(
                f"reference steps {self.n_ref} must be >= the coarsest ladder value "
                f"{max(self.n_values)}"
            )
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")

    @property
    def grid_size(self) -> int:
        return self.m if self.m is not None else default_grid_size(resolve_forcing(self.forcing).dim)


@dataclass(frozen=True)
class ErrorRow:
    alpha: float
    n: int
    e_l1: float
    e_l2: float
    e_w: float


@dataclass(frozen=True)
class ErrorTable:
    rows: tuple[ErrorRow, ...]
    rates: dict[tuple[float, str], float | None]
    metadata: dict[str, str] = field(default_factory=dict)

    def rate(self, alpha: float, metric: str) -> float | None:
        return self.rates[(alpha, metric)]


def _build_problem(config: ExperimentConfig) -> tuple[SpatialGrid, Potential]:
    forcing = resolve_forcing(config.forcing)
    grid = build_grid(forcing.dim, config.grid_size)
    return grid, potential_from_function(grid, forcing.fn)


def _solve_task(cfg: SolverConfig) -> tuple[np.ndarray, dict[str, float]]:
    """Worker body: run one solve, return the final density and step diagnostics."""
    trajectory = solve(cfg)
    eps = cfg.eps_value
    max_mass = 0.0
    max_energy = -np.inf
    max_objective = -np.inf
    iterations = 0
    fe0 = free_energy(trajectory.densities[0], cfg.potential)
    for rec in trajectory.steps:
        max_mass = max(max_mass, rec.mass_error)
        max_energy = max(max_energy, rec.free_energy - fe0 - rec.level * 10.0 * eps)
        surrogate = rec.plan_cost / cfg.tau_prime + rec.free_energy
        max_objective = max(max_objective, surrogate - rec.history_free_energy - 10.0 * eps)
        iterations += rec.iterations
    diag = {
        "max_mass_error": max_mass,
        "max_energy_excess": float(max_energy),
        "max_objective_excess": float(max_objective),
        "iterations": float(iterations),
    }
    return trajectory.final.p, diag


def _cell_config(config: ExperimentConfig, grid, potential, alpha: float, n: int) -> SolverConfig:
    return SolverConfig(
        order=FractionalOrder(alpha),
        horizon=config.horizon,
        steps=n,
        grid=grid,
        potential=potential,
        eps=config.eps,
        max_iter=config.max_iter,
    )


def run_convergence_study(config: ExperimentConfig) -> ErrorTable:
    """Solve the reference and every ladder cell, compare final densities.

    Cells run in a process pool when workers > 1; assembly is ordered, so
    the table is identical for any worker count.
    """
    grid, potential = _build_problem(config)
    keys = []
    tasks = []
    for alpha in config.alphas:
        for n in (config.n_ref, *config.n_values):
            key = (alpha, n)
            if key in keys:
                continue
            keys.append(key)
            tasks.append(_cell_config(config, grid, potential, alpha, n))

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_solve_task, tasks))
    else:
        outputs = [_solve_task(t) for t in tasks]
    finals = {key: out[0] for key, out in zip(keys, outputs)}
    diags = [out[1] for out in outputs]

    rows = []
    rates: dict[tuple[float, str], float | None] = {}
    for alpha in config.alphas:
        ref = DiscreteDensity(grid, finals[(alpha, config.n_ref)])
        errs = {metric: [] for metric in METRICS}
        for n in config.n_values:
            p = DiscreteDensity(grid, finals[(alpha, n)])
            gamma_row = config.gamma_eval if config.gamma_eval is not None else 1.0 / n
            e1 = l1_error(p, ref)
            e2 = l2_error(p, ref, grid)
            ew = w_error(p, ref, grid, gamma_row)
            rows.append(ErrorRow(alpha, n, e1, e2, ew))
            errs["l1"].append(e1)
            errs["l2"].append(e2)
            errs["w"].append(ew)
        for metric in METRICS:
            rates[(alpha, metric)] = fit_rate(errs[metric], config.n_values)

    metadata = {
        "generator": f"fjko {__version__}",
        "forcing": config.forcing,
        "dim": str(resolve_forcing(config.forcing).dim),
        "m": str(config.grid_size),
        "horizon": repr(float(config.horizon)),
        "n_ref": str(config.n_ref),
        "gamma_rule": "1/N",
        "gamma_eval": "1/N" if config.gamma_eval is None else repr(float(config.gamma_eval)),
        "eps": "1e-8*cells" if config.eps is None else repr(float(config.eps)),
        "max_iter": str(config.max_iter),
        "w_convention": "sqrt-plan-cost-without-entropy",
        "seed": str(config.seed),
        "max_mass_error": repr(max(d["max_mass_error"] for d in diags)),
        "max_energy_excess": repr(max(d["max_energy_excess"] for d in diags)),
        "max_objective_excess": repr(max(d["max_objective_excess"] for d in diags)),
        "total_dykstra_iterations": str(int(sum(d["iterations"] for d in diags))),
    }
    return ErrorTable(tuple(rows), rates, metadata)


def _format_float(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def emit(table: ErrorTable, fmt: str = "csv") -> str:
    """Render a table; stable column order alpha, N, e_l1, e_l2, e_w, rate_l1, rate_l2, rate_w."""
    if fmt == "csv":
        lines = [f"# {k}={v}" for k, v in table.metadata.items()]
        lines.append("alpha,N,e_l1,e_l2,e_w,rate_l1,rate_l2,rate_w")
        for row in table.rows:
            cells = [repr(row.alpha), str(row.n)]
            cells += [_format_float(v) for v in (row.e_l1, row.e_l2, row.e_w)]
            cells += [_format_float(table.rates[(row.alpha, metric)]) for metric in METRICS]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "metadata": table.metadata,
            "rows": [
                {"alpha": r.alpha, "n": r.n, "e_l1": r.e_l1, "e_l2": r.e_l2, "e_w": r.e_w}
                for r in table.rows
            ],
            "rates": [
                {"alpha": alpha, "metric": metric, "rate": rate}
                for (alpha, metric), rate in table.rates.items()
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "pretty":
        header = f"{'alpha':>6} {'N':>6} {'L1':>12} {'L2':>12} {'W':>12} {'r_L1':>6} {'r_L2':>6} {'r_W':>6}"
        lines = [f"{k} = {v}" for k, v in table.metadata.items()] + [header, "-" * len(header)]
        for row in table.rows:
            r = [table.rates[(row.alpha, metric)] for metric in METRICS]
            rtxt = [f"{x:6.2f}" if x is not None else "   -  " for x in r]
            lines.append(
                f"{row.alpha:>6.2f} {row.n:>6d} {row.e_l1:>12.4e} {row.e_l2:>12.4e} "
                f"{row.e_w:>12.4e} {rtxt[0]} {rtxt[1]} {rtxt[2]}"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv(text: str) -> ErrorTable:
    """Inverse of emit(..., 'csv')."""
    metadata: dict[str, str] = {}
    rows = []
    rates: dict[tuple[float, str], float | None] = {}
    header_seen = False
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            metadata[key.strip()] = value
            continue
        if not header_seen:
            header_seen = True
            continue
        cells = line.split(",")
        alpha = float(cells[0])
        row = ErrorRow(alpha, int(cells[1]), float(cells[2]), float(cells[3]), float(cells[4]))
        rows.append(row)
        for metric, cell in zip(METRICS, cells[5:8]):
            rates[(alpha, metric)] = float(cell) if cell else None
    return ErrorTable(tuple(rows), rates, metadata)


def parse_json(text: str) -> ErrorTable:
    """Inverse of emit(..., 'json')."""
    doc = json.loads(text)
    rows = tuple(
        ErrorRow(r["alpha"], r["n"], r["e_l1"], r["e_l2"], r["e_w"]) for r in doc["rows"]
    )
    rates = {(r["alpha"], r["metric"]): r["rate"] for r in doc["rates"]}
    return ErrorTable(rows, rates, dict(doc["metadata"]))


@dataclass(frozen=True)
class McCheck:
    name: str
    value: float
    target: float
    deviation: float


@dataclass(frozen=True)
class McValidationReport:
    checks: tuple[McCheck, ...]
    metadata: dict[str, str]


def mc_validation(
    forcing: str = "linear",
    alpha: float = 0.8,
    horizon: float = 1.0,
    n_paths: int = 200_000,
    m: int = 32,
    pde_steps: int = 320,
    seed: int = 0,
    ds: float = 1e-3,
    dt: float = 1e-3,
    laplace_alpha: float = 0.7,
    laplace_samples: int = 1_000_000,
    laplace_ks: tuple[float, ...] = (0.5, 1.0, 2.0),
    eps: float | None = None,
    max_iter: int = 5000,
) -> McValidationReport:
    """Subordinator transform check plus endpoint histogram against the solver."""
    fc = resolve_forcing(forcing)
    checks = []

    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    samples = stable_samples(laplace_alpha, rng, laplace_samples)
    for k in laplace_ks:
        est = float(np.exp(-k * samples).mean())
        target = float(np.exp(-(k**laplace_alpha)))
        checks.append(McCheck(f"laplace_k_{k:g}", est, target, abs(est - target) / target))

    grid = build_grid(fc.dim, m)
    potential = potential_from_function(grid, fc.fn)
    cfg = SolverConfig(
        order=FractionalOrder(alpha),
        horizon=horizon,
        steps=pde_steps,
        grid=grid,
        potential=potential,
        eps=eps,
        max_iter=max_iter,
    )
    pde_final = solve(cfg).final

    mc_cfg = McConfig(
        alpha=alpha,
        horizon=horizon,
        n_paths=n_paths,
        seed=seed,
        grid=grid,
        grad_potential=fc.grad,
        ds=ds,
        dt=dt,
    )
    hist = density_histogram(simulate_endpoints(mc_cfg), grid)
    e1 = l1_error(hist, pde_final)
    checks.append(McCheck("endpoint_l1_vs_pde", e1, 0.0, e1))

    metadata = {
        "generator": f"fjko {__version__}",
        "forcing": forcing,
        "alpha": repr(float(alpha)),
        "horizon": repr(float(horizon)),
        "n_paths": str(n_paths),
        "m": str(m),
        "pde_steps": str(pde_steps),
        "ds": repr(float(ds)),
        "dt": repr(float(dt)),
        "laplace_alpha": repr(float(laplace_alpha)),
        "laplace_samples": str(laplace_samples),
        "seed": str(seed),
    }
    return McValidationReport(tuple(checks), metadata)


def emit_validation(report: McValidationReport, fmt: str = "csv") -> str:
    """Render a validation report."""
    if fmt == "csv":
        lines = [f"# {k}={v}" for k, v in report.metadata.items()]
        lines.append("check,value,target,deviation")
        for c in report.checks:
            lines.append(f"{c.name},{repr(c.value)},{repr(c.target)},{repr(c.deviation)}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "metadata": report.metadata,
            "checks": [
                {"check": c.name, "value": c.value, "target": c.target, "deviation": c.deviation}
                for c in report.checks
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "pretty":
        width = max(len(c.name) for c in report.checks)
        lines = [f"{k} = {v}" for k, v in report.metadata.items()]
        for c in report.checks:
            lines.append(f"{c.name:<{width}}  value={c.value:.6g} target={c.target:.6g} dev={c.deviation:.3g}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
