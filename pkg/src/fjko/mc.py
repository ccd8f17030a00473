"""Monte-Carlo oracle for the time-changed diffusion.

Simulates Y(t) = X(S(t)): an overdamped Langevin path X reflected at the
domain walls, run on an operational clock S given by the first passage of
a one-sided stable subordinator. Endpoint histograms cross-validate the
deterministic solver.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import DiscreteDensity, SpatialGrid

__all__ = [
    "McConfig",
    "stable_samples",
    "stable_increment",
    "first_passage_time",
    "first_passage_times",
    "simulate_endpoint",
    "simulate_endpoints",
    "density_histogram",
]

_CHUNK = 65536


@dataclass(frozen=True)
class McConfig:
    """Parameters of one endpoint simulation.

    grad_potential maps an (n, dim) position array to drift gradients of the
    same shape (or (n,) in 1D). ds is the subordinator grid, dt the inner
    diffusion step. Paths are simulated in fixed-size chunks, each chunk on
    its own child stream of the seed, so a fixed seed reproduces the
    histogram exactly.
    """

    alpha: float
    horizon: float
    n_paths: int
    seed: int
    grid: SpatialGrid
    grad_potential: Callable[[np.ndarray], np.ndarray]
    ds: float = 1e-3
    dt: float = 1e-3
    initial_sampler: Callable[[np.random.Generator, int, int], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"stable index must lie in (0, 1), got {self.alpha}")
        if self.ds <= 0.0 or self.dt <= 0.0:
            raise ValueError("ds and dt must be positive")
        if self.n_paths < 1:
            raise ValueError(f"path count must be >= 1, got {self.n_paths}")
        if self.horizon < 0.0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")


def stable_samples(alpha: float, rng: np.random.Generator, size) -> np.ndarray:
    """One-sided standard stable samples with E[e^(-k S)] = e^(-k^alpha).

    Uniform-exponential pair construction: V ~ U(0, pi), E ~ Exp(1),
    S = sin(alpha V) / sin(V)^(1/alpha) * (sin((1-alpha) V) / E)^((1-alpha)/alpha).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"stable index must lie in (0, 1), got {alpha}")
    v = rng.uniform(0.0, np.pi, size)
    e = rng.exponential(1.0, size)
    return (
        np.sin(alpha * v)
        / np.sin(v) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * v) / e) ** ((1.0 - alpha) / alpha)
    )


def stable_increment(alpha: float, ds: float, rng: np.random.Generator) -> float:
    """A sample of the subordinator increment over operational time ds."""
    if ds <= 0.0:
        raise ValueError(f"increment span must be positive, got {ds}")
    return float(ds ** (1.0 / alpha) * stable_samples(alpha, rng, ()))


def first_passage_time(alpha: float, t: float, ds: float, rng: np.random.Generator) -> float:
    """Operational time at which the running subordinator first exceeds t.

    Accumulates increments on the ds grid and interpolates linearly inside
    the crossing step; t = 0 gives 0.
    """
    if t < 0.0:
        raise ValueError(f"physical time must be >= 0, got {t}")
    total = 0.0
    k = 0
    while True:
        k += 1
        inc = stable_increment(alpha, ds, rng)
        if total + inc > t:
            frac = (t - total) / inc
            return (k - 1 + frac) * ds
        total += inc


def first_passage_times(
    alpha: float, t: float, ds: float, rng: np.random.Generator, n: int
) -> np.ndarray:
    """Vectorised first passage: n independent samples of the inverse clock at t."""
    if t < 0.0:
        raise ValueError(f"physical time must be >= 0, got {t}")
    out = np.zeros(n)
    if t == 0.0:
        return out
    total = np.zeros(n)
    active = np.arange(n)
    scale = ds ** (1.0 / alpha)
    k = 0
    while active.size:
        k += 1
        inc = scale * stable_samples(alpha, rng, active.size)
        new_total = total[active] + inc
        crossed = new_total > t
        hit = active[crossed]
        frac = (t - total[hit]) / inc[crossed]
        out[hit] = (k - 1 + frac) * ds
        total[active] = new_total
        active = active[~crossed]
    return out


def _reflect_unit(x: np.ndarray) -> np.ndarray:
    """Fold positions back into [0, 1] by reflection at both walls."""
    y = np.remainder(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


def _drift(config: McConfig, x: np.ndarray) -> np.ndarray:
    g = np.asarray(config.grad_potential(x), dtype=float)
    return np.broadcast_to(g, x.shape)


def _initial_positions(config: McConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    if config.initial_sampler is not None:
        x0 = np.asarray(config.initial_sampler(rng, n, config.grid.dim), dtype=float)
        return x0.reshape(n, config.grid.dim)
    return rng.uniform(0.0, 1.0, (n, config.grid.dim))


def _endpoint_chunk(config: McConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    s = first_passage_times(config.alpha, config.horizon, config.ds, rng, n)
    x = _initial_positions(config, rng, n)
    remaining = s.copy()
    active = np.arange(n)
    dt = config.dt
    while active.size:
        step = np.minimum(remaining[active], dt)
        z = rng.standard_normal((active.size, config.grid.dim))
        xa = x[active]
        xa = xa - _drift(config, xa) * step[:, None] + np.sqrt(2.0 * step)[:, None] * z
        x[active] = _reflect_unit(xa)
        remaining[active] -= step
        active = active[remaining[active] > 0.0]
    return x


def simulate_endpoint(config: McConfig, rng: np.random.Generator) -> np.ndarray:
    """One path: reflected Euler-Maruyama over [0, S(horizon)], endpoint in the domain."""
    return _endpoint_chunk(config, rng, 1)[0]


def simulate_endpoints(config: McConfig) -> np.ndarray:
    """All paths as an (n_paths, dim) array, reproducible from the seed."""
    children = np.random.SeedSequence(config.seed).spawn(
        (config.n_paths + _CHUNK - 1) // _CHUNK
    )
    chunks = []
    done = 0
    for child in children:
        n = min(_CHUNK, config.n_paths - done)
        chunks.append(_endpoint_chunk(config, np.random.default_rng(child), n))
        done += n
    return np.concatenate(chunks, axis=0)


def density_histogram(positions: np.ndarray, grid: SpatialGrid) -> DiscreteDensity:
    """Cell counts normalised to the simplex."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos[:, None]
    if pos.shape[0] == 0:
        raise ValueError("no positions to bin")
    if pos.shape[1] != grid.dim:
        raise ValueError(f"positions have dimension {pos.shape[1]}, grid has {grid.dim}")
    if pos.min() < 0.0 or pos.max() > 1.0:
        raise ValueError("positions must lie in the closed unit domain")
    idx = np.minimum((pos * grid.m).astype(np.int64), grid.m - 1)
    flat = idx[:, 0]
    for d in range(1, grid.dim):
        flat = flat * grid.m + idx[:, d]
    counts = np.bincount(flat, minlength=grid.n_cells).astype(float)
    return DiscreteDensity(grid, counts / counts.sum())
