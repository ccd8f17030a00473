"""Uniform cell grids on the unit interval/square with midpoint quadrature.

Cell states carry probabilities (the cell volume is absorbed), so densities
live on the probability simplex. Function-space norms are recovered with
explicit mesh factors in the metrics module.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SpatialGrid",
    "DiscreteDensity",
    "Potential",
    "CostMatrix",
    "build_grid",
    "density_from_function",
    "potential_from_function",
    "cost_matrix",
    "midpoint_integral",
]

_MASS_TOL = 1e-10


@dataclass(frozen=True)
class SpatialGrid:
    """dim-dimensional uniform grid of m cells per axis on (0, 1)^dim.

    Cells are indexed row-major in 2D: flat index i1 * m + i2.
    """

    dim: int
    m: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if self.m < 1:
            raise ValueError(f"cells per axis must be >= 1, got {self.m}")

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def n_cells(self) -> int:
        return self.m**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def axis_midpoints(self) -> np.ndarray:
        x = (np.arange(self.m) + 0.5) * self.h
        x.setflags(write=False)
        return x

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Per-axis midpoint coordinate of every cell, each of shape (n_cells,)."""
        x = self.axis_midpoints
        if self.dim == 1:
            return (x,)
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        return (x1.ravel(), x2.ravel())

    def midpoints(self) -> np.ndarray:
        """Cell midpoints as an (n_cells, dim) array."""
        return np.stack(self.coordinates(), axis=-1)


@dataclass(frozen=True)
class DiscreteDensity:
    """Nonnegative cell probabilities summing to one (cell volume absorbed)."""

    grid: SpatialGrid
    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} cell values, got shape {p.shape}")
        if not np.all(p >= 0.0):
            raise ValueError("cell probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > _MASS_TOL:
            raise ValueError(f"total mass {p.sum()!r} is not 1 within {_MASS_TOL}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def total_mass(self) -> float:
        return float(self.p.sum())

    def as_field(self) -> np.ndarray:
        """Probabilities reshaped to (m,) in 1D or (m, m) in 2D."""
        return self.p.reshape((self.grid.m,) * self.grid.dim)


@dataclass(frozen=True)
class Potential:
    """Midpoint samples of a nonnegative forcing, one value per cell."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} cell values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential values must be finite")
        if np.any(v < 0.0):
            raise ValueError("potential values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class CostMatrix:
    """Squared Euclidean distances between cell midpoints.

    Stored as per-axis factors; the full matrix separates as
    c = c_x (+) c_y in 2D and is only materialised on demand.
    """

    grid: SpatialGrid
    axis_costs: tuple[np.ndarray, ...]

    def full(self) -> np.ndarray:
        """Dense (n_cells, n_cells) cost. O(m^(2 dim)) memory; meant for
        1D use and small 2D cross-checks, the solver never calls it in 2D."""
        if self.grid.dim == 1:
            return self.axis_costs[0]
        cx, cy = self.axis_costs
        m = self.grid.m
        full = (cx[:, None, :, None] + cy[None, :, None, :]).reshape(m * m, m * m)
        full.setflags(write=False)
        return full

    @property
    def max_entry(self) -> float:
        return float(sum(c.max() for c in self.axis_costs))


def build_grid(dim: int, m: int) -> SpatialGrid:
    """Uniform grid of m cells per axis on the unit interval (dim=1) or square (dim=2)."""
    return SpatialGrid(dim, m)


def density_from_function(grid: SpatialGrid, fn: Callable[..., np.ndarray]) -> DiscreteDensity:
    """Sample fn at cell midpoints and normalise to unit mass.

    fn receives one coordinate array per axis and must be nonnegative with
    at least one positive midpoint value.
    """
    samples = np.asarray(fn(*grid.coordinates()), dtype=float)
    samples = np.broadcast_to(samples, (grid.n_cells,)).astype(float)
    if np.any(samples < 0.0):
        raise ValueError("initial datum is negative at a cell midpoint")
    total = samples.sum()
    if total <= 0.0:
        raise ValueError("initial datum vanishes at every cell midpoint")
    return DiscreteDensity(grid, samples / total)


def potential_from_function(grid: SpatialGrid, fn: Callable[..., np.ndarray]) -> Potential:
    """Sample a forcing at cell midpoints."""
    samples = np.asarray(fn(*grid.coordinates()), dtype=float)
    samples = np.broadcast_to(samples, (grid.n_cells,)).astype(float)
    return Potential(grid, samples)


def cost_matrix(grid: SpatialGrid) -> CostMatrix:
    """Pairwise squared distances |x_i - x_j|^2 between cell midpoints."""
    x = grid.axis_midpoints
    axis = (x[:, None] - x[None, :]) ** 2
    axis.setflags(write=False)
    return CostMatrix(grid, (axis,) * grid.dim)


def midpoint_integral(grid: SpatialGrid, values: np.ndarray) -> float:
    """Midpoint quadrature h^dim * sum of cell values."""
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.n_cells,):
        raise ValueError(f"expected {grid.n_cells} cell values, got shape {v.shape}")
    return grid.cell_volume * float(v.sum())
