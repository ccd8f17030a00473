"""Error metrics between cell densities and convergence-rate fitting.

Densities store probabilities with the cell volume absorbed, so the L1
distance is a plain sum while L2 reintroduces the mesh factor.
"""
from __future__ import annotations

import numpy as np

from .entropic import gibbs_kernel, sinkhorn_distance
from .grids import DiscreteDensity, SpatialGrid, cost_matrix

__all__ = ["l1_error", "l2_error", "w_error", "fit_rate", "second_moment"]


def _values(p: DiscreteDensity | np.ndarray) -> np.ndarray:
    return p.p if isinstance(p, DiscreteDensity) else np.asarray(p, dtype=float)


def l1_error(p: DiscreteDensity | np.ndarray, q: DiscreteDensity | np.ndarray) -> float:
    """Function-space L1 distance, sum |p_i - q_i|."""
    return float(np.abs(_values(p) - _values(q)).sum())


def l2_error(
    p: DiscreteDensity | np.ndarray, q: DiscreteDensity | np.ndarray, grid: SpatialGrid
) -> float:
    """Function-space L2 distance, sqrt(sum (p_i - q_i)^2 / h^dim)."""
    d = _values(p) - _values(q)
    return float(np.sqrt((d @ d) / grid.cell_volume))


def w_error(
    p: DiscreteDensity,
    q: DiscreteDensity,
    grid: SpatialGrid,
    gamma_eval: float = 1e-3,
    eps_marginal: float | None = None,
    max_iter: int = 100_000,
) -> float:
    """Square root of the entropic transport cost between p and q.

    The reported number is sqrt(<C, pi*>) at relaxation gamma_eval; the
    entropy term is excluded, so identical inputs carry the entropic blur
    of order sqrt(dim * gamma_eval / 2) rather than zero.
    """
    kernel = gibbs_kernel(cost_matrix(grid), gamma_eval, "auto")
    cost, _ = sinkhorn_distance(p, q, kernel, eps_marginal, max_iter)
    return float(np.sqrt(max(cost, 0.0)))


def fit_rate(errors, n_values) -> float | None:
    """Least-squares slope of log(error) against log(tau), tau proportional to 1/N.

    Returns None when fewer than two points are supplied or an error is not
    positive (no finite rate exists).
    """
    e = np.asarray(errors, dtype=float)
    n = np.asarray(n_values, dtype=float)
    if e.size != n.size:
        raise ValueError("errors and step counts differ in length")
    if e.size < 2:
        return None
    if np.any(e <= 0.0) or np.any(n <= 0.0):
        return None
    slope = np.polyfit(np.log(1.0 / n), np.log(e), 1)[0]
    return float(slope)


def second_moment(p: DiscreteDensity, grid: SpatialGrid) -> float:
    """sum_i p_i |x_i|^2 over cell midpoints."""
    x = grid.midpoints()
    return float(p.p @ (x * x).sum(axis=1))
