"""L1 quadrature for the Caputo derivative.

Closed-form convolution weights b_0..b_n per time level, the positive
convex "memory" weights built from them, and the discrete left/right
fractional difference operators. At order alpha = 1 everything degenerates
exactly to the backward Euler difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "FractionalOrder",
    "L1WeightRow",
    "HistoryWeights",
    "l1_weights",
    "history_weights",
    "caputo_apply",
    "right_caputo_apply",
    "initial_trace_term",
]

# Above this index the naive three-term weight formula loses ~i^2 * eps
# relative accuracy to cancellation; switch to the expm1/log1p rewriting.
_STABLE_INDEX = 1 << 20


@dataclass(frozen=True)
class FractionalOrder:
    """Time-fractional order alpha in (0, 1]; alpha = 1 is the classical case."""

    alpha: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0) or not math.isfinite(self.alpha):
            raise ValueError(f"order must lie in (0, 1], got {self.alpha!r}")

    @property
    def c_alpha(self) -> float:
        """Normalisation constant 1 / Gamma(2 - alpha); equals 1 at alpha = 1."""
        return 1.0 / math.gamma(2.0 - self.alpha)


@dataclass(frozen=True)
class L1WeightRow:
    """Quadrature weights b_0..b_n of one time level.

    b_0 = 1, all later weights are negative, and the row sums to zero.
    """

    order: FractionalOrder
    n: int
    weights: np.ndarray

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class HistoryWeights:
    """Convex weights w_i = -b_{n-i} on the past states p^0..p^{n-1}.

    All positive, summing to one. w_0 multiplies the oldest state. At
    alpha = 1 only w_{n-1} = 1 survives (no memory).
    """

    order: FractionalOrder
    n: int
    weights: np.ndarray

    def __len__(self) -> int:
        return self.weights.size


def _stable_interior(i: np.ndarray, p: float) -> np.ndarray:
    # (i+1)^p + (i-1)^p - 2 i^p = i^p * (expm1(p*log1p(1/i)) + expm1(p*log1p(-1/i)))
    inv = 1.0 / i
    return i**p * (np.expm1(p * np.log1p(inv)) + np.expm1(p * np.log1p(-inv)))


@lru_cache(maxsize=None)
def _weight_row(alpha: float, n: int) -> np.ndarray:
    """Raw weight array b_0..b_n, cached per (alpha, n); n = 0 gives (1,)."""
    b = np.empty(n + 1)
    b[0] = 1.0
    if n == 0:
        b.setflags(write=False)
        return b
    if alpha == 1.0:
        b[1:] = 0.0
        b[1] = -1.0
        b.setflags(write=False)
        return b
    p = 1.0 - alpha
    if n >= 2:
        i = np.arange(1, n, dtype=float)
        lo = i < _STABLE_INDEX
        b[1:n][lo] = (i[lo] + 1.0) ** p + (i[lo] - 1.0) ** p - 2.0 * i[lo] ** p
        if not lo.all():
            b[1:n][~lo] = _stable_interior(i[~lo], p)
    if n < _STABLE_INDEX:
        b[n] = (n - 1.0) ** p - float(n) ** p
    else:
        b[n] = float(n) ** p * np.expm1(p * np.log1p(-1.0 / n))
    b.setflags(write=False)
    return b


def l1_weights(order: FractionalOrder, n: int) -> L1WeightRow:
    """Weight row of time level n >= 1.

    b_0 = 1; interior weights follow the concave second difference of
    i |-> i^(1-alpha); the terminal weight is (n-1)^(1-alpha) - n^(1-alpha).
    """
    if n < 1:
        raise ValueError(f"time level must be >= 1, got {n}")
    return L1WeightRow(order, n, _weight_row(order.alpha, n))


def history_weights(order: FractionalOrder, n: int) -> HistoryWeights:
    """Convex combination weights for the memory term at level n >= 1."""
    if n < 1:
        raise ValueError(f"time level must be >= 1, got {n}")
    w = -_weight_row(order.alpha, n)[:0:-1]
    w.setflags(write=False)
    return HistoryWeights(order, n, w)


def caputo_apply(order: FractionalOrder, tau: float, samples: Sequence[float]) -> float:
    """Discrete left fractional derivative at the last sample.

    Given samples f(0), f(tau), ..., f(n*tau), returns
    C_alpha * tau^(-alpha) * sum_i b_{n-i} f^i.
    """
    phi = np.asarray(samples, dtype=float)
    n = phi.size - 1
    if n < 1:
        raise ValueError("need at least two samples")
    if tau <= 0.0:
        raise ValueError(f"time step must be positive, got {tau}")
    b = _weight_row(order.alpha, n)
    return order.c_alpha * tau ** (-order.alpha) * float(b[::-1] @ phi)


def right_caputo_apply(
    order: FractionalOrder, tau: float, samples: Sequence[float], n: int, n_total: int
) -> float:
    """Discrete right fractional derivative at level n of a grid with n_total steps.

    samples holds f(n*tau), ..., f(n_total*tau); returns
    C_alpha * tau^(-alpha) * sum_{j=n..N} b_{j-n} f^j with the weight row of
    length N - n. Equivalent to caputo_apply on the time-reversed samples.
    """
    if not 1 <= n <= n_total:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={n_total}")
    if tau <= 0.0:
        raise ValueError(f"time step must be positive, got {tau}")
    phi = np.asarray(samples, dtype=float)
    if phi.size != n_total - n + 1:
        raise ValueError(f"expected {n_total - n + 1} samples, got {phi.size}")
    b = _weight_row(order.alpha, n_total - n)
    return order.c_alpha * tau ** (-order.alpha) * float(b @ phi)


def _terminal_weights(alpha: float, n_steps: int) -> np.ndarray:
    """The diagonal sequence b_n^(n) for n = 1..n_steps."""
    if alpha == 1.0:
        out = np.zeros(n_steps)
        out[0] = -1.0
        return out
    p = 1.0 - alpha
    k = np.arange(0, n_steps + 1, dtype=float)
    return -np.diff(k**p)


def initial_trace_term(
    order: FractionalOrder, tau: float, n_steps: int, interval_values: Sequence[float]
) -> float:
    """Boundary functional of the initial value in the discrete pairing.

    interval_values are midpoint samples of the test function on the n_steps
    time subintervals; each interval integral is tau * value. Returns
    C_alpha * tau^(-alpha) * sum_n b_n^(n) * integral_n. For a constant test
    function this equals -C_alpha * T^(1-alpha) exactly.
    """
    if n_steps < 1:
        raise ValueError(f"need at least one interval, got {n_steps}")
    if tau <= 0.0:
        raise ValueError(f"time step must be positive, got {tau}")
    vals = np.asarray(interval_values, dtype=float)
    if vals.size != n_steps:
        raise ValueError(f"expected {n_steps} interval values, got {vals.size}")
    bnn = _terminal_weights(order.alpha, n_steps)
    return order.c_alpha * tau ** (-order.alpha) * float(bnn @ (tau * vals))
