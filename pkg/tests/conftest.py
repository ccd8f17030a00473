"""Shared independent oracles used across the test suite.

Everything here minimises or evaluates the relevant objectives by routes
that share no code with the scaling iterations under test.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import LinearConstraint, minimize


def coupling_objective(pi, cost, gamma, tau_prime, psi):
    """<C,pi> + gamma <pi, log pi - 1> + tau' <p, log p - 1 + psi>, p = pi 1."""
    pi = np.asarray(pi, dtype=float)
    p = pi.sum(axis=1)
    ent = np.where(pi > 0, pi * (np.log(np.where(pi > 0, pi, 1.0)) - 1.0), 0.0).sum()
    fe = np.where(p > 0, p * (np.log(np.where(p > 0, p, 1.0)) - 1.0 + psi), 0.0).sum()
    return float((cost * pi).sum() + gamma * ent + tau_prime * fe)


def _coupling_gradient(pi, cost, gamma, tau_prime, psi):
    p = pi.sum(axis=1)
    return cost + gamma * np.log(pi) + tau_prime * (np.log(p) + psi)[:, None]


def minimize_coupling_pg(cost, gamma, tau_prime, psi, q, iters=20000, tol=1e-15):
    """Projected gradient in the simplex geometry for the proximal-step objective.

    Multiplicative (exponentiated) gradient steps followed by the exact
    projection onto the fixed column sums; the free first marginal is left
    to the descent. Step size 1/(gamma + tau') matches the relative
    smoothness of the objective.
    """
    m = q.size
    pi = np.outer(np.full(m, 1.0 / m), q)
    eta = 1.0 / (gamma + tau_prime)
    f_prev = coupling_objective(pi, cost, gamma, tau_prime, psi)
    for _ in range(iters):
        g = _coupling_gradient(pi, cost, gamma, tau_prime, psi)
        pi = pi * np.exp(-eta * g)
        pi *= (q / pi.sum(axis=0))[None, :]
        f = coupling_objective(pi, cost, gamma, tau_prime, psi)
        if abs(f - f_prev) < tol:
            break
        f_prev = f
    return pi


def minimize_coupling_trust_constr(cost, gamma, tau_prime, psi, q):
    """Library cross-check for the proximal-step objective (column sums fixed)."""
    m = q.size
    a = np.zeros((m, m * m))
    for j in range(m):
        a[j, j::m] = 1.0
    res = minimize(
        lambda z: coupling_objective(z.reshape(m, m), cost, gamma, tau_prime, psi),
        np.outer(np.full(m, 1.0 / m), q).ravel(),
        jac=lambda z: _coupling_gradient(
            np.maximum(z.reshape(m, m), 1e-300), cost, gamma, tau_prime, psi
        ).ravel(),
        method="trust-constr",
        constraints=LinearConstraint(a, q, q),
        bounds=[(1e-15, None)] * (m * m),
        options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 10000},
    )
    return res.x.reshape(m, m)


def entropic_transport_bruteforce(p, q, cost, gamma):
    """Minimise <C,pi> + gamma <pi, log pi - 1> over the coupling polytope of
    (p, q) with a library optimiser; returns (plan, transport cost part)."""
    m = p.size

    def obj(z):
        pi = z.reshape(m, m)
        ent = np.where(pi > 0, pi * (np.log(np.where(pi > 0, pi, 1.0)) - 1.0), 0.0).sum()
        return float((cost * pi).sum() + gamma * ent)

    def jac(z):
        pi = np.maximum(z.reshape(m, m), 1e-300)
        return (cost + gamma * np.log(pi)).ravel()

    rows = np.zeros((m, m * m))
    cols = np.zeros((m, m * m))
    for i in range(m):
        rows[i, i * m : (i + 1) * m] = 1.0
        cols[i, i::m] = 1.0
    res = minimize(
        obj,
        np.outer(p, q).ravel(),
        jac=jac,
        method="trust-constr",
        constraints=[LinearConstraint(rows, p, p), LinearConstraint(cols, q, q)],
        bounds=[(1e-15, None)] * (m * m),
        options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 10000},
    )
    pi = res.x.reshape(m, m)
    return pi, float((cost * pi).sum())


def exact_w2_distance_1d(p, q, x):
    """Exact 1D quadratic-cost transport distance between atomic densities.

    Quantile coupling: merge the two cumulative distributions and pay
    |x_i - x_j|^2 for each shared mass sliver. Returns the distance (not its
    square).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    i = j = 0
    fp = p[0]
    fq = q[0]
    level = 0.0
    cost = 0.0
    while True:
        nxt = min(fp, fq)
        cost += (nxt - level) * (x[i] - x[j]) ** 2
        level = nxt
        if level >= 1.0 - 1e-15:
            break
        if fp <= fq:
            i += 1
            fp += p[i]
        else:
            j += 1
            fq += q[j]
    return float(np.sqrt(cost))
