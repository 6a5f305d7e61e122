"""The stacked 32-equation estimating function and its plug-in root.

Rows of ``Q`` follow the parameter layout in :mod:`mednnt.core`:
regression scores (7), controlled outcome contrasts (6), potential-mediator
means (4), indirect effects (3), direct effects (3) and the nine index
equations. Total-effect index rows use ``p_i + p_d`` so no separate total
effect parameters are needed.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy import optimize

from . import glm
from .core import (
    BETA, GAMMA, INDICES, MED, N_PARAMS, P_DIRECT, P_INDIRECT, XI,
    Dataset, ObservationRecord, ParameterVector, pack, unpack,
)
from .effects import group_contrasts, marginalize
from .links import LinkFamily, inv_link, inv_link_deriv

logger = logging.getLogger(__name__)

# (p slot feeding the index, second p slot for total-effect rows or None)
_INDEX_SOURCES = (
    (17, None), (18, None), (19, None),
    (20, None), (21, None), (22, None),
    (17, 20), (18, 21), (19, 22),
)

# controlled contrasts as ((a_hi, m_hi), (a_lo, m_lo)), in slot order 10, 01, 11
_CONTRASTS = (((1, 0), (0, 0)), ((0, 1), (0, 0)), ((1, 1), (0, 1)))


def _vec(theta) -> np.ndarray:
    if isinstance(theta, ParameterVector):
        return pack(theta)
    vec = np.asarray(theta, dtype=float)
    if vec.shape != (N_PARAMS,):
        raise ValueError(f"expected a {N_PARAMS}-vector, got shape {vec.shape}")
    return vec


def _g_residual(p: float, index: float) -> float:
    g = 1.0 / p if p > 0 else np.inf
    if np.isinf(g) and np.isinf(index):
        return 0.0
    return g - index


def finite_mask(theta) -> np.ndarray:
    """Coordinates that take part in the system: everything but infinite indices."""
    return np.isfinite(_vec(theta))


def q_matrix(data: Dataset, theta, family) -> np.ndarray:
    """Per-record estimating-function values, shape (n, 32)."""
    family = LinkFamily.parse(family)
    th = _vec(theta)
    beta, gamma = th[BETA], th[GAMMA]
    xi, med = th[XI], th[MED]
    p_i, p_d, idx = th[P_INDIRECT], th[P_DIRECT], th[INDICES]
    A, L = data.A, data.L
    gates = (1.0 - A, A)
    n = data.n
    Q = np.empty((n, N_PARAMS))

    Q[:, BETA] = glm.score_contributions(family, glm.outcome_spec(family).design(data), data.I, beta)
    Q[:, GAMMA] = glm.score_contributions(family, glm.mediator_spec(family).design(data), data.M, gamma)

    def xi_at(a, m):
        return inv_link(family, beta[0] + beta[1] * a + beta[2] * m + beta[3] * L)

    for k, (hi, lo) in enumerate(_CONTRASTS):
        diff = xi_at(*hi) - xi_at(*lo)
        for a in (0, 1):
            Q[:, 7 + 2 * k + a] = (diff - xi[2 * k + a]) * gates[a]

    for k, m_exposure in enumerate((1, 0)):
        eta = inv_link(family, gamma[0] + gamma[1] * m_exposure + gamma[2] * L)
        for a in (0, 1):
            Q[:, 13 + 2 * k + a] = (eta - med[2 * k + a]) * gates[a]

    for a in (0, 1):
        c10, c01, c11 = xi[a], xi[2 + a], xi[4 + a]
        m1, m0 = med[a], med[2 + a]
        Q[:, 17 + a] = (p_i[a] - (m1 - m0) * c01) * gates[a]
        Q[:, 20 + a] = (p_d[a] - (c10 * (1.0 - m1) + c11 * m1)) * gates[a]
    Q[:, 19] = p_i[0] * gates[0] + p_i[1] * gates[1] - p_i[2]
    Q[:, 22] = p_d[0] * gates[0] + p_d[1] * gates[1] - p_d[2]

    for r, (s1, s2) in enumerate(_INDEX_SOURCES):
        p = th[s1] + (th[s2] if s2 is not None else 0.0)
        Q[:, 23 + r] = _g_residual(p, idx[r])
    return Q


def q_function(record: ObservationRecord, theta, family) -> np.ndarray:
    """Estimating-function value for a single record."""
    return q_matrix(Dataset.from_records([record]), theta, family)[0]


def summed_q(data: Dataset, theta, family) -> np.ndarray:
    return q_matrix(data, theta, family).sum(axis=0)


def residual_norm(data: Dataset, theta, family) -> float:
    """Sup-norm of the summed estimating equations over the finite coordinates."""
    mask = finite_mask(theta)
    return float(np.max(np.abs(summed_q(data, theta, family)[mask])))


def mean_jacobian(data: Dataset, theta, family) -> np.ndarray:
    """Analytic ``mean_j dQ_j / dtheta`` (32 x 32).

    Rows/columns of infinite indices are left as computed at an infinite
    value (zeros); callers drop them via :func:`finite_mask`.
    """
    family = LinkFamily.parse(family)
    th = _vec(theta)
    beta, gamma = th[BETA], th[GAMMA]
    xi, med = th[XI], th[MED]
    A, L = data.A, data.L
    n = data.n
    gates = (1.0 - A, A)
    gbar = (float(np.mean(gates[0])), float(np.mean(gates[1])))
    J = np.zeros((N_PARAMS, N_PARAMS))

    for rows, spec, y, coef in ((BETA, glm.outcome_spec(family), data.I, beta),
                                (GAMMA, glm.mediator_spec(family), data.M, gamma)):
        X = spec.design(data)
        slope = glm.score_slope(family, X @ coef, y)
        J[rows, rows] = X.T @ (X * slope[:, None]) / n

    def dxi(a, m):
        d = inv_link_deriv(family, beta[0] + beta[1] * a + beta[2] * m + beta[3] * L)
        return np.column_stack([d, d * a, d * m, d * L])

    for k, (hi, lo) in enumerate(_CONTRASTS):
        ddiff = dxi(*hi) - dxi(*lo)
        for a in (0, 1):
            r = 7 + 2 * k + a
            J[r, BETA] = np.mean(ddiff * gates[a][:, None], axis=0)
            J[r, r] = -gbar[a]

    for k, m_exposure in enumerate((1, 0)):
        d = inv_link_deriv(family, gamma[0] + gamma[1] * m_exposure + gamma[2] * L)
        deta = np.column_stack([d, d * m_exposure, d * L])
        for a in (0, 1):
            r = 13 + 2 * k + a
            J[r, GAMMA] = np.mean(deta * gates[a][:, None], axis=0)
            J[r, r] = -gbar[a]

    for a in (0, 1):
        c10, c01, c11 = 7 + a, 9 + a, 11 + a
        m1, m0 = 13 + a, 15 + a
        w = gbar[a]
        r = 17 + a
        J[r, r] = w
        J[r, m1] = -th[c01] * w
        J[r, m0] = th[c01] * w
        J[r, c01] = -(th[m1] - th[m0]) * w
        r = 20 + a
        J[r, r] = w
        J[r, c10] = -(1.0 - th[m1]) * w
        J[r, c11] = -th[m1] * w
        J[r, m1] = -(th[c11] - th[c10]) * w
    for r in (19, 22):
        J[r, r - 2], J[r, r - 1], J[r, r] = gbar[0], gbar[1], -1.0

    for k, (s1, s2) in enumerate(_INDEX_SOURCES):
        r = 23 + k
        if not np.isfinite(th[r]):
            continue
        p = th[s1] + (th[s2] if s2 is not None else 0.0)
        J[r, s1] += -1.0 / p**2
        if s2 is not None:
            J[r, s2] += -1.0 / p**2
        J[r, r] = -1.0
    return J


def solve(data: Dataset, family) -> ParameterVector:
    """Plug-in root of the stacked system.

    Regressions are fitted first; every remaining block is then an explicit
    function of the coefficients and group means, so the system is solved
    in one triangular sweep. Indices of non-positive effects are INFINITE.
    """
    family = LinkFamily.parse(family)
    data.check_groups()
    data = data.canonical()
    beta = glm.fit(glm.outcome_spec(family), data).coefficients
    gamma = glm.fit(glm.mediator_spec(family), data).coefficients
    c0 = group_contrasts(0, beta, gamma, family, data)
    c1 = group_contrasts(1, beta, gamma, family, data)
    n0, n1 = data.n0, data.n1
    return ParameterVector(
        beta=beta,
        gamma=gamma,
        xi_contrasts=(c0.c10, c1.c10, c0.c01, c1.c01, c0.c11, c1.c11),
        med_means=(c0.m1, c1.m1, c0.m0, c1.m0),
        p_indirect=(c0.indirect, c1.indirect, marginalize(c0.indirect, c1.indirect, n0, n1)),
        p_direct=(c0.direct, c1.direct, marginalize(c0.direct, c1.direct, n0, n1)),
    )


def solve_joint(data: Dataset, family, start, tol: float = 1e-12) -> ParameterVector:
    """Root of the full summed system by a generic quasi-Newton root finder.

    Independent of the plug-in route and of :func:`mean_jacobian` (the
    Jacobian is approximated by finite differences inside the solver).
    Coordinates that are infinite in ``start`` stay fixed.
    """
    family = LinkFamily.parse(family)
    x0 = _vec(start).copy()
    mask = np.isfinite(x0)

    def fun(z):
        full = x0.copy()
        full[mask] = z
        return summed_q(data, full, family)[mask] / data.n

    sol = optimize.root(fun, x0[mask], method="hybr", options={"xtol": tol})
    if not sol.success:
        raise RuntimeError(f"joint root finder failed: {sol.message}")
    out = x0.copy()
    out[mask] = sol.x
    return unpack(out)
