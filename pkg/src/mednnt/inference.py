"""Sandwich covariance and Wald intervals for the stacked estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .core import INDEX_NAMES, INDICES, N_PARAMS, PARAM_NAMES, Dataset, ParameterVector, pack
from .stack import finite_mask, mean_jacobian, q_matrix

SINGULAR_CONDITION = 1e12


class SingularBread(np.linalg.LinAlgError):
    """The bread matrix is numerically singular."""


@dataclass(frozen=True)
class SandwichResult:
    bread: np.ndarray
    meat: np.ndarray
    covariance: np.ndarray
    standard_errors: np.ndarray
    singular: bool
    infinite: tuple[bool, ...]  # one per index, in INDEX_NAMES order
    condition: float
    n: int


@dataclass(frozen=True)
class Interval:
    estimate: float
    lower: float | None
    upper: float | None
    se: float | None
    infinite: bool = False


def sandwich_covariance(bread: np.ndarray, meat: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    """``bread^-1 meat bread^-T / n`` and the condition number of ``bread``."""
    bread = np.atleast_2d(bread)
    meat = np.atleast_2d(meat)
    cond = float(np.linalg.cond(bread))
    if not np.isfinite(cond):
        cond = np.inf
    # least-squares solves stay defined when the bread is rank deficient
    left = linalg.lstsq(bread, meat)[0]
    cov = linalg.lstsq(bread, left.T)[0] / n
    return 0.5 * (cov + cov.T), cond


def sandwich(data: Dataset, theta, family) -> SandwichResult:
    """Sandwich covariance of all 32 parameters.

    Rows and columns of infinite indices are excluded from the linear algebra
    and reported with NaN variance.
    """
    th = pack(theta) if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)
    mask = finite_mask(th)
    Q = q_matrix(data, th, family)[:, mask]
    n = data.n
    bread = -mean_jacobian(data, th, family)[np.ix_(mask, mask)]
    meat = Q.T @ Q / n
    cov_sub, cond = sandwich_covariance(bread, meat, n)

    cov = np.full((N_PARAMS, N_PARAMS), np.nan)
    cov[np.ix_(mask, mask)] = cov_sub
    singular = cond > SINGULAR_CONDITION
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return SandwichResult(
        bread=bread, meat=meat, covariance=cov, standard_errors=se,
        singular=bool(singular), infinite=tuple(bool(~m) for m in mask[INDICES]),
        condition=cond, n=n,
    )


def z_value(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return float(stats.norm.ppf(1.0 - (1.0 - level) / 2.0))


def confidence_intervals(result: SandwichResult, theta, level: float = 0.95) -> dict[str, Interval]:
    """Wald intervals keyed by parameter name; index lower bounds are floored at 1."""
    z = z_value(level)
    th = pack(theta) if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)
    out = {}
    for k, name in enumerate(PARAM_NAMES):
        est = float(th[k])
        if np.isinf(est):
            out[name] = Interval(est, None, None, None, infinite=True)
            continue
        se = float(result.standard_errors[k])
        lo, hi = est - z * se, est + z * se
        if name in INDEX_NAMES:
            lo = max(lo, 1.0)
        out[name] = Interval(est, lo, hi, se)
    return out
