"""Binary-response GLM fits by Fisher scoring (IRLS) with step halving."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import Dataset, ObservationRecord
from .links import EPS, LinkFamily, inv_link, inv_link_deriv, inv_link_deriv2

logger = logging.getLogger(__name__)

SEPARATION_ETA = 30.0

_RECORD_FIELD = {"I": "outcome", "A": "exposure", "M": "mediator", "L": "confounder"}


class GlmFailure(RuntimeError):
    """Base class for regression fits that cannot be used downstream."""


class RankDeficientDesign(GlmFailure):
    pass


class DidNotConverge(GlmFailure):
    def __init__(self, message: str, fit: "GlmFit"):
        super().__init__(message)
        self.fit = fit


@dataclass(frozen=True)
class GlmSpec:
    """Regression of ``response`` on an intercept plus ``covariates`` (column letters)."""

    family: LinkFamily
    response: str
    covariates: tuple[str, ...]

    @property
    def dim(self) -> int:
        return 1 + len(self.covariates)

    def design(self, data: Dataset) -> np.ndarray:
        cols = [np.ones(data.n)] + [getattr(data, c) for c in self.covariates]
        return np.column_stack(cols)

    def response_of(self, data: Dataset) -> np.ndarray:
        return getattr(data, self.response)

    def design_row(self, record: ObservationRecord) -> np.ndarray:
        return np.array([1.0] + [float(getattr(record, _RECORD_FIELD[c])) for c in self.covariates])


def mediator_spec(family: LinkFamily | str) -> GlmSpec:
    return GlmSpec(LinkFamily.parse(family), "M", ("A", "L"))


def outcome_spec(family: LinkFamily | str) -> GlmSpec:
    return GlmSpec(LinkFamily.parse(family), "I", ("A", "M", "L"))


@dataclass(frozen=True)
class GlmFit:
    coefficients: np.ndarray
    converged: bool
    iterations: int
    max_score_norm: float


def _score_weight(family: LinkFamily, eta: np.ndarray, y: np.ndarray) -> np.ndarray:
    # d loglik / d eta per record
    mu = inv_link(family, eta)
    if family is LinkFamily.LOGIT:
        return y - mu
    return inv_link_deriv(family, eta) * (y - mu) / (mu * (1.0 - mu))


def score_contributions(family: LinkFamily, X: np.ndarray, y: np.ndarray, coeffs) -> np.ndarray:
    """Per-record score vectors, shape (n, k)."""
    eta = X @ np.asarray(coeffs, dtype=float)
    return X * _score_weight(family, eta, y)[:, None]


def score(spec: GlmSpec, coeffs, record: ObservationRecord) -> np.ndarray:
    """Score contribution of a single record."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (spec.dim,):
        raise ValueError(f"expected {spec.dim} coefficients, got shape {coeffs.shape}")
    x = spec.design_row(record)
    y = np.array([float(getattr(record, _RECORD_FIELD[spec.response]))])
    return score_contributions(spec.family, x[None, :], y, coeffs)[0]


def score_slope(family: LinkFamily, eta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d/d eta of the per-record score weight, so d score / d coeffs = slope * x x^T."""
    if family is LinkFamily.LOGIT:
        mu = inv_link(family, eta)
        return -mu * (1.0 - mu)
    F = inv_link(family, eta)
    f = inv_link_deriv(family, eta)
    fp = inv_link_deriv2(family, eta)
    v = F * (1.0 - F)
    w = f / v
    dw = (fp * v - f * f * (1.0 - 2.0 * F)) / (v * v)
    return dw * (y - F) - w * f


def loglik(family: LinkFamily, X: np.ndarray, y: np.ndarray, coeffs) -> float:
    eta = X @ np.asarray(coeffs, dtype=float)
    if family is LinkFamily.LOGIT:
        # log expit(eta) = -log1p(exp(-eta))
        ll = -(y * np.logaddexp(0.0, -eta) + (1.0 - y) * np.logaddexp(0.0, eta))
    else:
        ll = y * special.log_ndtr(eta) + (1.0 - y) * special.log_ndtr(-eta)
    return float(np.sum(np.maximum(ll, np.log(EPS))))


def fit(spec: GlmSpec, data: Dataset, init=None, max_iter: int = 100, tol: float = 1e-10) -> GlmFit:
    """Maximum-likelihood coefficients for ``spec`` on ``data``.

    Raises RankDeficientDesign when the design crossproduct is singular and
    DidNotConverge when the iteration limit is hit or the data are separated.
    """
    X = spec.design(data)
    y = spec.response_of(data)
    n, k = X.shape
    data.check_groups()
    if np.linalg.matrix_rank(X.T @ X) < k:
        raise RankDeficientDesign(f"design for {spec.response} has rank < {k}")

    family = spec.family
    coeffs = np.zeros(k) if init is None else np.array(init, dtype=float)
    ll = loglik(family, X, y, coeffs)
    score_tol = 1e-9 * n
    U = score_contributions(family, X, y, coeffs).sum(axis=0)

    for it in range(1, max_iter + 1):
        eta = X @ coeffs
        mu = inv_link(family, eta)
        d = inv_link_deriv(family, eta)
        w = d * d / (mu * (1.0 - mu))
        info = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(info, U)
        except np.linalg.LinAlgError:
            result = GlmFit(coeffs, False, it, float(np.max(np.abs(U))))
            raise DidNotConverge(f"{spec.response} model information matrix is singular", result) from None

        t = 1.0
        for _ in range(30):
            trial = coeffs + t * step
            ll_trial = loglik(family, X, y, trial)
            if ll_trial >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        coeffs, ll = trial, ll_trial
        U = score_contributions(family, X, y, coeffs).sum(axis=0)
        score_norm = float(np.max(np.abs(U)))

        rel_step = np.max(np.abs(t * step)) / (1.0 + np.max(np.abs(coeffs)))
        if rel_step < tol and score_norm < score_tol:
            break
    else:
        result = GlmFit(coeffs, False, max_iter, float(np.max(np.abs(U))))
        raise DidNotConverge(f"{spec.response} model did not converge in {max_iter} iterations", result)

    if np.max(np.abs(X @ coeffs)) > SEPARATION_ETA:
        result = GlmFit(coeffs, False, it, score_norm)
        raise DidNotConverge(f"{spec.response} model shows separation (|eta| > {SEPARATION_ETA})", result)

    logger.debug("%s model converged in %d iterations", spec.response, it)
    return GlmFit(coeffs, True, it, score_norm)
