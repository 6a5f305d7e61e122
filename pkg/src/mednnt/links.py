"""Inverse-link families for the mediator and outcome regressions."""
from __future__ import annotations

import enum

import numpy as np
from scipy import special

EPS = 1e-12


class LinkFamily(str, enum.Enum):
    LOGIT = "logit"
    PROBIT = "probit"

    @classmethod
    def parse(cls, value: "LinkFamily | str") -> "LinkFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown link family {value!r}; expected 'logit' or 'probit'") from None


def inv_link(family: LinkFamily | str, x):
    """Mean as a function of the linear predictor, clamped to ``[EPS, 1-EPS]``."""
    family = LinkFamily.parse(family)
    x = np.asarray(x, dtype=float)
    if family is LinkFamily.LOGIT:
        p = special.expit(x)
    else:
        p = special.ndtr(x)
    return np.clip(p, EPS, 1.0 - EPS)


def inv_link_deriv(family: LinkFamily | str, x):
    """Derivative of the (unclamped) inverse link."""
    family = LinkFamily.parse(family)
    x = np.asarray(x, dtype=float)
    if family is LinkFamily.LOGIT:
        return special.expit(x) * special.expit(-x)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def inv_link_deriv2(family: LinkFamily | str, x):
    """Second derivative of the inverse link; used for analytic Jacobians."""
    family = LinkFamily.parse(family)
    x = np.asarray(x, dtype=float)
    if family is LinkFamily.LOGIT:
        p = special.expit(x)
        return p * (1.0 - p) * (1.0 - 2.0 * p)
    return -x * inv_link_deriv(family, x)
