"""Group-wise and marginal natural direct, indirect and total effects.

Expectations over ``L`` are empirical means over the realized confounder
values of the relevant exposure group.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import INDEX_NAMES, Dataset, EmptyGroup, ExtendedIndex, g_transform
from .links import LinkFamily, inv_link


def outcome_mean(beta, family, a, m, L) -> np.ndarray:
    """``xi(a, m, L; beta)`` for fixed exposure ``a`` and mediator ``m``."""
    b0, bA, bM, bL = beta
    return inv_link(family, b0 + bA * a + bM * m + bL * np.asarray(L, dtype=float))


def mediator_mean(gamma, family, a, L) -> np.ndarray:
    """``eta(a, L; gamma)``."""
    g0, gA, gL = gamma
    return inv_link(family, g0 + gA * a + gL * np.asarray(L, dtype=float))


@dataclass(frozen=True)
class GroupContrasts:
    """Group means of the controlled outcome contrasts and potential mediators."""

    c10: float  # E[I_{1,0} - I_{0,0} | A=a]
    c01: float  # E[I_{0,1} - I_{0,0} | A=a]
    c11: float  # E[I_{1,1} - I_{0,1} | A=a]
    m1: float   # E[M_1 | A=a]
    m0: float   # E[M_0 | A=a]

    @property
    def indirect(self) -> float:
        return (self.m1 - self.m0) * self.c01

    @property
    def direct(self) -> float:
        return self.c10 * (1.0 - self.m1) + self.c11 * self.m1


def group_contrasts(a: int, beta, gamma, family, data: Dataset) -> GroupContrasts:
    family = LinkFamily.parse(family)
    L = data.L[data.group(a)]
    x00 = outcome_mean(beta, family, 0, 0, L)
    x10 = outcome_mean(beta, family, 1, 0, L)
    x01 = outcome_mean(beta, family, 0, 1, L)
    x11 = outcome_mean(beta, family, 1, 1, L)
    return GroupContrasts(
        c10=float(np.mean(x10 - x00)),
        c01=float(np.mean(x01 - x00)),
        c11=float(np.mean(x11 - x01)),
        m1=float(np.mean(mediator_mean(gamma, family, 1, L))),
        m0=float(np.mean(mediator_mean(gamma, family, 0, L))),
    )


def indirect_effect(a: int, beta, gamma, family, data: Dataset) -> float:
    """Group-``a`` natural indirect effect: product of the two group-averaged contrasts."""
    return group_contrasts(a, beta, gamma, family, data).indirect


def direct_effect(a: int, beta, gamma, family, data: Dataset) -> float:
    """Group-``a`` natural direct effect, weighting controlled contrasts by ``E[M_1|A=a]``."""
    return group_contrasts(a, beta, gamma, family, data).direct


def total_effect(a: int, beta, gamma, family, data: Dataset) -> float:
    c = group_contrasts(a, beta, gamma, family, data)
    return c.direct + c.indirect


def marginalize(effect0: float, effect1: float, n0: float, n1: float) -> float:
    """Share-weighted mean of the two group effects."""
    return (n0 * effect0 + n1 * effect1) / (n0 + n1)


def controlled_direct_effect(m: int, a: int | None, beta, family, data: Dataset) -> float:
    """Mean of ``xi(1, m, L) - xi(0, m, L)`` over group ``a`` (``None``: whole sample)."""
    family = LinkFamily.parse(family)
    L = data.L if a is None else data.L[data.group(a)]
    if L.size == 0:
        raise EmptyGroup("no observations")
    return float(np.mean(outcome_mean(beta, family, 1, m, L) - outcome_mean(beta, family, 0, m, L)))


@dataclass(frozen=True)
class EffectSet:
    """Indirect and direct effects as (group 0, group 1, marginal) triples."""

    indirect: tuple[float, float, float]
    direct: tuple[float, float, float]

    @property
    def total(self) -> tuple[float, float, float]:
        return tuple(d + i for d, i in zip(self.direct, self.indirect))

    @property
    def indices(self) -> dict[str, ExtendedIndex]:
        effects = self.indirect + self.direct + self.total
        return {name: g_transform(p) for name, p in zip(INDEX_NAMES, effects)}

    @classmethod
    def from_groups(cls, indirect0, indirect1, direct0, direct1, w0, w1) -> EffectSet:
        return cls(
            indirect=(indirect0, indirect1, marginalize(indirect0, indirect1, w0, w1)),
            direct=(direct0, direct1, marginalize(direct0, direct1, w0, w1)),
        )

    def as_dict(self) -> dict:
        return {
            "p_indirect": dict(zip(("group0", "group1", "marginal"), self.indirect)),
            "p_direct": dict(zip(("group0", "group1", "marginal"), self.direct)),
            "p_total": dict(zip(("group0", "group1", "marginal"), self.total)),
        }


def effect_set(beta, gamma, family, data: Dataset) -> EffectSet:
    """All effects implied by fitted (or true) coefficients on ``data``."""
    c0 = group_contrasts(0, beta, gamma, family, data)
    c1 = group_contrasts(1, beta, gamma, family, data)
    return EffectSet.from_groups(c0.indirect, c1.indirect, c0.direct, c1.direct, data.n0, data.n1)


def closed_form_example(pd0: float, pd1: float, med_contrast: tuple[float, float],
                        out_contrast: tuple[float, float], exposed_share: float) -> EffectSet:
    """Effects without covariates from group-level inputs.

    ``med_contrast[a]`` is ``E[M_1 - M_0 | A=a]`` and ``out_contrast[a]`` is
    ``E[I_{0,1} - I_{0,0} | A=a]``.
    """
    pi0 = med_contrast[0] * out_contrast[0]
    pi1 = med_contrast[1] * out_contrast[1]
    return EffectSet.from_groups(pi0, pi1, pd0, pd1, 1.0 - exposed_share, exposed_share)
