"""Data model shared by every estimation step.

The stacked parameter vector has a fixed 32-slot layout::

    0-3    beta         (b0, bA, bM, bL)           outcome model
    4-6    gamma        (g0, gA, gL)               mediator model
    7-12   xi contrasts (c10|0, c10|1, c01|0, c01|1, c11|0, c11|1)
    13-16  med means    (M1|0, M1|1, M0|0, M0|1)
    17-19  p_indirect   (p_i(0), p_i(1), p_i)
    20-22  p_direct     (p_d(0), p_d(1), p_d)
    23-31  indices      (INNE, IEIN, INNT, DNNE, DEIN, DNNT, NNE, EIN, NNT)

``cAB|a`` is the group-``a`` mean of ``E[I | A=A', M=B', L]`` contrasts, e.g.
``c10|0 = E[I_{1,0} - I_{0,0} | A=0]``. Total effects are not parameters;
they are always ``p_i + p_d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

N_PARAMS = 32

BETA = slice(0, 4)
GAMMA = slice(4, 7)
XI = slice(7, 13)
MED = slice(13, 17)
P_INDIRECT = slice(17, 20)
P_DIRECT = slice(20, 23)
INDICES = slice(23, 32)

INDEX_NAMES = ("INNE", "IEIN", "INNT", "DNNE", "DEIN", "DNNT", "NNE", "EIN", "NNT")

PARAM_NAMES = (
    "beta_0", "beta_A", "beta_M", "beta_L",
    "gamma_0", "gamma_A", "gamma_L",
    "c10_0", "c10_1", "c01_0", "c01_1", "c11_0", "c11_1",
    "M1_0", "M1_1", "M0_0", "M0_1",
    "p_i0", "p_i1", "p_i",
    "p_d0", "p_d1", "p_d",
) + INDEX_NAMES

assert len(PARAM_NAMES) == N_PARAMS


class EmptyGroup(ValueError):
    """Raised when an exposure group has no observations."""


@dataclass(frozen=True)
class ExtendedIndex:
    """An efficacy index on ``[1, inf]``; ``value=None`` is the infinite index."""

    value: float | None

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __float__(self) -> float:
        return math.inf if self.value is None else float(self.value)

    def __repr__(self) -> str:
        return "INFINITE" if self.value is None else f"ExtendedIndex({self.value!r})"


INFINITE = ExtendedIndex(None)


def g_transform(p: float) -> ExtendedIndex:
    """Map a benefit probability to its number-needed index: ``1/p`` if p > 0."""
    p = float(p)
    if not math.isfinite(p):
        raise ValueError(f"benefit must be finite, got {p}")
    if p > 0:
        return ExtendedIndex(1.0 / p)
    return INFINITE


class ObservationRecord(NamedTuple):
    outcome: int
    exposure: int
    mediator: int
    confounder: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Columns of binary outcome ``I``, exposure ``A``, mediator ``M`` and confounder ``L``."""

    I: np.ndarray
    A: np.ndarray
    M: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        cols = {}
        for name in "IAML":
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"column {name} must be one-dimensional")
            cols[name] = arr
        n = len(cols["I"])
        if any(len(c) != n for c in cols.values()):
            raise ValueError("columns have unequal lengths")
        for name in "IAM":
            if not np.all((cols[name] == 0) | (cols[name] == 1)):
                raise ValueError(f"column {name} must be binary 0/1")
        if not np.all(np.isfinite(cols["L"])):
            raise ValueError("confounder L must be finite")
        for name, arr in cols.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_records(cls, records: Iterable[ObservationRecord]) -> Dataset:
        rows = list(records)
        if not rows:
            return cls(np.empty(0), np.empty(0), np.empty(0), np.empty(0))
        I, A, M, L = (np.array(col, dtype=float) for col in zip(*rows))
        return cls(I, A, M, L)

    def records(self) -> Iterator[ObservationRecord]:
        for i, a, m, l in zip(self.I, self.A, self.M, self.L):
            yield ObservationRecord(int(i), int(a), int(m), float(l))

    def __len__(self) -> int:
        return len(self.I)

    @property
    def n(self) -> int:
        return len(self.I)

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.A))

    @property
    def n0(self) -> int:
        return self.n - self.n1

    def group(self, a: int) -> np.ndarray:
        """Boolean mask for exposure group ``a``; raises EmptyGroup if it is empty."""
        mask = self.A == a
        if not mask.any():
            raise EmptyGroup(f"no observations with A={a}")
        return mask

    def check_groups(self) -> None:
        self.group(0)
        self.group(1)

    def canonical(self) -> Dataset:
        """Records sorted by (A, M, I, L) so reductions do not depend on input order."""
        order = np.lexsort((self.L, self.I, self.M, self.A))
        return Dataset(self.I[order], self.A[order], self.M[order], self.L[order])

    def take(self, idx: np.ndarray) -> Dataset:
        return Dataset(self.I[idx], self.A[idx], self.M[idx], self.L[idx])


def _triple(values: Sequence[float], size: int, name: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) != size:
        raise ValueError(f"{name} needs {size} values, got {len(out)}")
    return out


@dataclass(frozen=True)
class ParameterVector:
    beta: tuple[float, ...]
    gamma: tuple[float, ...]
    xi_contrasts: tuple[float, ...]
    med_means: tuple[float, ...]
    p_indirect: tuple[float, ...]
    p_direct: tuple[float, ...]
    indices: tuple[ExtendedIndex, ...] = field(default=())

    def __post_init__(self):
        for name, size in (("beta", 4), ("gamma", 3), ("xi_contrasts", 6),
                           ("med_means", 4), ("p_indirect", 3), ("p_direct", 3)):
            object.__setattr__(self, name, _triple(getattr(self, name), size, name))
        idx = tuple(self.indices)
        if not idx:
            idx = self.derived_indices()
        if len(idx) != 9 or not all(isinstance(v, ExtendedIndex) for v in idx):
            raise ValueError("indices must be nine ExtendedIndex values")
        object.__setattr__(self, "indices", idx)

    @property
    def p_total(self) -> tuple[float, float, float]:
        return tuple(d + i for d, i in zip(self.p_direct, self.p_indirect))

    def derived_indices(self) -> tuple[ExtendedIndex, ...]:
        """The nine indices implied by the stored effects (total = direct + indirect)."""
        effects = self.p_indirect + self.p_direct + self.p_total
        return tuple(g_transform(p) for p in effects)

    def index(self, name: str) -> ExtendedIndex:
        return self.indices[INDEX_NAMES.index(name)]

    def infinite_indices(self) -> list[str]:
        return [n for n, v in zip(INDEX_NAMES, self.indices) if v.is_infinite]


def pack(theta: ParameterVector) -> np.ndarray:
    """Flatten to the 32-slot layout; an infinite index is stored as ``inf``."""
    return np.array(
        theta.beta + theta.gamma + theta.xi_contrasts + theta.med_means
        + theta.p_indirect + theta.p_direct
        + tuple(float(v) for v in theta.indices),
        dtype=float,
    )


def unpack(vec: Sequence[float]) -> ParameterVector:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (N_PARAMS,):
        raise ValueError(f"expected a {N_PARAMS}-vector, got shape {vec.shape}")
    idx = tuple(INFINITE if math.isinf(v) else ExtendedIndex(float(v)) for v in vec[INDICES])
    return ParameterVector(
        beta=vec[BETA], gamma=vec[GAMMA], xi_contrasts=vec[XI], med_means=vec[MED],
        p_indirect=vec[P_INDIRECT], p_direct=vec[P_DIRECT], indices=idx,
    )
