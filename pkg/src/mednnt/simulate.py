"""Cohort simulator, Monte Carlo truth oracle and confidence-interval coverage study."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .core import INDEX_NAMES, Dataset, EmptyGroup
from .effects import EffectSet, mediator_mean, outcome_mean
from .glm import GlmFailure
from .inference import confidence_intervals, sandwich
from .links import LinkFamily
from .stack import solve

logger = logging.getLogger(__name__)

# stream ids inside a (domain, rep) key
_L, _A, _M, _I = range(4)
_DATA, _ORACLE, _STRATA = range(3)


@dataclass(frozen=True)
class SimulationConfig:
    mu: float = 0.5
    sigma: float = 0.1
    delta: tuple[float, float] = (2.0, -3.0)
    gamma: tuple[float, float, float] = (-1.0, 3.0, -2.0)
    beta: tuple[float, float, float, float] = (-1.0, 1.5, 1.5, -2.0)
    family: LinkFamily = LinkFamily.LOGIT
    n: int = 1600
    reps: int = 100
    seed: int = 20240101
    level: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "family", LinkFamily.parse(self.family))
        for name, size in (("delta", 2), ("gamma", 3), ("beta", 4)):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != size:
                raise ValueError(f"{name} needs {size} values, got {len(vals)}")
            object.__setattr__(self, name, vals)
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        return d


def _rng(seed: int, domain: int, rep: int, var: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(domain, rep, var))
    return np.random.Generator(np.random.Philox(ss))


def _draw_population(config: SimulationConfig, rngs, size: int):
    L = config.mu + config.sigma * rngs[_L].standard_normal(size)
    A = (rngs[_A].random(size) < special.expit(config.delta[0] + config.delta[1] * L)).astype(float)
    return L, A


def generate(config: SimulationConfig, rep: int) -> Dataset:
    """Replication ``rep`` of the cohort; identical (seed, rep) give identical data."""
    rngs = [_rng(config.seed, _DATA, rep, v) for v in range(4)]
    n = config.n
    L, A = _draw_population(config, rngs, n)
    M = (rngs[_M].random(n) < mediator_mean(config.gamma, config.family, A, L)).astype(float)
    I = (rngs[_I].random(n) < outcome_mean(config.beta, config.family, A, M, L)).astype(float)
    return Dataset(I, A, M, L)


@dataclass(frozen=True)
class OracleResult:
    """True effects by Monte Carlo integration, with batch-means standard errors."""

    effects: EffectSet
    effect_se: dict[str, tuple[float, float, float]]
    nested: EffectSet
    nested_se: dict[str, tuple[float, float, float]]
    draws: int
    seed: int

    @property
    def indices(self):
        return self.effects.indices


def _effect_triples(eff: EffectSet) -> dict[str, tuple[float, float, float]]:
    return {"indirect": eff.indirect, "direct": eff.direct, "total": eff.total}


def _batch_se(batches: list[EffectSet]) -> dict[str, tuple[float, float, float]]:
    out = {}
    for key in ("indirect", "direct", "total"):
        vals = np.array([_effect_triples(b)[key] for b in batches])
        out[key] = tuple(float(s) for s in vals.std(axis=0, ddof=1) / math.sqrt(len(batches)))
    return out


def mc_oracle(config: SimulationConfig, draws: int = 10_000_000, seed: int | None = None,
              batches: int = 20) -> OracleResult:
    """Population effects under the true coefficients.

    One joint sample of (L, A) of size ``draws`` is drawn; the factorized
    effects use group-conditional empirical L distributions. The nested
    counterfactual diagnostic additionally draws structural noise for the
    potential mediators and outcomes of every subject.
    """
    seed = config.seed if seed is None else seed
    fam, beta, gamma = config.family, config.beta, config.gamma
    rngs = [_rng(seed, _ORACLE, 0, v) for v in range(4)]
    size = math.ceil(draws / batches)
    # per group: count, sums of c10, c01, c11, m1, m0
    sums = np.zeros((2, 6))
    # per group: count, sums of nested NIE, NDE
    nested_sums = np.zeros((2, 3))
    batch_fact, batch_nested = [], []
    remaining = draws
    while remaining > 0:
        k = min(size, remaining)
        remaining -= k
        L, A = _draw_population(config, rngs, k)
        x00, x10 = outcome_mean(beta, fam, 0, 0, L), outcome_mean(beta, fam, 1, 0, L)
        x01, x11 = outcome_mean(beta, fam, 0, 1, L), outcome_mean(beta, fam, 1, 1, L)
        m1, m0 = mediator_mean(gamma, fam, 1, L), mediator_mean(gamma, fam, 0, L)
        uM, uI = rngs[_M].random(k), rngs[_I].random(k)
        M1, M0 = uM < m1, uM < m0
        # I_{a,m} = 1{uI < xi(a, m, L)}
        I_0M1 = uI < np.where(M1, x01, x00)
        I_0M0 = uI < np.where(M0, x01, x00)
        I_1M1 = uI < np.where(M1, x11, x10)
        nie = I_0M1.astype(float) - I_0M0
        nde = I_1M1.astype(float) - I_0M1
        chunk = np.zeros((2, 6))
        chunk_nested = np.zeros((2, 3))
        for a in (0, 1):
            g = A == a
            chunk[a] = (g.sum(), (x10 - x00)[g].sum(), (x01 - x00)[g].sum(),
                        (x11 - x01)[g].sum(), m1[g].sum(), m0[g].sum())
            chunk_nested[a] = (g.sum(), nie[g].sum(), nde[g].sum())
        sums += chunk
        nested_sums += chunk_nested
        batch_fact.append(_factorized(chunk))
        batch_nested.append(_nested(chunk_nested))

    return OracleResult(
        effects=_factorized(sums),
        effect_se=_batch_se(batch_fact) if len(batch_fact) > 1 else {},
        nested=_nested(nested_sums),
        nested_se=_batch_se(batch_nested) if len(batch_nested) > 1 else {},
        draws=draws,
        seed=seed,
    )


def _factorized(sums: np.ndarray) -> EffectSet:
    ind, dirs = [], []
    for a in (0, 1):
        cnt = sums[a, 0]
        if cnt == 0:
            raise EmptyGroup(f"oracle sample has no A={a} draws")
        c10, c01, c11, m1, m0 = sums[a, 1:] / cnt
        ind.append((m1 - m0) * c01)
        dirs.append(c10 * (1.0 - m1) + c11 * m1)
    return EffectSet.from_groups(ind[0], ind[1], dirs[0], dirs[1], sums[0, 0], sums[1, 0])


def _nested(sums: np.ndarray) -> EffectSet:
    ind = [sums[a, 1] / sums[a, 0] for a in (0, 1)]
    dirs = [sums[a, 2] / sums[a, 0] for a in (0, 1)]
    return EffectSet.from_groups(ind[0], ind[1], dirs[0], dirs[1], sums[0, 0], sums[1, 0])


def principal_strata_nie(strata: dict[tuple[int, int], float], outcome: dict[tuple[int, int], float],
                         draws: int, seed: int = 0) -> dict[str, float]:
    """Brute-force versus factorized indirect effect without covariates.

    ``strata`` gives P(M_0=i, M_1=j); ``outcome`` gives P(I_{0,0}=i, I_{0,1}=j).
    The two are drawn independently, i.e. the indirect effect is homogeneous
    across principal strata.
    """
    rng_m = _rng(seed, _STRATA, 0, _M)
    rng_i = _rng(seed, _STRATA, 0, _I)
    keys_m, p_m = zip(*sorted(strata.items()))
    keys_i, p_i = zip(*sorted(outcome.items()))
    pm = np.array(keys_m)[rng_m.choice(len(keys_m), size=draws, p=p_m)]
    po = np.array(keys_i)[rng_i.choice(len(keys_i), size=draws, p=p_i)]
    M0, M1 = pm[:, 0], pm[:, 1]
    I00, I01 = po[:, 0], po[:, 1]
    nested = np.where(M1 == 1, I01, I00) - np.where(M0 == 1, I01, I00)
    dm, di = (M1 - M0).astype(float), (I01 - I00).astype(float)
    fact = dm.mean() * di.mean()
    # delta-method SE of the product of two independent means
    fact_se = math.sqrt((di.mean() ** 2 * dm.var(ddof=1) + dm.mean() ** 2 * di.var(ddof=1)) / draws)
    return {
        "nested": float(nested.mean()),
        "nested_se": float(nested.std(ddof=1) / math.sqrt(draws)),
        "factorized": float(fact),
        "factorized_se": fact_se,
    }


@dataclass(frozen=True)
class ReplicationRecord:
    rep: int
    status: str  # ok | infinite | singular | fit_failure
    estimates: dict[str, float]
    lower: dict[str, float | None]
    upper: dict[str, float | None]
    covered: dict[str, bool | None]


@dataclass(frozen=True)
class CoverageReport:
    config: SimulationConfig
    truth: dict[str, float]
    coverage: dict[str, float]
    retained: int
    excluded: int
    excluded_by_reason: dict[str, int]
    mean_estimate: dict[str, float]
    median_estimate: dict[str, float]
    median_abs_error: dict[str, float]
    replications: list[ReplicationRecord] = field(repr=False)

    @property
    def percent_excluded(self) -> float:
        return 100.0 * self.excluded / self.config.reps

    @property
    def exclusion_rate(self) -> float:
        return self.excluded / self.config.reps


def run_replication(config: SimulationConfig, truth: dict[str, float], rep: int) -> ReplicationRecord:
    data = generate(config, rep)
    nan = {k: math.nan for k in INDEX_NAMES}
    none = {k: None for k in INDEX_NAMES}
    try:
        theta = solve(data, config.family)
    except (GlmFailure, EmptyGroup) as exc:
        logger.debug("rep %d: fit failed: %s", rep, exc)
        return ReplicationRecord(rep, "fit_failure", nan, none, none, none)
    estimates = {k: float(v) for k, v in zip(INDEX_NAMES, theta.indices)}
    if theta.infinite_indices():
        return ReplicationRecord(rep, "infinite", estimates, none, none, none)
    result = sandwich(data, theta, config.family)
    if result.singular:
        return ReplicationRecord(rep, "singular", estimates, none, none, none)
    ci = confidence_intervals(result, theta, config.level)
    lower = {k: ci[k].lower for k in INDEX_NAMES}
    upper = {k: ci[k].upper for k in INDEX_NAMES}
    covered = {k: bool(lower[k] <= truth[k] <= upper[k]) for k in INDEX_NAMES}
    return ReplicationRecord(rep, "ok", estimates, lower, upper, covered)


def _run_chunk(args):
    config, truth, reps = args
    return [run_replication(config, truth, r) for r in reps]


def coverage_study(config: SimulationConfig, truth, workers: int = 1) -> CoverageReport:
    """Generate, estimate and check interval coverage for ``config.reps`` replications.

    Coverage is computed over replications with finite index estimates and a
    non-singular covariance; the rest are tallied as exclusions. The report
    does not depend on ``workers``.
    """
    if isinstance(truth, (OracleResult, EffectSet)):
        truth = {k: float(v) for k, v in truth.indices.items()}
    truth = {k: float(truth[k]) for k in INDEX_NAMES}
    reps = list(range(config.reps))
    if workers > 1:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for part in pool.map(_run_chunk, [(config, truth, c) for c in chunks]) for r in part]
        records = sorted(results, key=lambda r: r.rep)
    else:
        records = [run_replication(config, truth, r) for r in reps]

    kept = [r for r in records if r.status == "ok"]
    reasons = {s: sum(r.status == s for r in records) for s in ("infinite", "singular", "fit_failure")}
    coverage, mean_est, median_est, mae = {}, {}, {}, {}
    for k in INDEX_NAMES:
        coverage[k] = float(np.mean([r.covered[k] for r in kept])) if kept else math.nan
        vals = np.array([r.estimates[k] for r in kept])
        mean_est[k] = float(vals.mean()) if kept else math.nan
        median_est[k] = float(np.median(vals)) if kept else math.nan
        # failed fits count as infinitely wrong
        err = [abs(r.estimates[k] - truth[k]) if r.status != "fit_failure" else math.inf for r in records]
        mae[k] = float(np.median(err))
    return CoverageReport(
        config=config, truth=truth, coverage=coverage, retained=len(kept),
        excluded=len(records) - len(kept), excluded_by_reason=reasons,
        mean_estimate=mean_est, median_estimate=median_est, median_abs_error=mae,
        replications=records,
    )
