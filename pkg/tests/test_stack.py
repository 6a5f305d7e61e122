import math

import numpy as np
import pytest

from conftest import random_dataset
from mednnt import reporting
from mednnt.core import INDEX_NAMES, N_PARAMS, Dataset, pack, unpack
from mednnt.links import LinkFamily
from mednnt.simulate import SimulationConfig, generate
from mednnt.stack import q_function, q_matrix, residual_norm, solve, solve_joint, summed_q


def _F(family, x):
    if family == "logit":
        return 1 / (1 + math.exp(-x))
    return 0.5 * (1 + math.erf(x / math.sqrt(2)))


def _f(family, x):
    if family == "logit":
        p = _F(family, x)
        return p * (1 - p)
    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi)


def transcribed_q(rec, th, family):
    """Each block written out from the estimating equations, one record at a time."""
    I, A, M, L = rec
    b0, bA, bM, bL, g0, gA, gL = th[:7]
    c10_0, c10_1, c01_0, c01_1, c11_0, c11_1 = th[7:13]
    M1_0, M1_1, M0_0, M0_1 = th[13:17]
    pi0, pi1, pi, pd0, pd1, pd = th[17:23]
    idx = th[23:32]

    def score(y, x, c):
        eta = sum(a * b for a, b in zip(x, c))
        mu = _F(family, eta)
        w = y - mu if family == "logit" else _f(family, eta) * (y - mu) / (mu * (1 - mu))
        return [w * xi for xi in x]

    xi = lambda a, m: _F(family, b0 + bA * a + bM * m + bL * L)
    eta = lambda a: _F(family, g0 + gA * a + gL * L)
    out = score(I, [1, A, M, L], [b0, bA, bM, bL]) + score(M, [1, A, L], [g0, gA, gL])
    out += [
        (1 - A) * (xi(1, 0) - xi(0, 0) - c10_0), A * (xi(1, 0) - xi(0, 0) - c10_1),
        (1 - A) * (xi(0, 1) - xi(0, 0) - c01_0), A * (xi(0, 1) - xi(0, 0) - c01_1),
        (1 - A) * (xi(1, 1) - xi(0, 1) - c11_0), A * (xi(1, 1) - xi(0, 1) - c11_1),
        (1 - A) * (eta(1) - M1_0), A * (eta(1) - M1_1),
        (1 - A) * (eta(0) - M0_0), A * (eta(0) - M0_1),
        (1 - A) * (pi0 - (M1_0 - M0_0) * c01_0), A * (pi1 - (M1_1 - M0_1) * c01_1),
        pi0 * (1 - A) + pi1 * A - pi,
        (1 - A) * (pd0 - (c10_0 * (1 - M1_0) + c11_0 * M1_0)),
        A * (pd1 - (c10_1 * (1 - M1_1) + c11_1 * M1_1)),
        pd0 * (1 - A) + pd1 * A - pd,
    ]
    ps = [pi0, pi1, pi, pd0, pd1, pd, pi0 + pd0, pi1 + pd1, pi + pd]
    out += [1 / p - k for p, k in zip(ps, idx)]
    return out


TWENTY = random_dataset(np.random.default_rng(20), 20)


@pytest.mark.parametrize("family", ["logit", "probit"])
def test_q_matches_transcription_oracle(family):
    rng = np.random.default_rng(7)
    th = np.concatenate([rng.normal(0, 0.7, 7), rng.uniform(-0.3, 0.3, 6), rng.uniform(0.1, 0.9, 4),
                         rng.uniform(0.05, 0.3, 6), rng.uniform(1, 10, 9)])
    Q = q_matrix(TWENTY, th, family)
    for j, rec in enumerate(TWENTY.records()):
        assert np.allclose(Q[j], transcribed_q(rec, th, family), atol=1e-13, rtol=1e-12)
        assert np.allclose(q_function(rec, th, family), Q[j], atol=1e-14, rtol=1e-14)


def test_mediator_exposure_score_is_gated():
    th = np.zeros(N_PARAMS)
    th[17:23] = 0.2
    th[23:] = 5.0
    Q = q_matrix(TWENTY, th, "logit")
    unexposed = TWENTY.A == 0
    assert np.all(Q[unexposed, 5] == 0.0)
    assert np.all(Q[unexposed][:, [8, 10, 12, 14, 16, 18, 21]] == 0.0)
    assert np.all(Q[~unexposed][:, [7, 9, 11, 13, 15, 17, 20]] == 0.0)


@pytest.mark.parametrize("family", ["logit", "probit"])
def test_root_property_on_random_datasets(family):
    rng = np.random.default_rng(100 if family == "logit" else 101)
    for _ in range(100):
        data = random_dataset(rng, int(rng.integers(150, 400)))
        theta = solve(data, family)
        for a in (0, 1):
            assert theta.p_total[a] == theta.p_direct[a] + theta.p_indirect[a]
        assert residual_norm(data, theta, family) < 1e-8 * data.n


@pytest.mark.parametrize("family", ["logit", "probit"])
def test_joint_root_matches_plug_in(family):
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 5:
        data = random_dataset(rng, int(rng.integers(30, 51)))
        try:
            theta = solve(data, family)
        except Exception:
            continue
        vec = pack(theta)
        start = vec.copy()
        finite = np.isfinite(start)
        # multiplicative jitter keeps small effects on their side of zero, where g is finite
        k = finite.sum()
        start[finite] *= 1 + rng.normal(0, 0.02, k)
        start[finite] += rng.normal(0, 1e-3, k)
        joint = pack(solve_joint(data, family, start))
        assert np.allclose(joint[finite], vec[finite], atol=1e-6, rtol=0)
        checked += 1


def test_permutation_invariance(logit_1600):
    perm = np.random.default_rng(1).permutation(logit_1600.n)
    a = pack(solve(logit_1600, "logit"))
    b = pack(solve(logit_1600.take(perm), "logit"))
    assert a.tobytes() == b.tobytes()


def test_null_model_effects_vanish():
    data = generate(SimulationConfig(beta=(-1.0, 0.0, 0.0, -2.0), n=10_000, seed=5), 0)
    theta = solve(data, "logit")
    vals = np.array(theta.p_indirect + theta.p_direct + theta.p_total)
    assert np.all(np.abs(vals) < 0.05)


def test_nnt_near_true_value(logit_1600):
    theta = solve(logit_1600, "logit")
    assert 1.7 < theta.index("NNT").value < 2.5
    assert not theta.infinite_indices()


def test_infinite_index_is_left_out_of_residual():
    rng = np.random.default_rng(8)
    data = random_dataset(rng, 300, gamma=(-0.5, 0.0, -1.0))
    theta = solve(data, "logit")
    vec = pack(theta)
    assert residual_norm(data, vec, "logit") < 1e-8 * data.n
    if theta.infinite_indices():
        assert np.all(np.isinf(vec[23:26]) | (vec[17:20] > 0))


def test_csv_round_trip_is_bit_exact(tmp_path, logit_1600):
    path = tmp_path / "cohort.csv"
    reporting.write_csv(logit_1600, path)
    back = reporting.read_csv(path)
    for col in "IAML":
        assert getattr(back, col).tobytes() == getattr(logit_1600, col).tobytes()
    assert pack(solve(back, "logit")).tobytes() == pack(solve(logit_1600, "logit")).tobytes()


def test_summed_q_rejects_wrong_length(logit_1600):
    with pytest.raises(ValueError):
        summed_q(logit_1600, np.zeros(31), "logit")
