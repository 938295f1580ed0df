"""Whitening, deflation ICA, MI cost matrices and the matching step."""

import numpy as np
import pytest

from eembi.data import Dataset
from eembi.exogenous import (
    AssignmentInfeasibleError,
    CostMatrix,
    ExogenousData,
    IcaError,
    build_cost_matrix,
    fast_ica,
    generate_exogenous,
    match_exogenous,
    solve_assignment,
    whiten,
)
from oracles import brute_force_assignment


def _continuous(values, prefix="x"):
    values = np.asarray(values, dtype=np.float64)
    names = [f"{prefix}{i}" for i in range(values.shape[1])]
    return Dataset(names, ["continuous"] * values.shape[1], values)


# ---------------------------------------------------------------- whiten

def test_whiten_zero_mean_unit_covariance():
    rng = np.random.default_rng(30)
    x = rng.standard_normal((600, 4)) @ rng.standard_normal((4, 4))
    x += rng.uniform(-3.0, 3.0, size=4)
    res = whiten(x)
    assert np.allclose(res.values.mean(axis=0), 0.0, atol=1e-10)
    cov = res.values.T @ res.values / x.shape[0]
    assert np.allclose(cov, np.eye(4), atol=1e-8)


def test_whiten_transform_reproduces_values():
    rng = np.random.default_rng(31)
    x = rng.standard_normal((200, 3)) * [1.0, 5.0, 0.2]
    res = whiten(x)
    rebuilt = (x - res.mean) @ res.transform
    assert np.allclose(rebuilt, res.values, atol=1e-12)


def test_whiten_correlated_pair():
    rng = np.random.default_rng(32)
    a = rng.standard_normal(2000)
    b = 0.9 * a + np.sqrt(1.0 - 0.81) * rng.standard_normal(2000)
    res = whiten(np.column_stack([a, b]))
    cov = res.values.T @ res.values / 2000
    assert np.allclose(cov, np.eye(2), atol=1e-8)


def test_whiten_rank_deficient_warns():
    rng = np.random.default_rng(33)
    a = rng.standard_normal(300)
    x = np.column_stack([a, 2.0 * a, rng.standard_normal(300)])
    with pytest.warns(RuntimeWarning, match="rank-deficient"):
        res = whiten(x)
    assert np.all(np.isfinite(res.values))


def test_whiten_rejects_bad_shape():
    with pytest.raises(ValueError, match="N >= 2"):
        whiten(np.ones((1, 3)))
    with pytest.raises(ValueError):
        whiten(np.ones(5))


# -------------------------------------------------------------- fast_ica

def _mixed_uniform(seed, n_obs=4000, n=3):
    rng = np.random.default_rng(seed)
    s = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(n_obs, n))
    mixing = rng.standard_normal((n, n)) + 2.0 * np.eye(n)
    return s, s @ mixing.T


def test_fast_ica_rows_orthonormal():
    _, x = _mixed_uniform(34)
    res = fast_ica(x, seed=0)
    assert np.allclose(res.W @ res.W.T, np.eye(3), atol=1e-8)
    assert len(res.iterations) == 3 and len(res.converged) == 3
    assert all(res.converged)


def test_fast_ica_recovers_uniform_sources():
    s, x = _mixed_uniform(35)
    res = fast_ica(x, seed=1)
    e = res.whitening.values @ res.W.T
    corr = np.abs(np.corrcoef(e.T, s.T)[:3, 3:])
    hit = corr.argmax(axis=1)
    assert sorted(hit) == [0, 1, 2]
    assert np.all(corr.max(axis=1) > 0.95)


def test_fast_ica_deterministic():
    _, x = _mixed_uniform(36)
    a = fast_ica(x, seed=7)
    b = fast_ica(x, seed=7)
    assert np.array_equal(a.W, b.W)
    assert a.iterations == b.iterations


def test_fast_ica_component_count():
    _, x = _mixed_uniform(37, n_obs=500)
    res = fast_ica(x, seed=2, n_components=1)
    assert res.W.shape == (1, 3)
    with pytest.raises(ValueError, match="n_components"):
        fast_ica(x, seed=2, n_components=0)
    with pytest.raises(ValueError, match="n_components"):
        fast_ica(x, seed=2, n_components=4)


def test_fast_ica_unconverged_flag():
    _, x = _mixed_uniform(38, n_obs=800)
    res = fast_ica(x, seed=3, max_iter=1)
    assert res.converged == (False, False, False)
    assert res.iterations == (1, 1, 1)


# ---------------------------------------------------- generate_exogenous

def test_generate_exogenous_continuous():
    _, x = _mixed_uniform(39, n_obs=1000)
    d = _continuous(x)
    e = generate_exogenous(d, seed=4)
    assert e.values.shape == (1000, 3)
    assert not e.matched and e.permutation is None
    assert not e.binarized
    assert np.allclose(e.values, e.ica.whitening.values @ e.ica.W.T)


def test_generate_exogenous_binarizes_discrete():
    rng = np.random.default_rng(40)
    codes = rng.integers(0, 2, size=(500, 2)).astype(np.float64)
    d = Dataset(["a", "b"], ["discrete", "discrete"], codes)
    e = generate_exogenous(d, seed=5)
    assert e.binarized
    assert set(np.unique(e.values)) <= {0.0, 1.0}


# ----------------------------------------------------------- cost matrix

def test_build_cost_matrix_values():
    rng = np.random.default_rng(41)
    s0 = rng.uniform(size=1500)
    s1 = rng.uniform(size=1500)
    d = np.column_stack([s0, s1])
    e = np.column_stack([s1, s0])        # candidates are swapped copies
    c = build_cost_matrix(d, e, k=5, zero_eps=0.02)
    assert c.mi.shape == (2, 2)
    assert np.array_equal(c.costs, -c.mi)
    assert np.array_equal(c.infeasible, c.mi <= 0.02)
    assert c.mi[0, 1] > 1.0 and c.mi[1, 0] > 1.0
    assert abs(c.mi[0, 0]) < 0.05 and abs(c.mi[1, 1]) < 0.05
    assert c.infeasible[0, 0] and c.infeasible[1, 1]
    assert solve_assignment(c) == (1, 0)


def test_build_cost_matrix_row_mismatch():
    with pytest.raises(ValueError, match="row counts"):
        build_cost_matrix(np.ones((10, 2)), np.ones((9, 2)))


# ------------------------------------------------------ solve_assignment

def _cost(mi, zero_eps=0.01):
    mi = np.asarray(mi, dtype=np.float64)
    return CostMatrix(mi, mi <= zero_eps, zero_eps)


def test_solve_assignment_hand_example():
    c = _cost([[0.9, 0.1, 0.1],
               [0.1, 0.8, 0.1],
               [0.1, 0.1, 0.7]])
    assert solve_assignment(c) == (0, 1, 2)


def test_solve_assignment_infeasible_rows():
    # both candidates look like variable 0; row 1 has no real partner
    c = _cost([[0.9, 0.8],
               [0.001, 0.002]])
    with pytest.raises(AssignmentInfeasibleError, match="no feasible"):
        solve_assignment(c)
    try:
        solve_assignment(c)
    except AssignmentInfeasibleError as err:
        assert err.blocked_rows == (1,)


def test_solve_assignment_matches_brute_force():
    rng = np.random.default_rng(42)
    for _ in range(50):
        mi = rng.uniform(0.02, 1.0, size=(5, 5))
        mi[rng.random((5, 5)) < 0.25] = 0.001
        c = _cost(mi)
        best = brute_force_assignment(c.costs, c.infeasible)
        if best is None:
            with pytest.raises(AssignmentInfeasibleError):
                solve_assignment(c)
            continue
        perm = solve_assignment(c)
        got = sum(c.costs[i, perm[i]] for i in range(5))
        want = sum(c.costs[i, best[i]] for i in range(5))
        assert got == pytest.approx(want, abs=1e-9)


# ------------------------------------------------------- match_exogenous

def test_match_exogenous_recovers_shuffle():
    rng = np.random.default_rng(43)
    x = rng.uniform(size=(800, 4))
    d = _continuous(x)
    shuffled = ExogenousData(x[:, [2, 0, 3, 1]], matched=False,
                             permutation=None)
    matched = match_exogenous(d, shuffled, k=5)
    assert matched.matched
    assert matched.permutation == (1, 3, 0, 2)
    assert np.array_equal(matched.values, x)
    assert matched.ica is None and not matched.binarized


def test_match_exogenous_end_to_end():
    rng = np.random.default_rng(44)
    e0 = rng.uniform(-1.0, 1.0, size=3000)
    e1 = rng.uniform(-1.0, 1.0, size=3000)
    x0 = e0
    x1 = 0.9 * x0 + e1
    d = _continuous(np.column_stack([x0, x1]))
    cand = generate_exogenous(d, seed=6)
    matched = match_exogenous(d, cand, k=5)
    assert matched.matched and sorted(matched.permutation) == [0, 1]
    # the column matched to the root should still track its driver
    corr = abs(np.corrcoef(matched.values[:, 0], e0)[0, 1])
    assert corr > 0.9
