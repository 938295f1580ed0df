"""Markov blanket recovery: forward, backward and symmetry phases."""

import numpy as np
import pytest

from eembi.blankets import (MarkovBlankets, backward_phase, forward_phase,
                            improved_iamb, symmetry_check)
from eembi.data import Dataset
from eembi.graph import Graph, markov_blanket
from eembi.simulate import linear_gaussian_scm, oracle_ci, random_dag, sample


class CountingOracle:
    """Wraps an estimator-shaped callable to expose the variable count."""

    def __init__(self, fn, n_vars):
        self.fn = fn
        self.n_vars = n_vars
        self.calls = 0

    def __call__(self, x, y, z=()):
        self.calls += 1
        return self.fn(x, y, z)


# --- oracle traces --------------------------------------------------------

def test_forward_phase_on_a_chain_stops_at_the_neighbor():
    chain = Graph(3, directed=[(0, 1), (1, 2)])
    assert forward_phase(None, 0, cmi=oracle_ci(chain)) == {1}


def test_forward_phase_collider_picks_up_the_spouse():
    collider = Graph(3, directed=[(0, 2), (1, 2)])
    # 2 enters first; conditioning on the collider activates 1
    assert forward_phase(None, 0, cmi=oracle_ci(collider)) == {2, 1}


def test_forward_phase_high_alpha_returns_nothing():
    chain = Graph(3, directed=[(0, 1), (1, 2)])
    assert forward_phase(None, 0, alpha=2.0, cmi=oracle_ci(chain)) == set()


def test_forward_phase_breaks_ties_toward_lower_index():
    always_one = CountingOracle(lambda x, y, z: 1.0, 4)
    # every candidate ties at 1.0, so additions happen in index order
    trace = []
    real_fn = always_one.fn

    def spy(x, y, z):
        trace.append(y[0])
        return real_fn(x, y, z)

    always_one.fn = spy
    got = forward_phase(None, 0, cmi=always_one)
    assert got == {1, 2, 3}
    assert trace[:3] == [1, 2, 3]  # first sweep scans in index order


def test_backward_phase_removes_planted_false_positive():
    chain = Graph(4, directed=[(0, 1), (1, 2), (2, 3)])
    kept = backward_phase(None, 0, [1, 3], cmi=oracle_ci(chain))
    assert kept == {1}


def test_backward_phase_keeps_true_blanket():
    collider = Graph(3, directed=[(0, 2), (1, 2)])
    assert backward_phase(None, 0, [1, 2], cmi=oracle_ci(collider)) == {1, 2}


# --- symmetry check --------------------------------------------------------

def test_symmetry_check_removes_one_sided_memberships():
    got = symmetry_check([{1}, set()])
    assert got.members == (frozenset(), frozenset())


def test_symmetry_check_is_a_fixed_point_on_symmetric_input():
    got = symmetry_check([{1}, {0, 2}, {1}])
    assert got.members == (frozenset({1}), frozenset({0, 2}), frozenset({1}))
    assert got.is_symmetric()


def test_symmetry_check_reads_a_frozen_snapshot():
    # 3 lists 1, but 1 does not list 3; removing it must not disturb (0,1)
    got = symmetry_check([{1}, {0}, set(), {1}])
    assert got.members == (frozenset({1}), frozenset({0}), frozenset(),
                           frozenset())


def test_symmetry_check_validates_members():
    with pytest.raises(ValueError):
        symmetry_check([{0}, set()])   # self-membership
    with pytest.raises(ValueError):
        symmetry_check([{5}, set()])   # out of range


# --- full procedure ---------------------------------------------------------

def test_improved_iamb_is_exact_under_the_oracle():
    rng = np.random.default_rng(20)
    for trial in range(30):
        n = int(rng.integers(4, 9))
        dag = random_dag(n, float(rng.choice([0.2, 0.4])), seed=400 + trial)
        got = improved_iamb(None, cmi=oracle_ci(dag))
        want = tuple(markov_blanket(dag, i) for i in range(n))
        assert got.members == want
        assert got.is_symmetric()


def test_improved_iamb_worst_case_evaluation_budget():
    # an always-dependent oracle forces maximal forward growth
    n = 12
    est = CountingOracle(lambda x, y, z: 1.0, n)
    got = improved_iamb(None, cmi=est)
    assert all(b == frozenset(set(range(n)) - {i})
               for i, b in enumerate(got.members))
    assert est.calls <= 2 * n ** 3


def test_improved_iamb_on_a_sampled_linear_chain():
    chain = Graph(3, directed=[(0, 1), (1, 2)])
    scm = linear_gaussian_scm(chain, seed=21)
    d = sample(scm, 5000, seed=22)
    got = improved_iamb(d)
    assert got[1] == {0, 2}


def test_improved_iamb_on_independent_columns_is_empty():
    rng = np.random.default_rng(23)
    d = Dataset([f"x{i}" for i in range(5)], ["continuous"] * 5,
                rng.standard_normal((2000, 5)))
    got = improved_iamb(d)
    assert all(b == frozenset() for b in got.members)


def test_markov_blankets_container():
    mb = MarkovBlankets((frozenset({1}), frozenset({0})))
    assert len(mb) == 2 and mb[0] == {1}
    assert list(mb) == [frozenset({1}), frozenset({0})]
