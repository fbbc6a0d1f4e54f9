import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccopt.errors import ClassificationError, InfeasibleInput
from ccopt.model import Problem
from ccopt.problems import builtin
from ccopt.reformulation import (
    PrimalPair,
    Tolerances,
    complete_y,
    index_sets,
    is_feasible_original,
    is_feasible_reformulation,
    sample_feasible_near,
    vertex_completions,
)


def free_problem(n, kappa):
    return Problem.from_quadratic(Q=np.eye(n), c=np.zeros(n), kappa=kappa)


@st.composite
def feasible_pairs(draw):
    """Random feasible (x, y) including fractional y on zero coordinates."""
    n = draw(st.integers(2, 8))
    kappa = draw(st.integers(1, n - 1))
    s = draw(st.integers(0, kappa))
    supp = draw(st.permutations(range(n)))[:s]
    x = np.zeros(n)
    for i in supp:
        x[i] = draw(st.floats(0.1, 3.0)) * draw(st.sampled_from([-1.0, 1.0]))
    y = np.zeros(n)
    zeros = [i for i in range(n) if i not in supp]
    for i in zeros:
        y[i] = draw(st.sampled_from([0.0, 1.0, 0.5, 0.25]))
    # raise entries until the sum bound holds
    for i in zeros:
        if y.sum() >= n - kappa:
            break
        y[i] = 1.0
    return free_problem(n, kappa), PrimalPair(x, y)


def test_index_sets_disk_example(disk):
    s = index_sets(disk, PrimalPair([0, 0], [1, 0]))
    assert s.I_g == () and s.I_0 == (0, 1)
    assert s.I_01 == (0,) and s.I_00 == (1,)
    assert s.I_pm0 == () and s.I_0plus == ()
    assert s.card_active


def test_index_sets_dist_minimum(dist):
    s = index_sets(dist, PrimalPair([0, 0, 2], [1, 1, 0]))
    assert s.I_pm0 == (2,) and s.I_01 == (0, 1)
    assert s.I_00 == () and s.I_0plus == ()
    assert s.card_active


def test_index_sets_dist_origin(dist):
    s = index_sets(dist, PrimalPair([0, 0, 0], [1, 1, 1]))
    assert s.I_01 == (0, 1, 2)
    assert not s.card_active


def test_index_sets_rejects_y_out_of_range(disk):
    with pytest.raises(ClassificationError):
        index_sets(disk, PrimalPair([0, 0], [1.5, 0]))


def test_active_inequality_detection(disk):
    assert index_sets(disk, PrimalPair([1, 0], [0, 1])).I_g == (0,)


def test_feasible_original_examples(dist, disk):
    assert is_feasible_original(dist, np.array([0, 0, 2.0]))
    assert not is_feasible_original(dist, np.array([0, 1, 2.0]))
    assert is_feasible_original(disk, np.array([0, 0.5]))
    assert not is_feasible_original(disk, np.array([0, 1.5]))


def test_feasible_reformulation_examples(disk):
    assert is_feasible_reformulation(disk, PrimalPair([0, 0], [1, 0]))
    assert not is_feasible_reformulation(disk, PrimalPair([1, 0], [1, 0]))
    assert not is_feasible_reformulation(disk, PrimalPair([0, 0], [0.4, 0.4]))


def test_complete_y_examples(dist):
    np.testing.assert_array_equal(complete_y(dist, np.array([0, 0, 2.0])), [1, 1, 0])
    np.testing.assert_array_equal(complete_y(dist, np.zeros(3)), [1, 1, 1])
    with pytest.raises(InfeasibleInput):
        complete_y(dist, np.array([0, 1, 2.0]))


def test_vertex_completions_of_origin(dist):
    ys = vertex_completions(dist, np.zeros(3))
    np.testing.assert_array_equal(ys[0], complete_y(dist, np.zeros(3)))
    assert len(ys) == 1 + 3
    assert all(is_feasible_reformulation(dist, PrimalPair(np.zeros(3), y)) for y in ys)


@settings(max_examples=200, deadline=None)
@given(feasible_pairs())
def test_index_sets_partition(data):
    problem, pair = data
    s = index_sets(problem, pair)
    parts = [set(s.I_pm0), set(s.I_00), set(s.I_0plus), set(s.I_01)]
    assert sum(len(p) for p in parts) == problem.n
    assert set().union(*parts) == set(range(problem.n))
    assert set(s.I_0) == set(s.I_00) | set(s.I_0plus) | set(s.I_01)


@settings(max_examples=200, deadline=None)
@given(feasible_pairs())
def test_completion_is_feasible(data):
    problem, pair = data
    y = complete_y(problem, pair.x)
    assert is_feasible_reformulation(problem, PrimalPair(pair.x, y))
    assert y.sum() == problem.n - np.count_nonzero(pair.x)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=2), st.floats(1e-9, 1e-2), st.floats(1e-9, 1e-2))
def test_shrinking_act_tol_never_enlarges_active_set(xs, a, b):
    problem = builtin("disk2d")
    x = np.array(xs)
    x[np.argmin(np.abs(x))] = 0.0
    x = x / max(1.0, np.linalg.norm(x)) * 0.9999999
    pair = PrimalPair(x, complete_y(problem, x))
    lo, hi = sorted((a, b))
    small = index_sets(problem, pair, Tolerances(act_tol=lo)).I_g
    large = index_sets(problem, pair, Tolerances(act_tol=hi)).I_g
    assert set(small) <= set(large)


def test_sample_feasible_near_stays_in_ball():
    p = builtin("portfolio", n=5, kappa=2, seed=1)
    x = np.array([0.4, 0.6, 0, 0, 0])
    pair = PrimalPair(x, complete_y(p, x))
    samples = sample_feasible_near(p, pair, 1e-3, 100, np.random.default_rng(0))
    assert len(samples) == 100
    for s in samples:
        assert np.max(np.abs(s.x - x)) <= 1e-3
        assert np.max(np.abs(s.y - pair.y)) <= 1e-3
        assert is_feasible_reformulation(p, s)
