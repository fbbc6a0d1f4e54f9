import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccopt.nlp import NlpOptions, NlpSpec, kkt_residual, solve_nlp, solve_restricted
from ccopt.problems import builtin


def quad_spec(Q, c, A_eq=None, b_eq=None, A_in=None, b_in=None, lo=None, hi=None):
    n = len(c)
    A_eq = np.zeros((0, n)) if A_eq is None else A_eq
    b_eq = np.zeros(0) if b_eq is None else b_eq
    A_in = np.zeros((0, n)) if A_in is None else A_in
    b_in = np.zeros(0) if b_in is None else b_in
    return NlpSpec(
        dim=n, f=lambda z: 0.5 * z @ Q @ z + c @ z, grad=lambda z: Q @ z + c,
        c_ineq=lambda z: A_in @ z - b_in, jac_ineq=lambda z: A_in,
        c_eq=lambda z: A_eq @ z - b_eq, jac_eq=lambda z: A_eq,
        lo=lo, hi=hi, hess_lag=lambda z, lam, mu: Q,
        n_ineq=A_in.shape[0], n_eq=A_eq.shape[0])


def test_unconstrained_quadratic():
    res = solve_nlp(quad_spec(2 * np.eye(2), np.array([-2.0, -4.0])), np.zeros(2))
    assert res.converged
    np.testing.assert_allclose(res.z, [1, 2], atol=1e-8)
    assert res.kkt_residual <= 1e-8


def test_linear_objective_over_disk():
    spec = NlpSpec(dim=2, f=lambda z: z.sum(), grad=lambda z: np.ones(2),
                   c_ineq=lambda z: np.array([z @ z - 1]), jac_ineq=lambda z: 2 * z[None, :],
                   hess_lag=lambda z, lam, mu: 2 * lam[0] * np.eye(2), n_ineq=1)
    res = solve_nlp(spec, np.zeros(2))
    assert res.converged
    np.testing.assert_allclose(res.z, [-np.sqrt(0.5)] * 2, atol=1e-6)
    assert res.lam_ineq[0] == pytest.approx(np.sqrt(0.5), abs=1e-4)


def test_equality_constrained_minimum_norm():
    res = solve_nlp(quad_spec(2 * np.eye(2), np.zeros(2), np.ones((1, 2)), np.ones(1)), np.zeros(2))
    assert res.converged
    np.testing.assert_allclose(res.z, [0.5, 0.5], atol=1e-8)
    assert res.lam_eq[0] == pytest.approx(-1.0, abs=1e-6)


def test_box_bounds_respected():
    spec = quad_spec(2 * np.eye(2), np.array([-4.0, 2.0]), lo=np.zeros(2), hi=np.ones(2))
    res = solve_nlp(spec, np.array([5.0, -5.0]))
    assert res.converged
    np.testing.assert_allclose(res.z, [1.0, 0.0], atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_equality_qp_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    n, p = rng.integers(2, 6), rng.integers(0, 2)
    B = rng.standard_normal((n, n))
    Q = B @ B.T + 0.5 * np.eye(n)
    c = rng.standard_normal(n)
    A = rng.standard_normal((p, n))
    b = rng.standard_normal(p)
    K = np.block([[Q, A.T], [A, np.zeros((p, p))]])
    z_star = np.linalg.solve(K, np.r_[-c, b])[:n]
    res = solve_nlp(quad_spec(Q, c, A, b), rng.standard_normal(n))
    assert res.converged
    assert np.max(np.abs(res.z - z_star)) <= 1e-5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_inequality_multipliers_nonnegative_and_complementary(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 3
    Q = 2 * np.eye(n)
    c = rng.standard_normal(n) * 3
    A = rng.standard_normal((m, n))
    b = rng.uniform(0.1, 1.0, m)
    spec = quad_spec(Q, c, A_in=A, b_in=b)
    res = solve_nlp(spec, np.zeros(n))
    assert res.converged
    assert np.all(res.lam_ineq >= 0)
    assert np.all(res.lam_ineq * np.maximum(A @ res.z - b, 0) <= 1e-8)
    assert kkt_residual(spec, res.z, res.lam_ineq, res.lam_eq) <= 1e-8


def test_determinism():
    spec = quad_spec(2 * np.eye(3), np.array([1.0, -2.0, 0.5]), A_in=np.ones((1, 3)), b_in=np.zeros(1))
    a, b = solve_nlp(spec, np.ones(3)), solve_nlp(spec, np.ones(3))
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.lam_ineq, b.lam_ineq)


def test_infeasible_problem_reports_status():
    spec = quad_spec(np.eye(1), np.zeros(1), A_in=np.array([[1.0], [-1.0]]), b_in=np.array([-1.0, -1.0]))
    res = solve_nlp(spec, np.zeros(1), NlpOptions(max_outer=30))
    assert not res.converged
    assert res.status in ("infeasible_stall", "iteration_limit")


@pytest.mark.parametrize("support,x,f", [((2,), [0, 0, 2], 1.0), ((1,), [0, 1, 0], 4.0), ((), [0, 0, 0], 5.0)])
def test_restricted_dist3d(dist, support, x, f):
    res = solve_restricted(dist, support)
    assert res.converged
    np.testing.assert_allclose(res.info["x"], x, atol=1e-8)
    assert res.f == pytest.approx(f, abs=1e-8)
    off = [i for i in range(3) if i not in support]
    assert np.all(res.info["x"][off] == 0.0)


def test_restricted_rejects_large_support(dist):
    with pytest.raises(ValueError):
        solve_restricted(dist, (0, 1))


def test_restricted_portfolio_keeps_budget():
    p = builtin("portfolio", n=5, kappa=2, seed=3)
    res = solve_restricted(p, (1, 3), start=np.full(5, 0.5))
    assert res.converged
    x = res.info["x"]
    assert abs(x.sum() - 1) <= 1e-8 and np.all(x >= -1e-8)
