import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccopt.errors import PathStalled
from ccopt.nlp import NlpOptions, violation
from ccopt.problems import builtin
from ccopt.reformulation import PrimalPair, is_feasible_reformulation
from ccopt.scholtes import PathOptions, build_nlpt, kkt_residual_nlpt, solve_path
from ccopt.stationarity import Multipliers


def feasible_nlpt(problem, t, pair, tol=1e-12):
    spec = build_nlpt(problem, t)
    z = np.r_[pair.x, pair.y]
    return violation(spec, z) <= tol and np.all(pair.y >= 0) and np.all(pair.y <= 1)


def test_build_nlpt_counts(disk):
    spec = build_nlpt(disk, 0.1)
    assert spec.dim == 4
    assert spec.n_ineq == 1 + 2 * 2 + 1
    assert spec.n_eq == 0


def test_negative_t_rejected(disk):
    with pytest.raises(ValueError):
        build_nlpt(disk, -1.0)


def test_boundary_point_feasible(dist):
    pair = PrimalPair([0.15, 0, 2], [1, 1, 0])
    assert feasible_nlpt(dist, 0.15, pair, tol=1e-15)
    assert not feasible_nlpt(dist, 0.149, pair, tol=1e-15)


def test_sum_row_counts_against_sparse_y(dist):
    # x2 y2 <= t and x3 y3 <= t cap e'y well below n - kappa = 2
    pair = PrimalPair([0.15, 1, 2], [1, 0, 0])
    spec = build_nlpt(dist, 0.15)
    c = spec.c_ineq(np.r_[pair.x, pair.y])
    assert np.all(c[:-1] <= 1e-15)
    assert c[-1] == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_t_zero_recovers_reformulation(seed):
    rng = np.random.default_rng(seed)
    p = builtin("dist3d")
    x = rng.choice([0.0, 1.0], 3) * rng.uniform(-2, 2, 3)
    y = rng.choice([0.0, 1.0, rng.uniform()], 3)
    pair = PrimalPair(x, y)
    assert feasible_nlpt(p, 0.0, pair) == is_feasible_reformulation(p, pair)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_feasibility_nesting(seed, t1, t2):
    rng = np.random.default_rng(seed)
    p = builtin("dist3d")
    pair = PrimalPair(rng.uniform(-1, 1, 3) * 0.5, rng.uniform(0, 1, 3))
    lo, hi = sorted((t1, t2))
    if feasible_nlpt(p, lo, pair):
        assert feasible_nlpt(p, hi, pair)


def test_kkt_residual_at_disk_origin(disk):
    pair = PrimalPair([0, 0], [1, 0])
    assert kkt_residual_nlpt(disk, 0.1, pair) == 0.0


def test_kkt_residual_lipschitz_in_multiplier(dist):
    pair = PrimalPair([0.05, 0.0, 2.0], [1.0, 1.0, 0.0])
    spec = build_nlpt(dist, 0.1)

    class M:
        lam_ineq = np.zeros(spec.n_ineq)
        lam_eq = np.zeros(0)

    base = kkt_residual_nlpt(dist, 0.1, pair, M)
    delta = 1e-3
    M.lam_ineq = M.lam_ineq.copy()
    M.lam_ineq[0] = delta
    row = np.abs(spec.jac_ineq(np.r_[pair.x, pair.y])[0]).max()
    assert abs(kkt_residual_nlpt(dist, 0.1, pair, M) - base) <= row * delta + 1e-15


def test_path_dist3d_example(dist):
    path = solve_path(dist, np.array([0.5, 0.9, 1.9]))
    np.testing.assert_allclose(path.x, [0, 0, 2], atol=1e-10)
    assert path.f == pytest.approx(1.0)
    assert path.final_certificate.kind == "S"


def test_path_disk_example(disk):
    path = solve_path(disk, np.array([0.3, 0.3]))
    np.testing.assert_array_equal(path.x, [0, 0])
    assert path.f == 0.0
    assert path.final_certificate.kind == "S"


def test_path_leaves_origin(dist):
    nopts = NlpOptions(stat_tol=1e-10, feas_tol=1e-10)
    path = solve_path(dist, PrimalPair(np.zeros(3), np.ones(3)), nopts=nopts)
    assert any(np.allclose(path.x, v, atol=1e-6) for v in ([0, 0, 2], [0, 1, 0]))


def test_path_entries_monotone(dist):
    path = solve_path(dist, np.array([1.0, 1.0, 1.0]))
    ts = [e.t for e in path.entries]
    assert all(a > b for a, b in zip(ts, ts[1:]))
    for e in path.entries:
        if e.status == "converged":
            assert e.comp_violation <= e.t * (1 + 1e-8)


def test_first_entry_from_feasible_start_is_kkt(dist):
    path = solve_path(dist, np.array([0.0, 0.0, 1.5]))
    first = path.entries[0]
    assert first.status == "converged"
    assert first.kkt_residual <= NlpOptions().stat_tol


def test_path_stalls_with_floor_too_high(dist):
    with pytest.raises(PathStalled) as info:
        solve_path(dist, np.array([1.0, 1.0, 1.0]), PathOptions(t0=1.0, t_min=0.5))
    assert info.value.path is not None and len(info.value.path.entries) == 1


def test_path_options_validated():
    with pytest.raises(ValueError):
        PathOptions(sigma=1.5)
    with pytest.raises(ValueError):
        PathOptions(t0=1e-12)


@pytest.mark.parametrize("name,params", [("disk2d", {}), ("dist3d", {}),
                                         ("sparse_lsq", {"n": 6, "kappa": 2, "seed": 3}),
                                         ("portfolio", {"n": 6, "kappa": 3, "seed": 2})])
def test_limit_certification(name, params):
    p = builtin(name, **params)
    path = solve_path(p, np.random.default_rng(0).standard_normal(p.n))
    if path.cq_report.cc_mfcq:
        assert path.final_certificate.kind == "S"
        assert path.final_certificate.residual <= 1e-6


def test_jsonl_records(dist):
    path = solve_path(dist, np.array([0.5, 0.9, 1.9]))
    lines = path.to_jsonl().strip().split("\n")
    recs = [json.loads(line) for line in lines]
    assert recs[-1]["record"] == "final"
    assert all(r["record"] == "step" for r in recs[:-1])
    assert recs[-1]["certificate"]["kind"] == "S"
