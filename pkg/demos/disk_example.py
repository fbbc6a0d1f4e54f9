"""Minimising ||x||^2 over the unit disk with at most one nonzero.

The origin is the unique minimiser.  In the relaxed (x, y) space it is
paired with many y; this script classifies one of them, walks through the
cone branches and shows why the second-order test certifies it.
"""
# %%
import numpy as np

from ccopt import problems
from ccopt.reformulation import PrimalPair, index_sets
from ccopt.secondorder import check_cc_sosc, critical_cone_branches, linearization_cone_member
from ccopt.stationarity import certify_s_stationary, cq_report

problem = problems.builtin("disk2d")
pair = PrimalPair([0.0, 0.0], [1.0, 0.0])
print("index sets:", index_sets(problem, pair).to_dict())

# %% first order
cert = certify_s_stationary(problem, pair)
print("kind", cert.kind, "residual", cert.residual)
print("multipliers", cert.multipliers.to_dict())
print("CQ", cq_report(problem, pair.x).to_dict())

# %% the relaxed feasible set is not convex near this pair
# moving y along e_2 keeps feasibility; moving x_1 does not
for d in [((0, 0), (0, 1)), ((1, 0), (0, 0)), ((0, 1), (0, 0))]:
    print(d, linearization_cone_member(problem, pair, d))

# %% second order
for b in critical_cone_branches(problem, pair, cert.multipliers, "pair"):
    print("branch with x_i = 0 on", b.zero_set, "dimension", b.span_basis().shape[1])
verdict = check_cc_sosc(problem, pair, "exists")
print("verdict:", verdict.status)
for rep in verdict.branch_reports:
    print("  ", rep["zero_set"], rep["method"], "passed" if rep["passed"] else "failed", rep["min_eig"])

# %% a sanity check on the claim: nothing nearby does better
rng = np.random.default_rng(0)
x = rng.uniform(-1e-3, 1e-3, size=(1000, 2))
x[np.arange(1000), rng.integers(0, 2, 1000)] = 0.0
print("smallest nearby f:", min(problem.objective(v) for v in x))
