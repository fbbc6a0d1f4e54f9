"""Projecting (0, 1, 2) onto the one-sparse vectors.

The three candidate points (0, 0, 2), (0, 1, 0) and the origin are all
M-stationary.  Only the first two are local minimisers, and the
regularization path never stops at the third.
"""
# %%
import numpy as np

from ccopt import problems
from ccopt.oracle import brute_force_solve
from ccopt.reformulation import PrimalPair
from ccopt.scholtes import solve_path
from ccopt.secondorder import check_cc_sosc
from ccopt.stationarity import certify_m_stationary

problem = problems.builtin("dist3d")

# %% ground truth by enumeration of supports
oracle = brute_force_solve(problem)
for c in oracle.candidates:
    print(c.support, np.round(c.x, 8), "f =", round(c.f, 8), "M" if c.m_stationary else "-")

# %% the origin: M-stationary, but gamma = (0, 2, 4) pushes it away
cert = certify_m_stationary(problem, np.zeros(3))
print("origin:", cert.kind, cert.multipliers.gamma)
# paired with y = (1, 1, 1) every x_i is pinned to zero, so the pair is a
# strict local minimiser of the relaxed problem in (x, y) ...
v = check_cc_sosc(problem, PrimalPair(np.zeros(3), np.ones(3)), "exists")
print("origin with y = (1, 1, 1):", v.status)
# ... but x itself is not a local minimiser of the original problem
print("f(0, 0, 1e-3) - f(0) =", problem.objective(np.array([0, 0, 1e-3])) - problem.objective(np.zeros(3)))

# %% one path, step by step
path = solve_path(problem, np.array([0.5, 0.9, 1.9]))
for e in path.entries:
    print(f"t={e.t:8.1e}  x={np.round(e.x, 6)}  |x*y|={e.comp_violation:.1e}")
print("limit", path.x, path.final_certificate.kind)

# %% many random starts
rng = np.random.default_rng(1)
ends = [tuple(np.round(solve_path(problem, rng.uniform(-1, 3, 3)).x, 6).tolist()) for _ in range(20)]
for point in sorted(set(ends)):
    print(point, ends.count(point))
