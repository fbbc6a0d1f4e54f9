"""Cardinality-limited mean-variance portfolio.

The budget row and the sign constraints make the multiplier set
non-unique at most candidates: the sign constraint -x_i <= 0 and the
cardinality multiplier gamma_i act on the same coordinate.
"""
# %%
import numpy as np

from ccopt import problems
from ccopt.oracle import brute_force_solve
from ccopt.reformulation import PrimalPair, complete_y
from ccopt.scholtes import solve_path
from ccopt.secondorder import check_cc_sosc
from ccopt.stationarity import cq_report, multiplier_set_vertices

p = problems.builtin("portfolio", n=6, kappa=3, seed=0)

# %%
oracle = brute_force_solve(p, starts_per_support=2)
best = sorted((c for c in oracle.candidates if c.feasible), key=lambda c: c.f)[:5]
for c in best:
    print(np.round(c.x, 4), f"f = {c.f:.6f}")

# %%
x = oracle.best_x
print("CQ at optimum:", cq_report(p, x).to_dict())
ms = multiplier_set_vertices(p, x, "M")
print(len(ms), "multiplier vertices, bounded:", ms.bounded)
print("SOSC:", check_cc_sosc(p, PrimalPair(x, complete_y(p, x)), "exists").status)

# %%
path = solve_path(p, np.full(6, 1 / 6))
print("path limit", np.round(path.x, 4), f"gap {path.f - oracle.best_f:.1e}")
