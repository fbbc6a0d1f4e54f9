"""Best-subset least squares: regularization path against enumeration.

For a handful of random instances the path limit is compared with the
global optimum found by solving every support.  Near-ties between
supports also show up here; they are why isolation of M-stationary points
can only hold in a small enough ball.
"""
# %%
import numpy as np

from ccopt import problems
from ccopt.oracle import brute_force_solve
from ccopt.scholtes import solve_path
from ccopt.stationarity import certify_s_stationary, check_cc_mfcq
from ccopt.reformulation import PrimalPair

# %%
for seed in range(6):
    p = problems.builtin("sparse_lsq", n=7, kappa=2, seed=seed)
    oracle = brute_force_solve(p)
    path = solve_path(p, np.zeros(p.n))
    cert = certify_s_stationary(p, PrimalPair(path.x, path.y))
    true = np.flatnonzero(p.meta["x_true"])
    print(f"seed {seed}: true support {true.tolist()}, path support "
          f"{np.flatnonzero(path.x).tolist()}, gap {path.f - oracle.best_f:.1e}, "
          f"{cert.kind} res {cert.residual:.1e}, MFCQ {check_cc_mfcq(p, path.x)[0]}")

# %% closest pair of M-stationary points per instance
for seed in range(6):
    p = problems.builtin("sparse_lsq", n=7, kappa=2, seed=seed)
    pts = brute_force_solve(p).m_points
    gaps = [np.linalg.norm(a - b) for i, a in enumerate(pts) for b in pts[i + 1:]]
    print(f"seed {seed}: {len(pts)} M-points, closest pair {min(gaps):.3g}")
