"""Support-enumeration oracle.

Every support ``S`` with ``|S| <= kappa`` defines a smooth program in the
variables ``x_S``.  Solving all of them from a few starts gives, at desk
scale, the full list of M-stationary points together with the global
minimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .errors import EnumerationLimit
from .nlp import NlpOptions, solve_restricted
from .reformulation import DEFAULT_TOLS, is_feasible_original
from .stationarity import certify_m_stationary

SUPPORT_CAP = 10 ** 6
DEDUP_TOL = 1e-6


def count_supports(n, kappa):
    return sum(comb(n, s) for s in range(kappa + 1))


def enumerate_supports(n, kappa, cap=SUPPORT_CAP):
    """All subsets of ``range(n)`` of size at most ``kappa``.

    Ordered by size, then lexicographically.  Raises
    :class:`EnumerationLimit` when there are more than ``cap``.
    """
    if not 0 < kappa < n:
        raise ValueError("need 0 < kappa < n")
    total = count_supports(n, kappa)
    if total > cap:
        raise EnumerationLimit(f"{total} supports exceed cap {cap:g}")
    return [s for size in range(kappa + 1) for s in combinations(range(n), size)]


@dataclass
class Candidate:
    support: tuple
    x: np.ndarray
    f: float
    m_residual: float
    status: str
    m_stationary: bool
    feasible: bool

    def to_dict(self):
        return {"support": list(self.support), "x": self.x.tolist(), "f": self.f,
                "m_residual": self.m_residual, "status": self.status,
                "m_stationary": self.m_stationary, "feasible": self.feasible}


@dataclass
class OracleResult:
    best_x: np.ndarray
    best_f: float
    candidates: list = field(default_factory=list)
    enumerated_supports: int = 0
    seed: int = 0
    failures: list = field(default_factory=list)

    @property
    def m_points(self):
        return [c.x for c in self.candidates if c.m_stationary]

    def to_dict(self):
        return {
            "best_x": None if self.best_x is None else self.best_x.tolist(),
            "best_f": self.best_f,
            "enumerated_supports": self.enumerated_supports,
            "seed": self.seed,
            "candidates": [c.to_dict() for c in self.candidates],
            "failures": self.failures,
        }


def brute_force_solve(problem, starts_per_support=3, seed=0, nopts=None, tols=DEFAULT_TOLS,
                      cap=SUPPORT_CAP):
    """Solve the restricted program on every support from seeded starts.

    Parameters
    ----------
    problem : Problem
    starts_per_support : int
        Standard Gaussian starts per support; the empty support needs none.
    seed : int
        Seed of the start generator.  Results are deterministic in it.
    nopts : NlpOptions, optional

    Returns
    -------
    OracleResult
        Converged points deduplicated at ``1e-6`` in the max norm (first
        found wins), each certified for M-stationarity.  ``best_x`` is the
        feasible candidate with least objective.
    """
    nopts = nopts or NlpOptions()
    supports = enumerate_supports(problem.n, problem.kappa, cap)
    rng = np.random.default_rng(seed)
    candidates, failures = [], []
    for S in supports:
        starts = [None] if not S else list(rng.standard_normal((starts_per_support, problem.n)))
        for x0 in starts:
            res = solve_restricted(problem, S, start=x0, opts=nopts)
            x = res.info["x"]
            if not res.converged:
                failures.append({"support": list(S), "status": res.status,
                                 "violation": res.violation, "kkt_residual": res.kkt_residual})
                continue
            if any(np.max(np.abs(c.x - x)) <= DEDUP_TOL for c in candidates):
                continue
            cert = certify_m_stationary(problem, x, tols)
            candidates.append(Candidate(
                support=S, x=x, f=problem.objective(x), m_residual=cert.residual,
                status=res.status, m_stationary=cert.kind != "none",
                feasible=is_feasible_original(problem, x, tols)))
    feasible = [c for c in candidates if c.feasible]
    best = min(feasible, key=lambda c: c.f) if feasible else None
    return OracleResult(
        best_x=None if best is None else best.x.copy(),
        best_f=float("nan") if best is None else best.f,
        candidates=candidates, enumerated_supports=len(supports), seed=seed, failures=failures)


def m_points_in_ball(problem, center, radius, nopts=None, oracle=None, **kw):
    """M-stationary oracle candidates within Euclidean ``radius`` of ``center``.

    A precomputed :class:`OracleResult` may be passed to skip the solves;
    extra keywords go to :func:`brute_force_solve`.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    center = np.asarray(center, dtype=float)
    if oracle is None:
        oracle = brute_force_solve(problem, nopts=nopts, **kw)
    return [x for x in oracle.m_points if np.linalg.norm(x - center) <= radius]
