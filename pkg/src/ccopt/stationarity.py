"""First-order certification: M-/S-stationarity, multipliers and CQ checks.

Multipliers are stored at full length: ``lam`` (m), ``mu`` (p) and
``gamma`` (n), with zeros wherever the sign/support pattern forces them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import EnumerationLimit, InfeasibleInput, SubproblemFailure
from .reformulation import (
    DEFAULT_TOLS,
    active_ineq,
    index_sets,
    is_feasible_original,
    is_feasible_reformulation,
    zero_set,
)

VERTEX_CAP = 10_000


@dataclass
class Multipliers:
    lam: np.ndarray
    mu: np.ndarray
    gamma: np.ndarray

    def to_dict(self):
        return {"lambda": self.lam.tolist(), "mu": self.mu.tolist(), "gamma": self.gamma.tolist()}

    @classmethod
    def zeros(cls, problem):
        return cls(np.zeros(problem.m), np.zeros(problem.p), np.zeros(problem.n))


@dataclass
class StationarityCertificate:
    kind: str                      # "S", "M" or "none"
    multipliers: Optional[Multipliers]
    residual: float
    unique_multiplier: str         # "yes", "no" or "unknown"
    tol: float = 0.0

    def to_dict(self):
        out = {"kind": self.kind, "residual": self.residual,
               "unique_multiplier": self.unique_multiplier}
        if self.multipliers is not None:
            out.update(self.multipliers.to_dict())
        return out


@dataclass
class CqReport:
    cc_licq: bool
    sigma_min: float
    cc_mfcq: bool
    witness: Optional[Multipliers] = None

    def to_dict(self):
        return {"cc_licq": self.cc_licq, "cc_mfcq": self.cc_mfcq,
                "sigma_min": self.sigma_min,
                "witness": None if self.witness is None else self.witness.to_dict()}


@dataclass
class _System:
    """grad + G @ lam_act + F @ nu = 0, with lam_act >= 0 and nu free."""

    grad: np.ndarray
    G: np.ndarray
    F: np.ndarray
    ineq_idx: tuple
    gamma_idx: tuple

    def expand(self, problem, lam_act, nu):
        lam = np.zeros(problem.m)
        lam[list(self.ineq_idx)] = lam_act
        mu = nu[: problem.p].copy()
        gamma = np.zeros(problem.n)
        gamma[list(self.gamma_idx)] = nu[problem.p:]
        return Multipliers(lam, mu, gamma)


def _system(problem, x, gamma_idx, tols):
    I_g = active_ineq(problem, x, tols)
    grad = problem.gradient(x)
    G = problem.ineq_jac(x)[list(I_g)].T.reshape(problem.n, len(I_g))
    E = np.eye(problem.n)[:, list(gamma_idx)]
    F = np.hstack([problem.eq_jac(x).T.reshape(problem.n, problem.p), E])
    return _System(grad, G, F, I_g, tuple(gamma_idx))


def stat_tolerance(grad, tols=DEFAULT_TOLS):
    return tols.stat_tol * (1.0 + float(np.max(np.abs(grad), initial=0.0)))


def _rank(M, tols):
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tols.rank_tol * max(1.0, s[0])))


def _solve_system(sys, tols):
    """Least-squares multipliers: min ||grad + G lam + F nu|| over lam >= 0."""
    n = sys.grad.size
    if sys.F.shape[1]:
        Fpinv = np.linalg.pinv(sys.F, rcond=1e-12)
        P = np.eye(n) - sys.F @ Fpinv
    else:
        Fpinv = np.zeros((0, n))
        P = np.eye(n)
    if sys.G.shape[1]:
        try:
            lam, _ = nnls(P @ sys.G, -(P @ sys.grad), maxiter=50 * max(1, sys.G.shape[1]))
        except RuntimeError as exc:
            raise SubproblemFailure(f"NNLS did not converge: {exc}") from exc
    else:
        lam = np.zeros(0)
    rhs = sys.grad + sys.G @ lam
    nu = -Fpinv @ rhs
    resid = rhs + sys.F @ nu
    return lam, nu, float(np.max(np.abs(resid), initial=0.0))


def _uniqueness(sys, tols):
    ncols = sys.G.shape[1] + sys.F.shape[1]
    if ncols == 0:
        return "yes"
    if _rank(np.hstack([sys.G, sys.F]), tols) == ncols:
        return "yes"
    if _rank(sys.F, tols) < sys.F.shape[1]:
        return "no"
    return "unknown"


def _certify(problem, x, gamma_idx, kind, tols):
    sys = _system(problem, x, gamma_idx, tols)
    lam, nu, resid = _solve_system(sys, tols)
    tol = stat_tolerance(sys.grad, tols)
    ok = resid <= tol
    return StationarityCertificate(
        kind=kind if ok else "none",
        multipliers=sys.expand(problem, lam, nu),
        residual=resid,
        unique_multiplier=_uniqueness(sys, tols),
        tol=tol,
    )


def certify_m_stationary(problem, x, tols=DEFAULT_TOLS):
    """Decide M-stationarity of ``x`` (independent of any y).

    The multipliers minimise the Euclidean norm of the stationarity
    residual; ``residual`` reports its max-norm.
    """
    x = np.asarray(x, dtype=float)
    if not is_feasible_original(problem, x, tols):
        raise InfeasibleInput("x is not feasible")
    return _certify(problem, x, zero_set(x, tols), "M", tols)


def certify_s_stationary(problem, pair, tols=DEFAULT_TOLS):
    """As :func:`certify_m_stationary` but with gamma vanishing on ``I_00``."""
    if not is_feasible_reformulation(problem, pair, tols):
        raise InfeasibleInput("(x, y) is not feasible for the reformulation")
    sets = index_sets(problem, pair, tols)
    gamma_idx = tuple(sorted(sets.I_0plus + sets.I_01))
    return _certify(problem, pair.x, gamma_idx, "S", tols)


# -- constraint qualifications -------------------------------------------


def cq_matrix(problem, x, tols=DEFAULT_TOLS):
    """Rows grad g_i (active), grad h_i, e_i (i with x_i = 0)."""
    I_g = active_ineq(problem, x, tols)
    I_0 = zero_set(x, tols)
    return (problem.ineq_jac(x)[list(I_g)],
            problem.eq_jac(x),
            np.eye(problem.n)[list(I_0)])


def check_cc_licq(problem, x, tols=DEFAULT_TOLS):
    """Return ``(verdict, sigma_min)`` for the stacked CQ gradient rows."""
    x = np.asarray(x, dtype=float)
    if not is_feasible_original(problem, x, tols):
        raise InfeasibleInput("x is not feasible")
    rows = np.vstack(cq_matrix(problem, x, tols))
    if rows.shape[0] == 0:
        return True, float("inf")
    s = np.linalg.svd(rows, compute_uv=False)
    if rows.shape[0] > problem.n:
        return False, 0.0
    sigma_min = float(s[-1])
    return bool(sigma_min >= tols.rank_tol * max(1.0, s[0])), sigma_min


def check_cc_mfcq(problem, x, tols=DEFAULT_TOLS):
    """Return ``(verdict, witness)``; the witness is set when CC-MFCQ fails.

    Dependence among the free rows (grad h and unit vectors) is read off a
    null vector.  Otherwise a positive dependence must use some active
    inequality, which the LP

        min sum|nu|  s.t.  G lam + F nu = 0,  sum(lam) = 1,  lam >= 0

    detects; among witnesses it prefers the one using least free weight.
    """
    x = np.asarray(x, dtype=float)
    if not is_feasible_original(problem, x, tols):
        raise InfeasibleInput("x is not feasible")
    Gr, Hr, Er = cq_matrix(problem, x, tols)
    I_g = active_ineq(problem, x, tols)
    I_0 = zero_set(x, tols)
    F = np.vstack([Hr, Er]).T.reshape(problem.n, -1)
    G = Gr.T.reshape(problem.n, -1)
    sys = _System(np.zeros(problem.n), G, F, I_g, I_0)
    k, q = G.shape[1], F.shape[1]

    if q and _rank(F, tols) < q:
        _, _, vt = np.linalg.svd(F)
        nu = vt[-1]
        nu = nu / np.abs(nu).sum()
        return False, sys.expand(problem, np.zeros(k), nu)
    if k == 0:
        return True, None
    # variables: lam (k), nu+ (q), nu- (q)
    cost = np.r_[np.zeros(k), np.ones(2 * q)]
    A_eq = np.vstack([np.hstack([G, F, -F]), np.r_[np.ones(k), np.zeros(2 * q)][None, :]])
    b_eq = np.r_[np.zeros(problem.n), 1.0]
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status == 2:
        return True, None
    if res.status != 0:
        raise SubproblemFailure(f"MFCQ linear program failed: {res.message}")
    z = res.x
    return False, sys.expand(problem, z[:k], z[k:k + q] - z[k + q:])


def cq_report(problem, x, tols=DEFAULT_TOLS):
    licq, sigma = check_cc_licq(problem, x, tols)
    mfcq, witness = check_cc_mfcq(problem, x, tols)
    return CqReport(cc_licq=licq, sigma_min=sigma, cc_mfcq=mfcq, witness=witness)


# -- multiplier polyhedron -----------------------------------------------


@dataclass
class MultiplierSet:
    """Vertices of the multiplier polyhedron.

    ``bounded`` is False when the polyhedron has a recession direction, in
    which case the vertices do not describe the whole set.
    """

    vertices: list
    bounded: bool
    kind: str = "M"
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    def barycenter(self):
        lam = np.mean([v.lam for v in self.vertices], axis=0)
        mu = np.mean([v.mu for v in self.vertices], axis=0)
        gamma = np.mean([v.gamma for v in self.vertices], axis=0)
        return Multipliers(lam, mu, gamma)


def multiplier_set_vertices(problem, x, kind="M", y=None, tols=DEFAULT_TOLS, cap=VERTEX_CAP):
    """Enumerate the vertices of the M- (or S-, given ``y``) multiplier set.

    The free multipliers are eliminated by projecting onto the orthogonal
    complement of their columns; the remaining polyhedron
    ``{lam >= 0 : A lam = c}`` is enumerated through its basic solutions.
    A rank-deficient free block means a line of multipliers, reported as
    unbounded with the single least-squares multiplier as representative.
    """
    from .reformulation import PrimalPair

    x = np.asarray(x, dtype=float)
    if kind == "S":
        if y is None:
            raise ValueError("S multipliers need y")
        pair = PrimalPair(x, y)
        cert = certify_s_stationary(problem, pair, tols)
        sets = index_sets(problem, pair, tols)
        gamma_idx = tuple(sorted(sets.I_0plus + sets.I_01))
    else:
        cert = certify_m_stationary(problem, x, tols)
        gamma_idx = zero_set(x, tols)
    if cert.kind == "none":
        raise InfeasibleInput(f"point is not {kind}-stationary (residual {cert.residual:.3g})")
    sys = _system(problem, x, gamma_idx, tols)
    n, k, q = problem.n, sys.G.shape[1], sys.F.shape[1]

    if q and _rank(sys.F, tols) < q:
        return MultiplierSet([cert.multipliers], bounded=False, kind=kind)
    if q:
        Fpinv = np.linalg.pinv(sys.F, rcond=1e-12)
        P = np.eye(n) - sys.F @ Fpinv
    else:
        Fpinv = np.zeros((0, n))
        P = np.eye(n)
    A = P @ sys.G
    c = -(P @ sys.grad)
    tol = stat_tolerance(sys.grad, tols)

    def finish(lam):
        nu = -Fpinv @ (sys.grad + sys.G @ lam)
        return sys.expand(problem, lam, nu)

    if k == 0:
        return MultiplierSet([finish(np.zeros(0))], bounded=True, kind=kind)

    r = _rank(A, tols)
    total = sum(comb(k, s) for s in range(r + 1))
    if total > cap:
        raise EnumerationLimit(f"{total} candidate bases exceed cap {cap}")
    found = []
    for size in range(r + 1):
        for basis in combinations(range(k), size):
            cols = A[:, list(basis)]
            if size and _rank(cols, tols) < size:
                continue
            lam_b = np.linalg.lstsq(cols, c, rcond=None)[0] if size else np.zeros(0)
            if np.max(np.abs(cols @ lam_b - c), initial=0.0) > tol:
                continue
            if np.any(lam_b < -tol):
                continue
            lam = np.zeros(k)
            lam[list(basis)] = np.maximum(lam_b, 0.0)
            if not any(np.max(np.abs(lam - f)) <= 1e-9 * (1 + np.max(np.abs(f))) for f in found):
                found.append(lam)

    # recession direction: A d = 0, d >= 0, sum(d) = 1
    rec = linprog(np.zeros(k), A_eq=np.vstack([A, np.ones((1, k))]),
                  b_eq=np.r_[np.zeros(n), 1.0], bounds=(0, None), method="highs")
    bounded = rec.status != 0
    return MultiplierSet([finish(lam) for lam in found], bounded=bounded, kind=kind)
