"""Second-order analysis: linearisation/critical cones and curvature checks.

The x-projection of the critical cone is a finite union of polyhedral cones
("branches").  Each branch is ``{d : E d = 0, G d <= 0}`` with ``E`` holding
equality rows (including unit rows for coordinates forced to zero) and
``G`` the inequality rows.

Curvature verdicts are three-valued.  Positive (semi)definiteness of the
Lagrangian Hessian on the span ``{E d = 0}`` certifies, a sampled direction
inside the cone with the wrong sign falsifies, anything else is
inconclusive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import nnls

from .errors import BranchExplosion, InfeasibleInput
from .reformulation import DEFAULT_TOLS, PrimalPair, Tolerances, active_ineq, index_sets, zero_set
from .stationarity import (
    VERTEX_CAP,
    certify_m_stationary,
    certify_s_stationary,
    multiplier_set_vertices,
    stat_tolerance,
)

SEED = 0x5EED
BRANCH_CAP = 2 ** 20


@dataclass(frozen=True)
class SecondOrderOptions:
    samples: int = 1000
    seed: int = SEED
    cone_mode: str = "pair"
    branch_cap: int = BRANCH_CAP
    vertex_cap: int = VERTEX_CAP
    tol_scale: float = 1e-8
    tols: Tolerances = DEFAULT_TOLS

    def __post_init__(self):
        if self.cone_mode not in ("pair", "x-union"):
            raise ValueError("cone_mode must be 'pair' or 'x-union'")
        if self.samples < 0:
            raise ValueError("samples must be nonnegative")


@dataclass
class ConeBranch:
    zero_set: tuple
    eq_rows: np.ndarray
    ineq_rows: np.ndarray

    def contains(self, d, tol=1e-9):
        d = np.asarray(d, dtype=float)
        scale = tol * max(1.0, np.max(np.abs(d), initial=0.0))
        return bool(np.all(np.abs(self.eq_rows @ d) <= scale) and np.all(self.ineq_rows @ d <= scale))

    def span_basis(self):
        """Orthonormal basis of ``{d : eq_rows d = 0}``."""
        n = self.eq_rows.shape[1]
        if self.eq_rows.shape[0] == 0:
            return np.eye(n)
        return null_space(self.eq_rows, rcond=1e-10)

    def lineality_basis(self):
        rows = np.vstack([self.eq_rows, self.ineq_rows])
        if rows.shape[0] == 0:
            return np.eye(rows.shape[1])
        return null_space(rows, rcond=1e-10)

    def to_dict(self):
        return {"zero_set": list(self.zero_set), "eq_rows": self.eq_rows.tolist(),
                "ineq_rows": self.ineq_rows.tolist()}


@dataclass
class SecondOrderVerdict:
    status: str                       # certified | falsified | inconclusive
    witness: Optional[np.ndarray] = None
    witness_value: Optional[float] = None
    branch_reports: list = field(default_factory=list)
    multiplier_mode: str = "exists"
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "status": self.status,
            "multiplier_mode": self.multiplier_mode,
            "witness": None if self.witness is None else self.witness.tolist(),
            "witness_value": self.witness_value,
            "branch_reports": self.branch_reports,
            "notes": list(self.notes),
        }


# -- Hessian and cones ---------------------------------------------------


def lagrangian_hessian(problem, x, mult):
    """Hessian of f + lam'g + mu'h at ``x``; gamma does not enter."""
    lam = np.asarray(mult.lam, dtype=float)
    mu = np.asarray(mult.mu, dtype=float)
    if lam.shape != (problem.m,) or mu.shape != (problem.p,):
        raise ValueError("multipliers do not match the problem dimensions")
    H = problem.hessian(x)
    if problem.m:
        H = H + np.tensordot(lam, problem.ineq_hess(x), axes=1)
    if problem.p:
        H = H + np.tensordot(mu, problem.eq_hess(x), axes=1)
    return 0.5 * (H + H.T)


def linearization_cone_member(problem, pair, d, tols=DEFAULT_TOLS):
    """Test ``(d_x, d_y)`` against every row of the CC-linearisation cone."""
    dx, dy = (np.asarray(v, dtype=float) for v in d)
    sets = index_sets(problem, pair, tols)
    tol = tols.act_tol * max(1.0, np.max(np.abs(np.r_[dx, dy]), initial=0.0))
    x = pair.x
    if sets.I_g and np.any(problem.ineq_jac(x)[list(sets.I_g)] @ dx > tol):
        return False
    if problem.p and np.any(np.abs(problem.eq_jac(x) @ dx) > tol):
        return False
    if sets.card_active and dy.sum() < -tol:
        return False
    checks = (
        np.abs(dy[list(sets.I_pm0)]) <= tol,
        dy[list(sets.I_00)] >= -tol,
        dy[list(sets.I_01)] <= tol,
        np.abs(dx[list(sets.I_01 + sets.I_0plus)]) <= tol,
        np.minimum(np.abs(dx), np.abs(dy))[list(sets.I_00)] <= tol,
    )
    return all(bool(np.all(c)) for c in checks)


def critical_direction_x(problem, pair_or_x, dx, mode="pair", tols=DEFAULT_TOLS):
    """Direct test of ``d_x`` against the x-projected critical cone.

    In pair mode this is the projection of the critical cone at the pair;
    in x-union mode it is the union over all feasible completions.  Used
    as the reference for branch enumeration.
    """
    dx = np.asarray(dx, dtype=float)
    x = pair_or_x.x if isinstance(pair_or_x, PrimalPair) else np.asarray(pair_or_x, dtype=float)
    tol = tols.act_tol * max(1.0, np.max(np.abs(dx), initial=0.0))
    if problem.gradient(x) @ dx > tol:
        return False
    if mode == "pair":
        if not isinstance(pair_or_x, PrimalPair):
            raise ValueError("pair mode needs a PrimalPair")
        # d_y = 0 satisfies every y-row, so the projection only loses those rows
        return linearization_cone_member(problem, pair_or_x, (dx, np.zeros_like(dx)), tols)
    I_g = active_ineq(problem, x, tols)
    if I_g and np.any(problem.ineq_jac(x)[list(I_g)] @ dx > tol):
        return False
    if problem.p and np.any(np.abs(problem.eq_jac(x) @ dx) > tol):
        return False
    zeros = [i for i in zero_set(x, tols) if abs(dx[i]) <= tol]
    return len(zeros) >= problem.n - problem.kappa


def _unit_rows(n, idx):
    return np.eye(n)[list(idx)].reshape(len(idx), n)


def _branch(problem, x, mult, forced, base_rows, tols):
    """One branch with the given forced-zero coordinates.

    When gamma vanishes off the forced coordinates, ``grad f' d <= 0`` is
    equivalent to ``grad g_i' d = 0`` for lam_i > 0; otherwise the gradient
    row is kept as an inequality.
    """
    n = problem.n
    I_g = list(active_ineq(problem, x, tols))
    Jg = problem.ineq_jac(x)[I_g] if I_g else np.zeros((0, n))
    grad = problem.gradient(x)
    thr = stat_tolerance(grad, tols)
    gamma = np.asarray(mult.gamma, dtype=float)
    off = np.ones(n, dtype=bool)
    off[list(forced)] = False
    E = [base_rows, _unit_rows(n, forced)]
    if np.all(np.abs(gamma[off]) <= thr):
        lam = np.asarray(mult.lam, dtype=float)[I_g] if I_g else np.zeros(0)
        pos = lam > thr
        E.append(Jg[pos])
        G = Jg[~pos]
    else:
        G = np.vstack([Jg, grad[None, :]])
    return np.vstack(E), G.reshape(-1, n)


def _row_key(E, G):
    r = lambda M: tuple(sorted(tuple(np.round(row, 12) + 0.0) for row in M))
    return r(E), r(G)


def critical_cone_branches(problem, pair_or_x, mult, mode="pair", tols=DEFAULT_TOLS,
                           cap=BRANCH_CAP):
    """Polyhedral branches whose union is the x-projected critical cone.

    Parameters
    ----------
    problem : Problem
    pair_or_x : PrimalPair or array
        A pair (required in ``"pair"`` mode) or a point.
    mult : Multipliers
        Multipliers certifying stationarity; they select the rows that may
        be written as equalities.
    mode : {"pair", "x-union"}
        ``"pair"`` branches over subsets of the biactive set I_00;
        ``"x-union"`` over zero patterns of size ``n - kappa`` in I_0.

    Returns
    -------
    list of ConeBranch
        Deduplicated, in deterministic (size, lexicographic) order.
    """
    n = problem.n
    if mode == "pair":
        if not isinstance(pair_or_x, PrimalPair):
            raise ValueError("pair mode needs a PrimalPair")
        x = pair_or_x.x
        sets = index_sets(problem, pair_or_x, tols)
        base_forced = tuple(sorted(sets.I_01 + sets.I_0plus))
        pool, sizes = sets.I_00, range(len(sets.I_00) + 1)
        count = 2 ** len(pool)
    elif mode == "x-union":
        x = pair_or_x.x if isinstance(pair_or_x, PrimalPair) else np.asarray(pair_or_x, dtype=float)
        base_forced = ()
        pool = zero_set(x, tols)
        need = n - problem.kappa
        if len(pool) < need:
            raise InfeasibleInput("fewer than n - kappa zero entries")
        sizes = (need,)
        count = comb(len(pool), need)
    else:
        raise ValueError("mode must be 'pair' or 'x-union'")
    if count > cap:
        raise BranchExplosion(f"{count} branches exceed cap {cap}")
    base = problem.eq_jac(x)
    branches, seen = [], set()
    for size in sizes:
        for extra in combinations(pool, size):
            forced = tuple(sorted(base_forced + extra))
            E, G = _branch(problem, x, mult, forced, base, tols)
            key = _row_key(E, G)
            if key in seen:
                continue
            seen.add(key)
            branches.append(ConeBranch(zero_set=forced, eq_rows=E, ineq_rows=G))
    return branches


def in_branch_union(branches, d, tol=1e-9):
    return any(b.contains(d, tol) for b in branches)


# -- sampling ------------------------------------------------------------


def project_onto_cone(branch, d, basis=None):
    """Euclidean projection of ``d`` onto the branch cone.

    Inside the span the cone is ``{u : G B u <= 0}``; its projection is
    ``u - (GB)' w`` with ``w`` the NNLS solution against the polar cone.
    """
    B = branch.span_basis() if basis is None else basis
    u = B.T @ d
    if branch.ineq_rows.shape[0] and B.shape[1]:
        GB = branch.ineq_rows @ B
        w, _ = nnls(GB.T, u)
        u = u - GB.T @ w
    return B @ u


def _cone_samples(branch, rng, count, extra=()):
    B = branch.span_basis()
    if B.shape[1] == 0:
        return np.zeros((0, B.shape[0]))
    out = []
    cands = list(extra) + list(rng.standard_normal((count, B.shape[0])))
    for d in cands:
        v = project_onto_cone(branch, np.asarray(d, dtype=float), B)
        nv = np.linalg.norm(v)
        if nv > 1e-10:
            out.append(v / nv)
    return np.array(out).reshape(-1, B.shape[0])


def _min_eig(M):
    if M.size == 0:
        return float("inf"), None
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return float(w[0]), V[:, 0]


def _as_pair(problem, pair, tols):
    if isinstance(pair, PrimalPair):
        return pair
    from .reformulation import complete_y
    x = np.asarray(pair, dtype=float)
    return PrimalPair(x, complete_y(problem, x, tols))


# -- SONC ----------------------------------------------------------------


def check_sonc(problem, pair, mult=None, opts=None):
    """Second-order necessary condition at an S-stationary pair.

    Every branch is tested for ``d' H d >= -tol_psd`` with ``|d| = 1``:
    a negative eigen-direction of the lineality space or a sampled cone
    direction falsifies; positive semidefiniteness on the span certifies;
    otherwise the branch is certified by sampling alone, which the branch
    report records as its method.
    """
    opts = opts or SecondOrderOptions()
    tols = opts.tols
    pair = _as_pair(problem, pair, tols)
    if mult is None:
        cert = certify_s_stationary(problem, pair, tols)
        if cert.kind == "none":
            raise InfeasibleInput("point is not S-stationary")
        mult = cert.multipliers
    H = lagrangian_hessian(problem, pair.x, mult)
    tol = opts.tol_scale * (1 + np.linalg.norm(H, np.inf))
    rng = np.random.default_rng(opts.seed)
    branches = critical_cone_branches(problem, pair, mult, "pair", tols, opts.branch_cap)
    reports = []
    for b in branches:
        rep = {"zero_set": list(b.zero_set), "n_ineq": int(b.ineq_rows.shape[0])}
        L = b.lineality_basis()
        lam_min, v = _min_eig(L.T @ H @ L)
        rep["lineality_dim"] = int(L.shape[1])
        rep["lineality_min_eig"] = lam_min
        if v is not None and lam_min < -tol:
            d = L @ v
            rep.update(passed=False, method="eigen")
            reports.append(rep)
            return SecondOrderVerdict("falsified", d, float(d @ H @ d), reports, "exists")
        B = b.span_basis()
        span_min, v = _min_eig(B.T @ H @ B)
        rep["min_eig"] = span_min
        rep["dim"] = int(B.shape[1])
        if span_min >= -tol:
            rep.update(passed=True, method="subspace")
            reports.append(rep)
            continue
        extra = [B @ v] if v is not None else []
        for d in _cone_samples(b, rng, opts.samples, extra):
            val = float(d @ H @ d)
            if val < -tol:
                rep.update(passed=False, method="sampling")
                reports.append(rep)
                return SecondOrderVerdict("falsified", d, val, reports, "exists")
        rep.update(passed=True, method="sampling")
        reports.append(rep)
    return SecondOrderVerdict("certified", None, None, reports, "exists")


# -- CC-SOSC and the M-uniqueness condition -------------------------------


def check_cc_sosc(problem, pair, multiplier_mode="exists", opts=None):
    """Strict positivity of the Lagrangian form on critical directions.

    Parameters
    ----------
    problem : Problem
    pair : PrimalPair or array
        Point to test; a bare ``x`` is completed with :func:`complete_y`.
    multiplier_mode : {"exists", "forall"}
        ``"exists"``: some S-stationary multiplier works on each branch
        (CC-SOSC).  ``"forall"``: every M-stationary multiplier must work
        (the hypothesis of local uniqueness of M-stationary points).
    opts : SecondOrderOptions

    Returns
    -------
    SecondOrderVerdict
        ``certified`` when every branch with a nonzero direction has a
        positive definite reduced Hessian, ``falsified`` with a witness when
        a sampled cone direction has ``d'Hd <= tol_pd``, else
        ``inconclusive``.
    """
    opts = opts or SecondOrderOptions()
    tols = opts.tols
    if multiplier_mode not in ("exists", "forall"):
        raise ValueError("multiplier_mode must be 'exists' or 'forall'")
    pair = _as_pair(problem, pair, tols)
    kind = "S" if multiplier_mode == "exists" else "M"
    cert = (certify_s_stationary(problem, pair, tols) if kind == "S"
            else certify_m_stationary(problem, pair.x, tols))
    if cert.kind == "none":
        raise InfeasibleInput(f"point is not {kind}-stationary (residual {cert.residual:.3g})")
    mset = multiplier_set_vertices(problem, pair.x, kind=kind, y=pair.y, tols=tols,
                                   cap=opts.vertex_cap)
    Hs = [lagrangian_hessian(problem, pair.x, v) for v in mset]
    tol = opts.tol_scale * (1 + max(np.linalg.norm(H, np.inf) for H in Hs))
    target = pair if opts.cone_mode == "pair" else pair.x
    branches = critical_cone_branches(problem, target, mset.barycenter(), opts.cone_mode, tols,
                                      opts.branch_cap)
    pick = max if multiplier_mode == "exists" else min
    notes = []
    if not mset.bounded:
        notes.append("multiplier set unbounded; vertices do not describe it fully")
    rng = np.random.default_rng(opts.seed)
    reports, failing = [], []
    for b in branches:
        B = b.span_basis()
        rep = {"zero_set": list(b.zero_set), "dim": int(B.shape[1]),
               "n_ineq": int(b.ineq_rows.shape[0])}
        if B.shape[1] == 0:
            rep.update(min_eig=None, passed=True, method="trivial")
            reports.append(rep)
            continue
        eigs = [_min_eig(B.T @ H @ B) for H in Hs]
        rep["vertex_min_eigs"] = [e for e, _ in eigs]
        rep["min_eig"] = pick(e for e, _ in eigs)
        rep["passed"] = bool(rep["min_eig"] >= tol)
        rep["method"] = "subspace"
        reports.append(rep)
        if not rep["passed"]:
            failing.append((b, B, [B @ v for _, v in eigs]))
    forall_unbounded = multiplier_mode == "forall" and not mset.bounded
    if not failing and not forall_unbounded:
        return SecondOrderVerdict("certified", None, None, reports, multiplier_mode, notes)
    # with an unbounded set the max over vertices understates the max over the set
    can_falsify = mset.bounded or multiplier_mode == "forall"
    if can_falsify:
        pool = failing if failing else [(b, b.span_basis(), []) for b in branches]
        for b, B, extra in pool:
            if B.shape[1] == 0:
                continue
            for d in _cone_samples(b, rng, opts.samples, extra):
                val = pick(float(d @ H @ d) for H in Hs)
                if val <= tol:
                    return SecondOrderVerdict("falsified", d, val, reports, multiplier_mode, notes)
    return SecondOrderVerdict("inconclusive", None, None, reports, multiplier_mode, notes)


def check_m_uniqueness(problem, x, opts=None):
    """Forall-mode check over the union of all completions of ``x``."""
    opts = opts or SecondOrderOptions(cone_mode="x-union")
    return check_cc_sosc(problem, np.asarray(x, dtype=float), "forall", opts)

