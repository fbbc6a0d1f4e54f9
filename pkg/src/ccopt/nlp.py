"""Augmented-Lagrangian solver for small dense NLPs.

    min f(z)  s.t.  c_ineq(z) <= 0,  c_eq(z) = 0,  lo <= z <= hi

The outer loop updates multipliers and a quadratic penalty; each inner
problem is bound constrained and handed to L-BFGS-B.  When a Lagrangian
Hessian is available the result is refined by Newton steps on the
identified active set, and the refinement is kept only if it lowers the
KKT residual without breaking feasibility or multiplier signs.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize


@dataclass
class NlpSpec:
    dim: int
    f: Callable
    grad: Callable
    c_ineq: Optional[Callable] = None
    jac_ineq: Optional[Callable] = None
    c_eq: Optional[Callable] = None
    jac_eq: Optional[Callable] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    # (z, lam_ineq, lam_eq) -> Hessian of the Lagrangian
    hess_lag: Optional[Callable] = None
    n_ineq: int = 0
    n_eq: int = 0

    def __post_init__(self):
        self.lo = np.full(self.dim, -np.inf) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(self.dim, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if np.any(self.lo > self.hi):
            raise ValueError("lower bounds exceed upper bounds")

    def ineq(self, z):
        return np.asarray(self.c_ineq(z), dtype=float) if self.n_ineq else np.zeros(0)

    def ineq_jac(self, z):
        return np.asarray(self.jac_ineq(z), dtype=float).reshape(self.n_ineq, self.dim) if self.n_ineq \
            else np.zeros((0, self.dim))

    def eq(self, z):
        return np.asarray(self.c_eq(z), dtype=float) if self.n_eq else np.zeros(0)

    def eq_jac(self, z):
        return np.asarray(self.jac_eq(z), dtype=float).reshape(self.n_eq, self.dim) if self.n_eq \
            else np.zeros((0, self.dim))


@dataclass(frozen=True)
class NlpOptions:
    stat_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_outer: int = 100
    max_inner: int = 500
    rho0: float = 10.0
    rho_factor: float = 10.0
    rho_max: float = 1e12
    shrink: float = 0.25
    mult_bound: float = 1e8
    memory: int = 10
    polish: bool = True

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class NlpResult:
    z: np.ndarray
    lam_ineq: np.ndarray
    lam_eq: np.ndarray
    lam_box: np.ndarray
    kkt_residual: float
    violation: float
    status: str                    # converged | iteration_limit | infeasible_stall
    f: float = float("nan")
    outer_iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def converged(self):
        return self.status == "converged"


def violation(spec, z):
    ci, ce = spec.ineq(z), spec.eq(z)
    parts = [np.max(ci, initial=0.0), np.max(np.abs(ce), initial=0.0),
             np.max(spec.lo - z, initial=0.0), np.max(z - spec.hi, initial=0.0)]
    return float(max(0.0, *parts))


def kkt_parts(spec, z, lam_ineq, lam_eq):
    """Return (stationarity, complementarity, lam_box).

    Stationarity is the max-norm of the projected Lagrangian gradient
    ``z - P(z - grad L)``; bound multipliers absorb the rest.
    """
    r = spec.grad(z) + spec.ineq_jac(z).T @ lam_ineq + spec.eq_jac(z).T @ lam_eq
    step = z - np.clip(z - r, spec.lo, spec.hi)
    stat = float(np.max(np.abs(step), initial=0.0))
    ci = spec.ineq(z)
    comp = float(np.max(np.abs(lam_ineq * ci), initial=0.0))
    if lam_ineq.size:
        comp = max(comp, float(np.max(-lam_ineq, initial=0.0)))
    return stat, comp, r - step


def kkt_residual(spec, z, lam_ineq, lam_eq):
    stat, comp, _ = kkt_parts(spec, z, lam_ineq, lam_eq)
    return max(stat, comp)


def _al_value_grad(spec, lam, mu, rho):
    def fun(z):
        fz = spec.f(z)
        g = np.array(spec.grad(z), dtype=float)
        if spec.n_eq:
            ce = spec.eq(z)
            fz += mu @ ce + 0.5 * rho * ce @ ce
            g += spec.eq_jac(z).T @ (mu + rho * ce)
        if spec.n_ineq:
            ci = spec.ineq(z)
            shifted = np.maximum(0.0, lam + rho * ci)
            fz += (shifted @ shifted - lam @ lam) / (2 * rho)
            g += spec.ineq_jac(z).T @ shifted
        return fz, g
    return fun


def _finish(spec, z, lam, mu, opts, outer, status_hint):
    stat, comp, lam_box = kkt_parts(spec, z, lam, mu)
    res = max(stat, comp)
    viol = violation(spec, z)
    if res <= opts.stat_tol and viol <= opts.feas_tol:
        status = "converged"
    else:
        status = status_hint
    return NlpResult(z=z, lam_ineq=lam, lam_eq=mu, lam_box=lam_box, kkt_residual=res,
                     violation=viol, status=status, f=float(spec.f(z)), outer_iterations=outer)


def _polish(spec, z, lam, mu, opts, iters=8):
    """Newton iterations on the KKT system of the estimated active set."""
    ci = spec.ineq(z)
    lam_scale = max(1.0, np.max(np.abs(lam), initial=0.0))
    work = np.flatnonzero((lam > 1e-10 * lam_scale) | (ci > -1e-7))
    _, _, r_box = kkt_parts(spec, z, lam, mu)
    at_lo = (z - spec.lo <= 1e-10) & (r_box > 0)
    at_hi = (spec.hi - z <= 1e-10) & (r_box < 0)
    fixed = at_lo | at_hi
    free = ~fixed
    z = z.copy()
    z[at_lo] = spec.lo[at_lo]
    z[at_hi] = spec.hi[at_hi]
    lw = lam[work].copy()
    mu = mu.copy()
    nf, nw, ne = int(free.sum()), work.size, spec.n_eq
    for _ in range(iters):
        Ji = spec.ineq_jac(z)[work]
        Je = spec.eq_jac(z)
        grad_l = spec.grad(z) + Ji.T @ lw + Je.T @ mu
        lam_full = np.zeros(spec.n_ineq)
        lam_full[work] = lw
        H = spec.hess_lag(z, lam_full, mu)
        rhs = -np.r_[grad_l[free], spec.ineq(z)[work], spec.eq(z)]
        if np.max(np.abs(rhs), initial=0.0) < 1e-15:
            break
        A = np.vstack([Ji[:, free], Je[:, free]])
        K = np.block([[H[np.ix_(free, free)], A.T], [A, np.zeros((nw + ne, nw + ne))]])
        step = np.linalg.lstsq(K, rhs, rcond=1e-14)[0]
        z[free] += step[:nf]
        lw += step[nf:nf + nw]
        mu += step[nf + nw:]
    lam_new = np.zeros(spec.n_ineq)
    lam_new[work] = lw
    return z, lam_new, mu


def solve_nlp(spec, start, opts=None, lam0=None, mu0=None):
    """Solve ``spec`` from ``start`` (projected onto the box).

    Returns the first outer iterate meeting both tolerances, otherwise the
    best one seen with status ``iteration_limit`` or ``infeasible_stall``.
    ``lam0``/``mu0`` warm-start the multiplier estimates.
    """
    opts = opts or NlpOptions()
    z = np.clip(np.asarray(start, dtype=float), spec.lo, spec.hi)
    lam = np.zeros(spec.n_ineq) if lam0 is None else np.clip(np.asarray(lam0, dtype=float), 0, opts.mult_bound)
    mu = np.zeros(spec.n_eq) if mu0 is None else np.asarray(mu0, dtype=float).copy()
    rho = opts.rho0
    bounds = list(zip(np.where(np.isfinite(spec.lo), spec.lo, None),
                      np.where(np.isfinite(spec.hi), spec.hi, None)))
    prev_v = np.inf
    omega = 1e-2
    status = "iteration_limit"
    best = None
    for outer in range(1, opts.max_outer + 1):
        res = minimize(_al_value_grad(spec, lam, mu, rho), z, jac=True, method="L-BFGS-B",
                       bounds=bounds,
                       options={"maxiter": opts.max_inner, "maxcor": opts.memory,
                                "gtol": omega, "ftol": 1e-16})
        z = np.clip(res.x, spec.lo, spec.hi)
        ci, ce = spec.ineq(z), spec.eq(z)
        v = max(np.max(np.abs(np.maximum(ci, -lam / rho)), initial=0.0),
                np.max(np.abs(ce), initial=0.0))
        lam = np.clip(lam + rho * ci, 0.0, opts.mult_bound)
        mu = np.clip(mu + rho * ce, -opts.mult_bound, opts.mult_bound)

        cand = _finish(spec, z, lam, mu, opts, outer, "iteration_limit")
        if best is None or (cand.violation, cand.kkt_residual) < (best.violation, best.kkt_residual) \
                or cand.converged:
            best = cand
        if opts.polish and spec.hess_lag is not None and not cand.converged \
                and cand.violation <= 1e-4 and cand.kkt_residual <= 1e-3:
            zp, lp, mp = _polish(spec, z, lam, mu, opts)
            if np.all(lp >= -opts.stat_tol) and np.all(np.isfinite(zp)):
                pol = _finish(spec, zp, np.maximum(lp, 0.0), mp, opts, outer, "iteration_limit")
                if pol.converged:
                    pol.info["polished"] = True
                    return pol
        if cand.converged:
            return cand
        if v > opts.shrink * prev_v:
            if rho >= opts.rho_max:
                status = "infeasible_stall"
                break
            rho = min(rho * opts.rho_factor, opts.rho_max)
        prev_v = min(prev_v, v) if np.isfinite(prev_v) else v
        omega = max(0.1 * opts.stat_tol, 0.1 * omega)
    best.status = status if best.status != "converged" else best.status
    return best


def restricted_spec(problem, free_idx):
    """NLP over the coordinates ``free_idx``; the others are pinned to 0."""
    free_idx = np.asarray(free_idx, dtype=int)
    n = problem.n

    def embed(u):
        x = np.zeros(n)
        x[free_idx] = u
        return x

    def hess_lag(u, lam, mu):
        x = embed(u)
        H = problem.hessian(x)
        if problem.m:
            H = H + np.tensordot(lam, problem.ineq_hess(x), axes=1)
        if problem.p:
            H = H + np.tensordot(mu, problem.eq_hess(x), axes=1)
        return H[np.ix_(free_idx, free_idx)]

    return NlpSpec(
        dim=free_idx.size,
        f=lambda u: problem.objective(embed(u)),
        grad=lambda u: problem.gradient(embed(u))[free_idx],
        c_ineq=lambda u: problem.ineq(embed(u)),
        jac_ineq=lambda u: problem.ineq_jac(embed(u))[:, free_idx],
        c_eq=lambda u: problem.eq(embed(u)),
        jac_eq=lambda u: problem.eq_jac(embed(u))[:, free_idx],
        hess_lag=hess_lag,
        n_ineq=problem.m, n_eq=problem.p,
    ), embed


def solve_restricted(problem, support, start=None, opts=None):
    """Solve the problem with ``x_i = 0`` enforced off ``support``.

    The returned result carries the full-length ``x`` in ``info["x"]``
    and in ``z`` only the free coordinates.
    """
    support = tuple(sorted(int(i) for i in support))
    if len(support) > problem.kappa:
        raise ValueError("support larger than kappa")
    opts = opts or NlpOptions()
    spec, embed = restricted_spec(problem, support)
    if not support:
        x = np.zeros(problem.n)
        lam = np.zeros(problem.m)
        mu = np.zeros(problem.p)
        viol = violation(spec, np.zeros(0))
        res = NlpResult(z=np.zeros(0), lam_ineq=lam, lam_eq=mu, lam_box=np.zeros(0),
                        kkt_residual=0.0, violation=viol,
                        status="converged" if viol <= opts.feas_tol else "infeasible_stall",
                        f=problem.objective(x))
    else:
        u0 = np.zeros(len(support)) if start is None else np.asarray(start, dtype=float)[list(support)]
        res = solve_nlp(spec, u0, opts)
    res.info["x"] = embed(res.z)
    res.info["support"] = support
    return res
