"""Scholtes-type regularization path.

NLP(t) relaxes ``x * y = 0`` to ``-t <= x_i y_i <= t`` and keeps the other
constraints of the (x, y) problem.  :func:`solve_path` solves NLP(t) for a
geometric sequence of ``t`` with warm starts until the complementarity
violation is small, then rounds and certifies the limit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PathStalled
from .nlp import NlpOptions, NlpSpec, kkt_residual, solve_nlp, solve_restricted
from .reformulation import (
    DEFAULT_TOLS,
    PrimalPair,
    complete_y,
    is_feasible_original,
    is_feasible_reformulation,
    support,
)
from .stationarity import certify_m_stationary, certify_s_stationary, cq_report


@dataclass(frozen=True)
class PathOptions:
    t0: float = 1.0
    sigma: float = 0.1
    t_min: float = 1e-10
    comp_tol: float = 1e-8
    rounding_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not self.t_min < self.t0:
            raise ValueError("t_min must be below t0")


@dataclass
class PathEntry:
    t: float
    x: np.ndarray
    y: np.ndarray
    kkt_residual: float
    comp_violation: float
    status: str
    f: float
    retried: bool = False

    def to_dict(self):
        return {"t": self.t, "x": self.x.tolist(), "y": self.y.tolist(),
                "kkt_residual": self.kkt_residual, "comp_violation": self.comp_violation,
                "status": self.status, "f": self.f, "retried": self.retried}


@dataclass
class RegularizationPath:
    entries: list = field(default_factory=list)
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    f: float = float("nan")
    final_certificate: object = None
    m_certificate: object = None
    cq_report: object = None
    polished: bool = False

    @property
    def converged(self):
        return self.x is not None

    def to_records(self):
        records = [dict(e.to_dict(), record="step") for e in self.entries]
        if self.converged:
            final = {"record": "final", "x": self.x.tolist(), "y": self.y.tolist(), "f": self.f,
                     "polished": self.polished,
                     "certificate": self.final_certificate.to_dict(),
                     "m_certificate": self.m_certificate.to_dict(),
                     "cq": self.cq_report.to_dict()}
            records.append(final)
        return records

    def to_jsonl(self):
        return "\n".join(json.dumps(r, default=_json_default) for r in self.to_records()) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj))


def build_nlpt(problem, t):
    """The regularized program NLP(t) over z = (x, y).

    Inequalities in order: g(x) (m rows), x*y - t (n), -x*y - t (n) and
    n - kappa - sum(y) (1).  Box: x free, 0 <= y <= 1.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    n, m, p, kappa = problem.n, problem.m, problem.p, problem.kappa
    eye = np.eye(n)

    def split(z):
        return z[:n], z[n:]

    def f(z):
        return problem.objective(z[:n])

    def grad(z):
        return np.r_[problem.gradient(z[:n]), np.zeros(n)]

    def c_ineq(z):
        x, y = split(z)
        xy = x * y
        return np.r_[problem.ineq(x), xy - t, -xy - t, n - kappa - y.sum()]

    def jac_ineq(z):
        x, y = split(z)
        J = np.zeros((m + 2 * n + 1, 2 * n))
        J[:m, :n] = problem.ineq_jac(x)
        J[m:m + n, :n] = eye * y
        J[m:m + n, n:] = eye * x
        J[m + n:m + 2 * n] = -J[m:m + n]
        J[-1, n:] = -1.0
        return J

    def c_eq(z):
        return problem.eq(z[:n])

    def jac_eq(z):
        return np.hstack([problem.eq_jac(z[:n]), np.zeros((p, n))])

    def hess_lag(z, lam, mu):
        x = z[:n]
        H = np.zeros((2 * n, 2 * n))
        Hx = problem.hessian(x)
        if m:
            Hx = Hx + np.tensordot(lam[:m], problem.ineq_hess(x), axes=1)
        if p:
            Hx = Hx + np.tensordot(mu, problem.eq_hess(x), axes=1)
        H[:n, :n] = Hx
        w = lam[m:m + n] - lam[m + n:m + 2 * n]
        H[:n, n:] = np.diag(w)
        H[n:, :n] = np.diag(w)
        return H

    return NlpSpec(
        dim=2 * n, f=f, grad=grad,
        c_ineq=c_ineq, jac_ineq=jac_ineq, c_eq=c_eq, jac_eq=jac_eq,
        lo=np.r_[np.full(n, -np.inf), np.zeros(n)],
        hi=np.r_[np.full(n, np.inf), np.ones(n)],
        hess_lag=hess_lag, n_ineq=m + 2 * n + 1, n_eq=p,
    )


def kkt_residual_nlpt(problem, t, pair, mult=None):
    """KKT residual of NLP(t) at ``pair`` for the given solver multipliers.

    ``mult`` needs ``lam_ineq`` and ``lam_eq`` attributes (an ``NlpResult``
    works); ``None`` means all multipliers zero.
    """
    spec = build_nlpt(problem, t)
    z = np.r_[pair.x, pair.y]
    lam = np.zeros(spec.n_ineq) if mult is None else np.asarray(mult.lam_ineq, dtype=float)
    mu = np.zeros(spec.n_eq) if mult is None else np.asarray(mult.lam_eq, dtype=float)
    return kkt_residual(spec, z, lam, mu)


def _initial_pair(problem, start, tols):
    if isinstance(start, PrimalPair):
        return start.x.copy(), start.y.copy()
    x = np.asarray(start, dtype=float)
    if is_feasible_original(problem, x, tols):
        return x.copy(), complete_y(problem, x, tols)
    return x.copy(), np.full(problem.n, (problem.n - problem.kappa) / problem.n)


def _round(x, rounding_tol):
    x = x.copy()
    x[np.abs(x) <= rounding_tol] = 0.0
    return x


def _certified(problem, x, tols):
    if not is_feasible_original(problem, x, tols):
        return None
    y = complete_y(problem, x, tols)
    pair = PrimalPair(x, y)
    if not is_feasible_reformulation(problem, pair, tols):
        return None
    s_cert = certify_s_stationary(problem, pair, tols)
    m_cert = certify_m_stationary(problem, x, tols)
    return pair, s_cert, m_cert


def solve_path(problem, start, popts=None, nopts=None, tols=DEFAULT_TOLS):
    """Follow NLP(t) for t = t0, sigma t0, ... down to ``t_min``.

    The loop stops once ``max |x_i y_i| <= comp_tol`` and the rounded point
    (entries with ``|x_i| <= rounding_tol`` set to zero, y recompleted) is
    feasible.  If that point is not stationary, it is refined by a solve
    restricted to its support and the path is marked ``polished``.
    Raises :class:`PathStalled` when ``t`` drops below ``t_min`` first.
    """
    popts = popts or PathOptions()
    nopts = nopts or NlpOptions()
    rng = np.random.default_rng(popts.seed)
    n = problem.n
    x, y = _initial_pair(problem, start, tols)
    z = np.r_[x, y]
    lam = mu = None
    path = RegularizationPath()
    t = popts.t0
    while t >= popts.t_min:
        spec = build_nlpt(problem, t)
        res = solve_nlp(spec, z, nopts, lam0=lam, mu0=mu)
        retried = False
        if not res.converged:
            retried = True
            z_pert = z + 1e-3 * rng.standard_normal(z.size)
            res2 = solve_nlp(spec, z_pert, nopts, lam0=lam, mu0=mu)
            if (res2.violation, res2.kkt_residual) < (res.violation, res.kkt_residual) or res2.converged:
                res = res2
        z = res.z
        lam, mu = res.lam_ineq, res.lam_eq
        x, y = z[:n], z[n:]
        comp = float(np.max(np.abs(x * y)))
        path.entries.append(PathEntry(t=t, x=x.copy(), y=y.copy(), kkt_residual=res.kkt_residual,
                                      comp_violation=comp, status=res.status, f=res.f,
                                      retried=retried))
        if comp <= popts.comp_tol:
            xr = _round(x, popts.rounding_tol)
            done = _certified(problem, xr, tols)
            if done is None or done[1].kind == "none":
                if len(support(xr, tols)) <= problem.kappa:
                    sol = solve_restricted(problem, support(xr, tols), start=xr, opts=nopts)
                    if sol.converged:
                        polished = _certified(problem, _round(sol.info["x"], 0.0), tols)
                        if polished is not None and polished[1].kind != "none":
                            done = polished
                            path.polished = True
            if done is not None:
                pair, s_cert, m_cert = done
                path.x, path.y = pair.x, pair.y
                path.f = problem.objective(pair.x)
                path.final_certificate = s_cert if s_cert.kind != "none" else m_cert
                path.m_certificate = m_cert
                path.cq_report = cq_report(problem, pair.x, tols)
                return path
        t *= popts.sigma
    raise PathStalled(f"t fell below {popts.t_min:g} before complementarity reached "
                      f"{popts.comp_tol:g}", path=path)
