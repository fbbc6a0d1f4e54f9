"""Problem data for cardinality-constrained programs.

A :class:`Problem` describes

    min f(x)  s.t.  g(x) <= 0,  h(x) = 0,  ||x||_0 <= kappa

through plain callables.  Derivatives that are not supplied are replaced by
central finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError

FD_STEP = 1e-6


def _fd_steps(x, step):
    return step * np.maximum(1.0, np.abs(x))


def fd_gradient(fun, x, step=FD_STEP):
    """Central-difference gradient (or Jacobian, for vector-valued ``fun``)."""
    x = np.asarray(x, dtype=float)
    hs = _fd_steps(x, step)
    cols = []
    for i, hi in enumerate(hs):
        xp = x.copy()
        xm = x.copy()
        xp[i] += hi
        xm[i] -= hi
        cols.append((np.asarray(fun(xp), dtype=float) - np.asarray(fun(xm), dtype=float)) / (2 * hi))
    # last axis indexes the differentiation variable
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class QuadraticData:
    """Coefficients of f = 1/2 x'Qx + c'x + f0, g_i = 1/2 x'Q_i x + a_i'x - b_i, h = A x - b."""

    Q: np.ndarray
    c: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    Q_ineq: Optional[np.ndarray] = None
    f0: float = 0.0


@dataclass(frozen=True)
class Problem:
    """Smooth data of a cardinality-constrained program.

    ``hess_g`` and ``hess_h`` return stacks of shape ``(m, n, n)`` and
    ``(p, n, n)``.  ``m`` and ``p`` are inferred from ``g`` and ``h`` at the
    origin when not given.
    """

    n: int
    kappa: int
    f: Callable
    grad_f: Optional[Callable] = None
    hess_f: Optional[Callable] = None
    g: Optional[Callable] = None
    jac_g: Optional[Callable] = None
    hess_g: Optional[Callable] = None
    h: Optional[Callable] = None
    jac_h: Optional[Callable] = None
    hess_h: Optional[Callable] = None
    m: Optional[int] = None
    p: Optional[int] = None
    name: str = ""
    quadratic: Optional[QuadraticData] = field(default=None, compare=False, repr=False)
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not (0 < self.kappa < self.n):
            raise ValueError(f"need 0 < kappa < n, got kappa={self.kappa}, n={self.n}")
        zero = np.zeros(self.n)
        if self.m is None:
            object.__setattr__(self, "m", 0 if self.g is None else len(np.atleast_1d(self.g(zero))))
        if self.p is None:
            object.__setattr__(self, "p", 0 if self.h is None else len(np.atleast_1d(self.h(zero))))

    @classmethod
    def from_quadratic(cls, Q, c, A_ineq=None, b_ineq=None, A_eq=None, b_eq=None,
                       kappa=1, Q_ineq=None, f0=0.0, name="", meta=None):
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        Q = 0.5 * (Q + Q.T)
        c = np.asarray(c, dtype=float)
        A_ineq = np.zeros((0, n)) if A_ineq is None else np.asarray(A_ineq, dtype=float).reshape(-1, n)
        b_ineq = np.zeros(0) if b_ineq is None else np.asarray(b_ineq, dtype=float).ravel()
        A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
        b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
        m, p = A_ineq.shape[0], A_eq.shape[0]
        if Q_ineq is not None:
            Q_ineq = np.asarray(Q_ineq, dtype=float).reshape(m, n, n)
            Q_ineq = 0.5 * (Q_ineq + Q_ineq.transpose(0, 2, 1))
        f0 = float(f0)
        data = QuadraticData(Q, c, A_ineq, b_ineq, A_eq, b_eq, Q_ineq, f0)
        Qg = np.zeros((m, n, n)) if Q_ineq is None else Q_ineq

        def g(x):
            return 0.5 * np.einsum("i,kij,j->k", x, Qg, x) + A_ineq @ x - b_ineq

        def jac_g(x):
            return Qg @ x + A_ineq

        return cls(
            n=n, kappa=int(kappa),
            f=lambda x: 0.5 * x @ Q @ x + c @ x + f0,
            grad_f=lambda x: Q @ x + c,
            hess_f=lambda x: Q,
            g=g, jac_g=jac_g, hess_g=lambda x: Qg,
            h=lambda x: A_eq @ x - b_eq,
            jac_h=lambda x: A_eq,
            hess_h=lambda x: np.zeros((p, n, n)),
            m=m, p=p, name=name, quadratic=data, meta=dict(meta or {}),
        )

    # -- checked evaluators -------------------------------------------------

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise EvaluationError(f"x has shape {x.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(x)):
            raise EvaluationError("x contains non-finite entries")
        return x

    def _checked(self, what, value, shape):
        value = np.asarray(value, dtype=float)
        if value.shape != shape:
            if value.size == int(np.prod(shape)):
                value = value.reshape(shape)
            else:
                raise EvaluationError(f"{what} has shape {value.shape}, expected {shape}")
        if not np.all(np.isfinite(value)):
            raise EvaluationError(f"{what} is not finite")
        return value

    def objective(self, x):
        x = self._check_x(x)
        return float(self._checked("f", self.f(x), ()))

    def gradient(self, x):
        x = self._check_x(x)
        val = self.grad_f(x) if self.grad_f is not None else fd_gradient(self.f, x)
        return self._checked("grad_f", val, (self.n,))

    def hessian(self, x):
        x = self._check_x(x)
        if self.hess_f is not None:
            val = self.hess_f(x)
        else:
            val = fd_gradient(self.gradient, x)
        H = self._checked("hess_f", val, (self.n, self.n))
        return 0.5 * (H + H.T)

    def ineq(self, x):
        x = self._check_x(x)
        if self.m == 0:
            return np.zeros(0)
        return self._checked("g", self.g(x), (self.m,))

    def ineq_jac(self, x):
        x = self._check_x(x)
        if self.m == 0:
            return np.zeros((0, self.n))
        val = self.jac_g(x) if self.jac_g is not None else fd_gradient(self.g, x)
        return self._checked("jac_g", val, (self.m, self.n))

    def ineq_hess(self, x):
        x = self._check_x(x)
        if self.m == 0:
            return np.zeros((0, self.n, self.n))
        val = self.hess_g(x) if self.hess_g is not None else fd_gradient(self.ineq_jac, x)
        H = self._checked("hess_g", val, (self.m, self.n, self.n))
        return 0.5 * (H + H.transpose(0, 2, 1))

    def eq(self, x):
        x = self._check_x(x)
        if self.p == 0:
            return np.zeros(0)
        return self._checked("h", self.h(x), (self.p,))

    def eq_jac(self, x):
        x = self._check_x(x)
        if self.p == 0:
            return np.zeros((0, self.n))
        val = self.jac_h(x) if self.jac_h is not None else fd_gradient(self.h, x)
        return self._checked("jac_h", val, (self.p, self.n))

    def eq_hess(self, x):
        x = self._check_x(x)
        if self.p == 0:
            return np.zeros((0, self.n, self.n))
        val = self.hess_h(x) if self.hess_h is not None else fd_gradient(self.eq_jac, x)
        H = self._checked("hess_h", val, (self.p, self.n, self.n))
        return 0.5 * (H + H.transpose(0, 2, 1))


@dataclass
class EvalBundle:
    f: float
    grad_f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    jac_g: np.ndarray
    jac_h: np.ndarray
    hess_f: Optional[np.ndarray] = None
    hess_g: Optional[np.ndarray] = None
    hess_h: Optional[np.ndarray] = None


def evaluate(problem, x, with_hessians=False):
    """Evaluate every function and first derivative of ``problem`` at ``x``.

    Raises :class:`EvaluationError` on wrong shapes or non-finite values.
    """
    bundle = EvalBundle(
        f=problem.objective(x),
        grad_f=problem.gradient(x),
        g=problem.ineq(x),
        h=problem.eq(x),
        jac_g=problem.ineq_jac(x),
        jac_h=problem.eq_jac(x),
    )
    if with_hessians:
        bundle.hess_f = problem.hessian(x)
        bundle.hess_g = problem.ineq_hess(x)
        bundle.hess_h = problem.eq_hess(x)
    return bundle


@dataclass
class DerivativeReport:
    errors: dict
    tol: float
    step: float

    @property
    def passed(self):
        return all(err <= self.tol for err in self.errors.values())

    @property
    def failed_blocks(self):
        return [k for k, err in self.errors.items() if err > self.tol]

    def to_dict(self):
        return {"passed": self.passed, "tol": self.tol, "step": self.step,
                "errors": {k: float(v) for k, v in self.errors.items()}}


def _rel_err(supplied, approx):
    supplied = np.asarray(supplied, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if supplied.size == 0:
        return 0.0
    return float(np.max(np.abs(supplied - approx)) / max(1.0, np.max(np.abs(approx))))


def check_derivatives(problem, x, step=1e-5, tol=1e-5):
    """Compare supplied derivatives with central differences at ``x``.

    Each derivative is differenced from the next lower supplied order, so
    a linear map has Hessian error exactly zero.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = problem._check_x(x)
    errors = {
        "grad_f": _rel_err(problem.gradient(x), fd_gradient(problem.objective, x, step)),
        "hess_f": _rel_err(problem.hessian(x), fd_gradient(problem.gradient, x, step)),
    }
    if problem.m:
        errors["jac_g"] = _rel_err(problem.ineq_jac(x), fd_gradient(problem.ineq, x, step))
        errors["hess_g"] = _rel_err(problem.ineq_hess(x), fd_gradient(problem.ineq_jac, x, step))
    if problem.p:
        errors["jac_h"] = _rel_err(problem.eq_jac(x), fd_gradient(problem.eq, x, step))
        errors["hess_h"] = _rel_err(problem.eq_hess(x), fd_gradient(problem.eq_jac, x, step))
    return DerivativeReport(errors=errors, tol=tol, step=step)
