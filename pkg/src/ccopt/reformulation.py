"""Feasibility, index sets and y-completion for the relaxed (x, y) problem.

The continuous reformulation replaces ``||x||_0 <= kappa`` by auxiliary
``y`` with ``0 <= y <= 1``, ``sum(y) >= n - kappa`` and ``x * y = 0``.
Index sets are returned as sorted tuples of 0-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassificationError, InfeasibleInput


@dataclass(frozen=True)
class Tolerances:
    feas_tol: float = 1e-8
    act_tol: float = 1e-6
    zero_tol: float = 1e-8
    stat_tol: float = 1e-6
    rank_tol: float = 1e-8

    def __post_init__(self):
        for name in ("feas_tol", "act_tol", "zero_tol", "stat_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_TOLS = Tolerances()


@dataclass(frozen=True)
class PrimalPair:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("x and y must have equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class IndexSets:
    I_g: tuple
    I_0: tuple
    I_pm0: tuple
    I_00: tuple
    I_0plus: tuple
    I_01: tuple
    card_active: bool

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def active_ineq(problem, x, tols=DEFAULT_TOLS):
    g = problem.ineq(x)
    return tuple(int(i) for i in np.flatnonzero(g >= -tols.act_tol))


def zero_set(x, tols=DEFAULT_TOLS):
    return tuple(int(i) for i in np.flatnonzero(np.abs(x) <= tols.zero_tol))


def support(x, tols=DEFAULT_TOLS):
    return tuple(int(i) for i in np.flatnonzero(np.abs(x) > tols.zero_tol))


def index_sets(problem, pair, tols=DEFAULT_TOLS):
    """Classify the coordinates of a (near) feasible pair.

    Coordinates with ``|x_i| > zero_tol`` go to ``I_pm0`` whatever ``y_i``
    is; feasibility within ``feas_tol`` keeps such ``y_i`` tiny anyway.
    """
    x, y = pair.x, pair.y
    if np.any(y < -tols.act_tol) or np.any(y > 1 + tols.act_tol):
        raise ClassificationError("y outside [0, 1] beyond act_tol")
    is_zero = np.abs(x) <= tols.zero_tol
    y_zero = np.abs(y) <= tols.act_tol
    y_one = np.abs(y - 1.0) <= tols.act_tol
    as_tuple = lambda mask: tuple(int(i) for i in np.flatnonzero(mask))
    n, kappa = problem.n, problem.kappa
    return IndexSets(
        I_g=active_ineq(problem, x, tols),
        I_0=as_tuple(is_zero),
        I_pm0=as_tuple(~is_zero),
        I_00=as_tuple(is_zero & y_zero),
        I_0plus=as_tuple(is_zero & ~y_zero & ~y_one),
        I_01=as_tuple(is_zero & y_one),
        card_active=bool(abs(y.sum() - (n - kappa)) <= tols.act_tol),
    )


def _x_feasible(problem, x, tols):
    g = problem.ineq(x)
    h = problem.eq(x)
    if g.size and g.max() > tols.feas_tol:
        return False
    if h.size and np.abs(h).max() > tols.feas_tol:
        return False
    return True


def is_feasible_original(problem, x, tols=DEFAULT_TOLS):
    x = np.asarray(x, dtype=float)
    if np.count_nonzero(np.abs(x) > tols.zero_tol) > problem.kappa:
        return False
    return _x_feasible(problem, x, tols)


def is_feasible_reformulation(problem, pair, tols=DEFAULT_TOLS):
    x, y = pair.x, pair.y
    ft = tols.feas_tol
    if np.any(y < -ft) or np.any(y > 1 + ft):
        return False
    if y.sum() < problem.n - problem.kappa - ft:
        return False
    if np.max(np.abs(x * y)) > ft:
        return False
    return _x_feasible(problem, x, tols)


def complete_y(problem, x, tols=DEFAULT_TOLS):
    """Return y with 0 on the support of x and 1 elsewhere."""
    x = np.asarray(x, dtype=float)
    if not is_feasible_original(problem, x, tols):
        raise InfeasibleInput("x is not feasible for the cardinality-constrained problem")
    return np.where(np.abs(x) > tols.zero_tol, 0.0, 1.0)


def vertex_completions(problem, x, tols=DEFAULT_TOLS, limit=64):
    """All 0/1 vectors y making (x, y) feasible, up to ``limit`` of them.

    Ordered by decreasing number of ones, so the first entry equals
    :func:`complete_y`.
    """
    from itertools import combinations

    x = np.asarray(x, dtype=float)
    zeros = zero_set(x, tols)
    need = problem.n - problem.kappa
    out = []
    for k in range(len(zeros), need - 1, -1):
        for ones in combinations(zeros, k):
            y = np.zeros(problem.n)
            y[list(ones)] = 1.0
            out.append(y)
            if len(out) >= limit:
                return out
    return out


def sample_feasible_near(problem, pair, radius, count, rng, tols=DEFAULT_TOLS, max_tries=None):
    """Draw feasible pairs (x, y) with ``||(x, y) - pair||_inf <= radius``.

    Complementarity is honoured exactly: each coordinate either keeps
    ``x_i = 0`` or ``y_i = 0``.  Equality constraints are restored by
    Gauss-Newton projection on the free coordinates; candidates violating
    ``g`` or leaving the ball are rejected.  Returns a list of
    :class:`PrimalPair` (possibly shorter than ``count``).
    """
    sets = index_sets(problem, pair, tols)
    n, kappa = problem.n, problem.kappa
    x0, y0 = pair.x, pair.y
    max_tries = max_tries or 50 * count
    out = []
    for _ in range(max_tries):
        if len(out) >= count:
            break
        y = y0.copy()
        free = np.zeros(n, dtype=bool)
        free[list(sets.I_pm0)] = True
        y[list(sets.I_pm0)] = 0.0
        for i in sets.I_00:
            if rng.random() < 0.5:
                free[i] = True
            else:
                y[i] = rng.uniform(0.0, radius)
        for i in sets.I_0plus:
            y[i] = np.clip(y0[i] + rng.uniform(-radius, radius), tols.act_tol, 1.0)
        for i in sets.I_01:
            y[i] = 1.0 - rng.uniform(0.0, radius)
        # an active sum bound leaves no room below 1; restore entries until it holds
        for i in rng.permutation(list(sets.I_01)).astype(int):
            if y.sum() >= n - kappa:
                break
            y[i] = 1.0
        if y.sum() < n - kappa:
            continue
        if not free.any():
            x = x0.copy()
            x[list(sets.I_0)] = 0.0
            out.append(PrimalPair(x, y))
            continue
        x = x0.copy()
        x[list(sets.I_0)] = 0.0
        x[free] += rng.uniform(-radius, radius, size=int(free.sum()))
        for _ in range(20):
            hval = problem.eq(x)
            if hval.size == 0 or np.abs(hval).max() <= 1e-13:
                break
            J = problem.eq_jac(x)[:, free]
            x[free] -= np.linalg.lstsq(J, hval, rcond=None)[0]
        cand = PrimalPair(x, y)
        if np.max(np.abs(x - x0)) > radius:
            continue
        if is_feasible_reformulation(problem, cand, Tolerances(feas_tol=1e-12)):
            out.append(cand)
    return out
