"""Built-in test problems and the JSON problem format.

A problem document holds ``n``, ``kappa``, ``Q``, ``c``, ``A_ineq``,
``b_ineq``, ``A_eq``, ``b_eq`` (matrices row-major, as nested lists) and
encodes

    f(x) = 1/2 x'Qx + c'x,   g(x) = A_ineq x - b_ineq,   h(x) = A_eq x - b_eq.

Optional keys: ``f0`` (constant added to f), ``Q_ineq`` (one n x n matrix
per inequality, adding ``1/2 x'Q_i x`` to ``g_i``), ``name``, ``kind`` and
``params``.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import ParseError, UnknownProblem
from .model import Problem

BUILTINS = ("disk2d", "dist3d", "sparse_lsq", "portfolio")

_KEYS = {"n", "kappa", "Q", "c", "f0", "A_ineq", "b_ineq", "A_eq", "b_eq",
         "Q_ineq", "name", "kind", "params"}


def disk2d():
    """min x1^2 + x2^2  s.t.  x1^2 + x2^2 <= 1,  ||x||_0 <= 1."""
    return Problem.from_quadratic(
        Q=2 * np.eye(2), c=np.zeros(2),
        A_ineq=np.zeros((1, 2)), b_ineq=[1.0], Q_ineq=[2 * np.eye(2)],
        kappa=1, name="disk2d", meta={"kind": "disk2d", "params": {}},
    )


def dist3d():
    """min ||x - (0, 1, 2)||^2  s.t.  ||x||_0 <= 1 (no other constraints)."""
    a = np.array([0.0, 1.0, 2.0])
    return Problem.from_quadratic(Q=2 * np.eye(3), c=-2 * a, f0=a @ a, kappa=1, name="dist3d",
                                  meta={"kind": "dist3d", "params": {}})


def sparse_lsq(n=6, kappa=2, seed=0, rows=None, noise=0.01):
    """min ||A x - b||^2 with Gaussian A and b = A x_true + noise.

    ``x_true`` has exactly ``kappa`` nonzeros of magnitude in [1, 2];
    ``rows`` defaults to ``2 n``.
    """
    rng = np.random.default_rng(seed)
    rows = 2 * n if rows is None else rows
    A = rng.standard_normal((rows, n))
    x_true = np.zeros(n)
    supp = np.sort(rng.choice(n, size=kappa, replace=False))
    x_true[supp] = rng.choice([-1.0, 1.0], size=kappa) * rng.uniform(1.0, 2.0, size=kappa)
    b = A @ x_true + noise * rng.standard_normal(rows)
    params = {"n": n, "kappa": kappa, "seed": seed, "rows": rows, "noise": noise}
    return Problem.from_quadratic(
        Q=2 * A.T @ A, c=-2 * A.T @ b, f0=b @ b, kappa=kappa, name="sparse_lsq",
        meta={"kind": "sparse_lsq", "params": params, "A": A, "b": b, "x_true": x_true},
    )


def portfolio(n=6, kappa=3, seed=0, rho=0.5):
    """min x'Sx - rho r'x  s.t.  sum(x) = 1, x >= 0, ||x||_0 <= kappa."""
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    sigma = 0.1 * (B @ B.T) / n + 0.05 * np.eye(n)
    r = rng.uniform(0.02, 0.2, size=n)
    params = {"n": n, "kappa": kappa, "seed": seed, "rho": rho}
    return Problem.from_quadratic(
        Q=2 * sigma, c=-rho * r,
        A_ineq=-np.eye(n), b_ineq=np.zeros(n),
        A_eq=np.ones((1, n)), b_eq=[1.0],
        kappa=kappa, name="portfolio", meta={"kind": "portfolio", "params": params},
    )


def builtin(name, **params):
    """Construct a built-in problem by name."""
    factories = {"disk2d": disk2d, "dist3d": dist3d, "sparse_lsq": sparse_lsq,
                 "portfolio": portfolio}
    if name not in factories:
        raise UnknownProblem(f"unknown problem {name!r}; choose from {', '.join(BUILTINS)}")
    return factories[name](**params)


# -- JSON ----------------------------------------------------------------


def to_document(problem):
    q = problem.quadratic
    if q is None:
        raise ValueError("only problems with quadratic data can be serialised")
    doc = {
        "n": problem.n,
        "kappa": problem.kappa,
        "Q": q.Q.tolist(),
        "c": q.c.tolist(),
        "f0": q.f0,
        "A_ineq": q.A_ineq.tolist(),
        "b_ineq": q.b_ineq.tolist(),
        "A_eq": q.A_eq.tolist(),
        "b_eq": q.b_eq.tolist(),
    }
    if q.Q_ineq is not None:
        doc["Q_ineq"] = q.Q_ineq.tolist()
    if problem.name:
        doc["name"] = problem.name
    if "kind" in problem.meta:
        doc["kind"] = problem.meta["kind"]
        doc["params"] = problem.meta.get("params", {})
    return doc


def _matrix(doc, key, rows, cols, required=True):
    if key not in doc:
        if required:
            raise ParseError(key, "missing")
        return np.zeros((0, cols))
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(key, "not numeric") from exc
    if arr.size == 0:
        arr = arr.reshape(0, cols)
    if arr.ndim != 2 or arr.shape[1] != cols or (rows is not None and arr.shape[0] != rows):
        raise ParseError(key, f"bad shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(key, "non-finite entries")
    return arr


def _vector(doc, key, length, required=True):
    if key not in doc:
        if required:
            raise ParseError(key, "missing")
        return np.zeros(0)
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(key, "not numeric") from exc
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ParseError(key, f"expected length {length}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(key, "non-finite entries")
    return arr


def from_document(doc):
    """Build a :class:`Problem` from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected an object")
    unknown = set(doc) - _KEYS
    if unknown:
        raise ParseError(sorted(unknown)[0], "unknown key")
    n = doc.get("n")
    if not isinstance(n, int) or n < 2:
        raise ParseError("n", "must be an integer >= 2")
    kappa = doc.get("kappa")
    if not isinstance(kappa, int) or not 0 < kappa < n:
        raise ParseError("kappa", "must satisfy 0 < kappa < n")
    Q = _matrix(doc, "Q", n, n)
    c = _vector(doc, "c", n)
    A_ineq = _matrix(doc, "A_ineq", None, n, required=False)
    b_ineq = _vector(doc, "b_ineq", A_ineq.shape[0], required=A_ineq.shape[0] > 0)
    A_eq = _matrix(doc, "A_eq", None, n, required=False)
    b_eq = _vector(doc, "b_eq", A_eq.shape[0], required=A_eq.shape[0] > 0)
    f0 = doc.get("f0", 0.0)
    if not isinstance(f0, (int, float)) or isinstance(f0, bool) or not np.isfinite(f0):
        raise ParseError("f0", "must be a finite number")
    Q_ineq = None
    if "Q_ineq" in doc:
        Q_ineq = np.array(doc["Q_ineq"], dtype=float)
        if Q_ineq.shape != (A_ineq.shape[0], n, n):
            raise ParseError("Q_ineq", f"bad shape {Q_ineq.shape}")
    meta = {}
    if "kind" in doc:
        meta = {"kind": doc["kind"], "params": doc.get("params", {})}
    return Problem.from_quadratic(Q, c, A_ineq, b_ineq, A_eq, b_eq, kappa=kappa,
                                  Q_ineq=Q_ineq, f0=f0, name=doc.get("name", ""), meta=meta)


def dumps(problem):
    return json.dumps(to_document(problem), sort_keys=True)


def save(problem, path):
    with open(path, "w") as fh:
        json.dump(to_document(problem), fh, indent=1, sort_keys=True)


def load(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError("<document>", str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", str(exc)) from exc
    return from_document(doc)
