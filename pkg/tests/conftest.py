import numpy as np
import pytest

from ccopt.model import Problem
from ccopt.problems import builtin


def neg_norm():
    """f = -||x||^2 on R^2, kappa = 1."""
    return Problem(n=2, kappa=1, f=lambda x: -x @ x, grad_f=lambda x: -2 * x,
                   hess_f=lambda x: -2 * np.eye(2), name="neg_norm")


def bilinear():
    """f = x1 x2 on R^2, kappa = 1."""
    return Problem(n=2, kappa=1, f=lambda x: x[0] * x[1],
                   grad_f=lambda x: np.array([x[1], x[0]]),
                   hess_f=lambda x: np.array([[0.0, 1.0], [1.0, 0.0]]), name="bilinear")


def opposed_pair():
    """g = (x1, -x1) with f = x2^2; every x with x1 = 0 has both g active."""
    return Problem.from_quadratic(Q=np.diag([0.0, 2.0]), c=np.zeros(2),
                                  A_ineq=[[1.0, 0.0], [-1.0, 0.0]], b_ineq=[0.0, 0.0],
                                  kappa=1, name="opposed_pair")


def duplicated_bound():
    """min -x1 s.t. x1 <= 1 written twice, kappa = 1; KKT point (1, 0)."""
    return Problem.from_quadratic(Q=np.zeros((2, 2)), c=[-1.0, 0.0],
                                  A_ineq=[[1.0, 0.0], [1.0, 0.0]], b_ineq=[1.0, 1.0],
                                  kappa=1, name="duplicated_bound")


@pytest.fixture
def disk():
    return builtin("disk2d")


@pytest.fixture
def dist():
    return builtin("dist3d")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sample_directions(branches, n, rng, count):
    """Mix of free Gaussian directions, cone members and perturbed members."""
    from ccopt.secondorder import project_onto_cone

    out = []
    for k in range(count):
        d = rng.standard_normal(n)
        kind = k % 4
        if kind and branches:
            b = branches[rng.integers(len(branches))]
            d = project_onto_cone(b, d)
            if kind == 2:
                d = -d
            elif kind == 3:
                d[rng.integers(n)] += rng.choice([-1.0, 1.0]) * rng.uniform(1e-3, 1.0)
        out.append(d)
    return out


# -- acceptance reporting ------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    detail = getattr(item, "criterion_detail", "")
    _CRITERIA[mark.args[0]] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        status, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {status}  {detail}")


@pytest.fixture
def detail(request):
    """Attach a one-line summary to the running acceptance test."""
    def record(text):
        request.node.criterion_detail = text
    return record
