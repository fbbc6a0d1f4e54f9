"""Command-line interface.

Subcommands: ``solve``, ``certify``, ``second-order``, ``oracle`` and
``check-derivatives``.  Reports are JSON on stdout (or ``--out``);
diagnostics go to stderr.

Exit codes: 0 success, 1 input or configuration error, 2 stall or
enumeration limit, 3 infeasible point, 4 failed precondition.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import problems
from .errors import (
    BranchExplosion,
    CCOptError,
    EnumerationLimit,
    EvaluationError,
    InfeasibleInput,
    ParseError,
    PathStalled,
    UnknownProblem,
)
from .model import check_derivatives
from .nlp import NlpOptions
from .oracle import brute_force_solve
from .reformulation import (
    PrimalPair,
    Tolerances,
    complete_y,
    index_sets,
    is_feasible_original,
    is_feasible_reformulation,
)
from .scholtes import PathOptions, solve_path
from .secondorder import SecondOrderOptions, check_cc_sosc, check_sonc
from .stationarity import certify_m_stationary, certify_s_stationary, cq_report

EXIT_OK, EXIT_INPUT, EXIT_STALL, EXIT_INFEASIBLE, EXIT_PRECONDITION = 0, 1, 2, 3, 4

COMMANDS = ("solve", "certify", "second-order", "oracle", "check-derivatives")
_PARAM_KEYS = ("n", "kappa", "rho", "rows", "noise")


@dataclass
class RunConfig:
    command: str = ""
    builtin: str = ""
    problem: str = ""
    params: dict = field(default_factory=dict)
    seed: int = 0
    x: list = None
    y: list = None
    start: list = None
    mode: str = "exists"
    cone: str = "pair"
    starts_per_support: int = 3
    samples: int = 1000
    out: str = ""
    tolerances: dict = field(default_factory=dict)
    path: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)


_CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


def _vector(text, name):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ParseError(name, "expected comma-separated numbers") from exc


def _sub_options(cls, values, name):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ParseError(f"{name}.{sorted(unknown)[0]}", "unknown key")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ParseError(name, str(exc)) from exc


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError("config", str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError("config", str(exc)) from exc
    if not isinstance(doc, dict):
        raise ParseError("config", "expected an object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ParseError(sorted(unknown)[0], "unknown config key")
    return doc


def build_config(args):
    """Merge the optional config file with command-line flags (flags win)."""
    doc = load_config(args.config) if args.config else {}
    cfg = RunConfig(command=args.command, **doc)
    cfg.params = dict(cfg.params)
    unknown = set(cfg.params) - set(_PARAM_KEYS)
    if unknown:
        raise ParseError(f"params.{sorted(unknown)[0]}", "unknown parameter")
    for key in ("builtin", "problem", "out", "mode", "cone"):
        value = getattr(args, key, None)
        if value:
            setattr(cfg, key, value)
    for key in ("starts_per_support", "samples"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if args.seed is not None:
        cfg.seed = args.seed
    for key in ("n", "kappa", "rho", "rows", "noise"):
        value = getattr(args, key, None)
        if value is not None:
            cfg.params[key] = value
    for key in ("x", "y", "start"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, _vector(value, key))
    if bool(cfg.builtin) == bool(cfg.problem):
        raise ParseError("problem", "give exactly one of --builtin and --problem")
    return cfg


def make_problem(cfg):
    if cfg.problem:
        return problems.load(cfg.problem)
    params = dict(cfg.params)
    if cfg.builtin in ("sparse_lsq", "portfolio"):
        params["seed"] = cfg.seed
    elif params:
        raise ParseError("params", f"{cfg.builtin} takes no parameters")
    try:
        return problems.builtin(cfg.builtin, **params)
    except TypeError as exc:
        raise ParseError("params", str(exc)) from exc
    except ValueError as exc:
        raise ParseError("params", str(exc)) from exc


def _point(problem, values, name):
    if values is None:
        raise ParseError(name, "required")
    x = np.asarray(values, dtype=float)
    if x.shape != (problem.n,):
        raise ParseError(name, f"expected {problem.n} entries, got {x.size}")
    return x


def _clean(obj):
    """Make ``obj`` strict JSON: numpy to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _header(cfg, problem):
    return {"command": cfg.command, "problem": problem.name or cfg.problem,
            "n": problem.n, "kappa": problem.kappa, "seed": cfg.seed}


# -- commands ------------------------------------------------------------


def cmd_solve(cfg, problem):
    tols = _sub_options(Tolerances, cfg.tolerances, "tolerances")
    popts = _sub_options(PathOptions, dict({"seed": cfg.seed}, **cfg.path), "path")
    nopts = _sub_options(NlpOptions, cfg.solver, "solver")
    if cfg.start is not None:
        start = _point(problem, cfg.start, "start")
    else:
        start = np.random.default_rng(cfg.seed).standard_normal(problem.n)
    report = dict(_header(cfg, problem), start=start, path_options=asdict(popts))
    try:
        path = solve_path(problem, start, popts, nopts, tols)
    except PathStalled as exc:
        partial = exc.path.to_records() if exc.path is not None else []
        report.update(status="stalled", steps=partial, final=None, message=str(exc))
        return EXIT_STALL, report
    records = path.to_records()
    report.update(status="converged", steps=records[:-1], final=records[-1])
    return EXIT_OK, report


def _pair_for(problem, cfg, tols):
    x = _point(problem, cfg.x, "x")
    if not is_feasible_original(problem, x, tols):
        raise InfeasibleInput("x violates the constraints or the cardinality bound")
    if cfg.y is None:
        y = complete_y(problem, x, tols)
    else:
        y = _point(problem, cfg.y, "y")
        if not is_feasible_reformulation(problem, PrimalPair(x, y), tols):
            raise InfeasibleInput("(x, y) is not feasible for the reformulation")
    return PrimalPair(x, y)


def cmd_certify(cfg, problem):
    tols = _sub_options(Tolerances, cfg.tolerances, "tolerances")
    pair = _pair_for(problem, cfg, tols)
    m_cert = certify_m_stationary(problem, pair.x, tols)
    s_cert = certify_s_stationary(problem, pair, tols)
    best = s_cert if s_cert.kind == "S" else m_cert
    report = dict(_header(cfg, problem), x=pair.x, y=pair.y, kind=best.kind,
                  residual=best.residual, certificate=best.to_dict(),
                  m_certificate=m_cert.to_dict(), s_certificate=s_cert.to_dict(),
                  index_sets=index_sets(problem, pair, tols).to_dict(),
                  cq=cq_report(problem, pair.x, tols).to_dict())
    return EXIT_OK, report


def cmd_second_order(cfg, problem):
    tols = _sub_options(Tolerances, cfg.tolerances, "tolerances")
    if cfg.mode not in ("exists", "forall", "sonc"):
        raise ParseError("mode", "expected exists, forall or sonc")
    pair = _pair_for(problem, cfg, tols)
    if cfg.mode == "forall":
        cert = certify_m_stationary(problem, pair.x, tols)
    else:
        cert = certify_s_stationary(problem, pair, tols)
    if cert.kind == "none":
        kind = "M" if cfg.mode == "forall" else "S"
        return EXIT_PRECONDITION, dict(_header(cfg, problem), x=pair.x, y=pair.y,
                                       status="precondition_failed",
                                       message=f"point is not {kind}-stationary",
                                       residual=cert.residual)
    sopts = SecondOrderOptions(samples=cfg.samples, seed=cfg.seed, cone_mode=cfg.cone, tols=tols)
    if cfg.mode == "sonc":
        verdict = check_sonc(problem, pair, cert.multipliers, sopts)
    else:
        verdict = check_cc_sosc(problem, pair, cfg.mode, sopts)
    report = dict(_header(cfg, problem), x=pair.x, y=pair.y, mode=cfg.mode, cone=cfg.cone,
                  verdict=verdict.to_dict(), cq=cq_report(problem, pair.x, tols).to_dict())
    return EXIT_OK, report


def cmd_oracle(cfg, problem):
    tols = _sub_options(Tolerances, cfg.tolerances, "tolerances")
    nopts = _sub_options(NlpOptions, cfg.solver, "solver")
    result = brute_force_solve(problem, cfg.starts_per_support, cfg.seed, nopts, tols)
    report = dict(_header(cfg, problem), **result.to_dict())
    return EXIT_OK, report


def cmd_check_derivatives(cfg, problem):
    if cfg.x is not None:
        x = _point(problem, cfg.x, "x")
    else:
        x = np.random.default_rng(cfg.seed).standard_normal(problem.n)
    rep = check_derivatives(problem, x)
    report = dict(_header(cfg, problem), x=x, **rep.to_dict())
    return (EXIT_OK if rep.passed else EXIT_INPUT), report


HANDLERS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "second-order": cmd_second_order,
    "oracle": cmd_oracle,
    "check-derivatives": cmd_check_derivatives,
}


# -- argument parsing ----------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's own code 2 would read as a stall
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    src = common.add_argument_group("problem")
    src.add_argument("--builtin", choices=problems.BUILTINS, help="built-in problem name")
    src.add_argument("--problem", help="path to a problem JSON document")
    src.add_argument("--n", type=int, help="dimension (sparse_lsq, portfolio)")
    src.add_argument("--kappa", type=int, help="cardinality bound (sparse_lsq, portfolio)")
    src.add_argument("--rho", type=float, help="return weight (portfolio)")
    src.add_argument("--rows", type=int, help="rows of A (sparse_lsq)")
    src.add_argument("--noise", type=float, help="noise scale (sparse_lsq)")
    common.add_argument("--seed", type=int, help="seed for generators and random starts")
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--out", help="write the report here instead of stdout")

    parser = _Parser(prog="ccopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="follow the regularization path")
    p.add_argument("--start", help="comma-separated start x")
    p = sub.add_parser("certify", parents=[common], help="first-order certificate of a point")
    p.add_argument("--x", help="comma-separated point")
    p.add_argument("--y", help="comma-separated y (completed if omitted)")
    p = sub.add_parser("second-order", parents=[common], help="second-order verdict at a point")
    p.add_argument("--x", help="comma-separated point")
    p.add_argument("--y", help="comma-separated y (completed if omitted)")
    p.add_argument("--mode", choices=("exists", "forall", "sonc"))
    p.add_argument("--cone", choices=("pair", "x-union"))
    p.add_argument("--samples", type=int, help="sampled directions per branch")
    p = sub.add_parser("oracle", parents=[common], help="enumerate supports")
    p.add_argument("--starts-per-support", dest="starts_per_support", type=int)
    p = sub.add_parser("check-derivatives", parents=[common], help="finite-difference check")
    p.add_argument("--x", help="comma-separated point (random if omitted)")
    return parser


def _emit(report, out):
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = getattr(args, "out", None)
    try:
        cfg = build_config(args)
        out = cfg.out or out
        problem = make_problem(cfg)
        code, report = HANDLERS[cfg.command](cfg, problem)
    except (ParseError, UnknownProblem, EvaluationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleInput as exc:
        print(f"error: infeasible input: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (EnumerationLimit, BranchExplosion) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STALL
    except CCOptError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report, out)
    if code != EXIT_OK:
        print(f"finished with exit code {code}: {report.get('status', '')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
