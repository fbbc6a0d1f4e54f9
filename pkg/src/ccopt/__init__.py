"""Cardinality-constrained optimization through a continuous reformulation.

The package covers problem data (:mod:`ccopt.model`), the (x, y)
reformulation and its index sets, first- and second-order certificates,
a Scholtes-type regularization path, an augmented Lagrangian NLP solver
and a support-enumeration oracle.
"""
from .errors import (
    BranchExplosion,
    CCOptError,
    ClassificationError,
    EnumerationLimit,
    EvaluationError,
    InfeasibleInput,
    ParseError,
    PathStalled,
    SubproblemFailure,
    UnknownProblem,
)
from .model import Problem, check_derivatives, evaluate
from .nlp import NlpOptions, NlpSpec, solve_nlp, solve_restricted
from .oracle import brute_force_solve, enumerate_supports, m_points_in_ball
from .problems import builtin
from .reformulation import (
    DEFAULT_TOLS,
    PrimalPair,
    Tolerances,
    complete_y,
    index_sets,
    is_feasible_original,
    is_feasible_reformulation,
)
from .scholtes import PathOptions, build_nlpt, solve_path
from .secondorder import (
    SecondOrderOptions,
    check_cc_sosc,
    check_m_uniqueness,
    check_sonc,
    critical_cone_branches,
    lagrangian_hessian,
    linearization_cone_member,
)
from .stationarity import (
    Multipliers,
    certify_m_stationary,
    certify_s_stationary,
    check_cc_licq,
    check_cc_mfcq,
    cq_report,
    multiplier_set_vertices,
)

__version__ = "0.1.0"
