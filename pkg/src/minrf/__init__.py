"""Greedy bicriteria solvers for minimum robust multi-submodular cover."""
from .oracle import (
    EPS,
    FunctionOracle,
    InputError,
    ModularFunction,
    NormalizedOracle,
    QueryLedger,
    SeededRng,
    SetFunction,
    evaluate,
    marginal_gain,
    restrict_removal,
    sum_aggregate,
)
from .cover_zero import (
    Alg0Request,
    CoverResult,
    NumericalStall,
    check_feasible,
    get_alg0,
    greedy,
    rand_gr,
    sep,
    thres_gr,
)
from .cover_robust import (
    InvariantViolation,
    RobustRequest,
    alg1,
    alg_r,
    disjoint,
    enumerate_violated,
    run_named,
)
from .verify import brute_force_opt, check_key_lemma, is_robust, worst_case_removal

__version__ = "0.1.0"
