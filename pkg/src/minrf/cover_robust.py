"""Robust cover algorithms: Alg1 (r = 1), AlgR (general r) and DisJoint.

Each wraps an r = 0 subroutine (``alg0``) from :mod:`minrf.cover_zero`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

from .cover_zero import Alg0, Alg0Request, CoverResult, Failure, get_alg0
from .oracle import (
    EPS,
    Constraint,
    InputError,
    QueryLedger,
    SeededRng,
    as_set,
    evaluate,
    restrict_removal,
    satisfied,
)


class InvariantViolation(AssertionError):
    """A runtime-checked guarantee of an algorithm did not hold."""


@dataclass
class RobustRequest:
    n: int
    constraints: Sequence[Constraint]
    r: int
    alpha: float = 0.0
    alg0: Alg0 | str = "greedy"
    rng: SeededRng = field(default_factory=lambda: SeededRng(0))
    ledger: QueryLedger = field(default_factory=QueryLedger)
    gamma: float = 0.2

    def __post_init__(self):
        if self.r < 0:
            raise InputError(f"r must be non-negative, got {self.r}")
        if isinstance(self.alg0, str):
            self.alg0 = get_alg0(self.alg0, gamma=self.gamma)

    def sub(self, k: int, initial=frozenset(), allowed=None, constraints=None) -> Alg0Request:
        return Alg0Request(
            n=self.n,
            constraints=self.constraints if constraints is None else constraints,
            alpha=self.alpha,
            allowed=allowed,
            initial=initial,
            rng=self.rng.child(k),
            ledger=self.ledger,
        )


@dataclass
class Fix:
    """One element of S1 whose removal violated constraints during Alg1."""
    element: int
    violated: tuple
    rho: float
    added: tuple
    queries: int


@dataclass
class RobustRound:
    t: int
    new_constraints: int
    removals: tuple
    added: tuple
    queries: int


@dataclass
class RobustTrace:
    rounds: list = field(default_factory=list)
    fixes: list = field(default_factory=list)
    base_size: int = 0

    @property
    def rho_sum(self) -> float:
        return sum(f.rho for f in self.fixes)


def _fail(req, mark, trace, failure) -> CoverResult:
    return CoverResult(frozenset(), False, queries=req.ledger.delta(mark),
                       failure=failure, robust_trace=trace)


def alg1(req: RobustRequest) -> CoverResult:
    """Robust against any single removal.

    Each element of the first cover is visited once, in insertion order.
    Adding elements only raises every c_i(S \\ {e}), so an element that
    passed (or was fixed) can never become violating again.
    """
    if req.r != 1:
        raise InputError("alg1 handles r = 1 only")
    mark = req.ledger.snapshot()
    trace = RobustTrace()
    first = req.alg0(req.sub(0))
    if not first.feasible:
        return _fail(req, mark, trace, first.failure)
    S = first.solution
    order = list(first.order)
    trace.base_size = len(S)
    m = len(req.constraints)
    V = frozenset(range(req.n))
    for k, e in enumerate(first.order, start=1):
        before = req.ledger.total
        rest = S - {e}
        violated = tuple(i for i, c in enumerate(req.constraints)
                         if not satisfied(evaluate(c, rest, req.ledger), req.alpha))
        if not violated:
            continue
        # instrumentation only, kept off the ledger
        rho = sum(c.value(S) - c.value(rest) for c in req.constraints) / m
        sub = req.alg0(req.sub(k, initial=rest, allowed=V - {e},
                               constraints=[req.constraints[i] for i in violated]))
        if not sub.feasible:
            failure = Failure("infeasible after removal", constraint=sub.failure.constraint,
                              element=e)
            return _fail(req, mark, trace, failure)
        added = tuple(x for x in sub.order if x not in S)
        S = S | sub.solution
        order.extend(added)
        trace.fixes.append(Fix(e, violated, rho, added, req.ledger.total - before))
        if trace.rho_sum > 1.0 + EPS:
            raise InvariantViolation(f"sum of rho_e reached {trace.rho_sum!r} > 1")
    return CoverResult(
        solution=S,
        feasible=True,
        order=order,
        rounds=len(trace.fixes),
        queries=req.ledger.delta(mark),
        trace=first.trace,
        robust_trace=trace,
    )


def enumerate_violated(S_prev, S_prev2, constraints: Sequence[Constraint], r: int,
                       alpha: float, ledger: QueryLedger) -> list:
    """All (i, X) with X ⊆ S_prev, |X| = r, X ⊄ S_prev2 and c_i(S_prev \\ X) < 1 - alpha.

    When |S_prev| < r the removal size drops to |S_prev|: a removal of r
    elements can then wipe out all of S_prev.
    """
    S_prev, S_prev2 = as_set(S_prev), as_set(S_prev2)
    if not S_prev2 <= S_prev:
        raise InputError("S_prev2 must be a subset of S_prev")
    size = min(r, len(S_prev))
    out = []
    for X in combinations(sorted(S_prev), size):
        X = frozenset(X)
        if X <= S_prev2:
            continue
        rest = S_prev - X
        for i, c in enumerate(constraints):
            if not satisfied(evaluate(c, rest, ledger), alpha):
                out.append((i, X))
    return out


def alg_r(req: RobustRequest) -> CoverResult:
    """Robust against any removal of r elements, in at most r repair rounds."""
    mark = req.ledger.snapshot()
    trace = RobustTrace()
    first = req.alg0(req.sub(0))
    if not first.feasible or req.r == 0:
        first.robust_trace = trace
        first.queries = req.ledger.delta(mark)
        return first
    S_prev2, S_prev = frozenset(), first.solution
    order = list(first.order)
    trace.base_size = len(S_prev)
    for t in range(1, req.r + 1):
        before = req.ledger.total
        pairs = enumerate_violated(S_prev, S_prev2, req.constraints, req.r, req.alpha, req.ledger)
        if not pairs:
            trace.rounds.append(RobustRound(t, 0, (), (), req.ledger.total - before))
            S_prev2 = S_prev
            continue
        F_t = [restrict_removal(req.constraints[i], X) for i, X in pairs]
        sub = req.alg0(req.sub(t, initial=S_prev, constraints=F_t))
        if not sub.feasible:
            bad = next(j for j, c in enumerate(F_t)
                       if c.key == sub.failure.constraint and c.removed == sub.failure.removal)
            i, X = pairs[bad]
            return _fail(req, mark, trace, Failure("infeasible in repair round",
                                                   constraint=i, removal=X, round=t))
        added = tuple(x for x in sub.order if x not in S_prev)
        order.extend(added)
        trace.rounds.append(RobustRound(t, len(F_t), tuple(pairs), added,
                                        req.ledger.total - before))
        S_prev2, S_prev = S_prev, sub.solution
    return CoverResult(
        solution=S_prev,
        feasible=True,
        order=order,
        rounds=len(trace.rounds),
        queries=req.ledger.delta(mark),
        trace=first.trace,
        robust_trace=trace,
    )


def disjoint(req: RobustRequest) -> CoverResult:
    """r + 1 pairwise disjoint covers; failure does not prove infeasibility."""
    mark = req.ledger.snapshot()
    trace = RobustTrace()
    used: frozenset = frozenset()
    order: list = []
    V = frozenset(range(req.n))
    for j in range(req.r + 1):
        before = req.ledger.total
        part = req.alg0(req.sub(j, allowed=V - used))
        if not part.feasible:
            return _fail(req, mark, trace, Failure(f"no disjoint cover #{j + 1}",
                                                   constraint=part.failure.constraint, round=j))
        used = used | part.solution
        order.extend(part.order)
        trace.rounds.append(RobustRound(j, len(req.constraints), (), tuple(part.order),
                                        req.ledger.total - before))
    return CoverResult(
        solution=used,
        feasible=True,
        order=order,
        rounds=req.r + 1,
        queries=req.ledger.delta(mark),
        robust_trace=trace,
    )


ROBUST_NAMES = ("alg1", "algr", "disjoint")


def solve(name: str, req: RobustRequest) -> CoverResult:
    """Dispatch by robust algorithm name; r = 0 always runs alg0 alone."""
    name = name.lower()
    if name == "alg1":
        return alg1(req)
    if name == "algr":
        return alg_r(req)
    if name == "disjoint":
        return disjoint(req)
    raise InputError(f"unknown robust algorithm {name!r}")


def parse_algorithm(spec: str) -> tuple:
    """'algr+randgr' -> ('algr', 'randgr'); bare 'greedy' -> ('algr', 'greedy'); 'disjoint' -> ('disjoint', 'greedy')."""
    parts = spec.lower().split("+")
    if len(parts) == 1:
        return ("disjoint", "greedy") if parts[0] == "disjoint" else ("algr", parts[0])
    if len(parts) == 2:
        return parts[0], parts[1]
    raise InputError(f"cannot parse algorithm {spec!r}")


def run_named(spec: str, n: int, constraints, r: int, alpha: float, seed: int = 0,
              gamma: float = 0.2, ledger: Optional[QueryLedger] = None) -> CoverResult:
    robust, base = parse_algorithm(spec)
    if robust not in ROBUST_NAMES:
        raise InputError(f"unknown robust algorithm {robust!r}")
    req = RobustRequest(n, constraints, r, alpha, alg0=get_alg0(base, gamma=gamma),
                        rng=SeededRng(seed), ledger=ledger or QueryLedger())
    if robust == "alg1" and r != 1:
        raise InputError("alg1 handles r = 1 only")
    return solve(robust, req)
