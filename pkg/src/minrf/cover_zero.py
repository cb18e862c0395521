"""Cover algorithms for r = 0: RandGr, Greedy, ThresGr and the Sep baseline.

All four take an :class:`Alg0Request` and return a :class:`CoverResult`,
so any of them can be plugged into the robust algorithms as the r = 0
subroutine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Sequence

from .oracle import (
    EPS,
    Constraint,
    InputError,
    QueryLedger,
    SeededRng,
    as_set,
    evaluate,
    satisfied,
)


class NumericalStall(RuntimeError):
    """No candidate improves the remaining constraints although they are unsatisfied."""


@dataclass
class Alg0Request:
    n: int
    constraints: Sequence[Constraint]
    alpha: float = 0.0
    allowed: Optional[frozenset] = None
    initial: frozenset = frozenset()
    rng: SeededRng = field(default_factory=lambda: SeededRng(0))
    ledger: QueryLedger = field(default_factory=QueryLedger)

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise InputError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.n < 1:
            raise InputError("ground set must be non-empty")
        self.allowed = frozenset(range(self.n)) if self.allowed is None else as_set(self.allowed)
        self.initial = as_set(self.initial)
        for S in (self.allowed, self.initial):
            if S and (min(S) < 0 or max(S) >= self.n):
                raise InputError(f"element ids outside ground set of size {self.n}")


@dataclass
class Step:
    element: int
    gain: float
    remaining: int
    threshold: Optional[float] = None
    sampled: Optional[tuple] = None


@dataclass
class Failure:
    reason: str
    constraint: object = None
    element: Optional[int] = None
    removal: Optional[frozenset] = None
    round: Optional[int] = None


@dataclass
class CoverResult:
    solution: frozenset
    feasible: bool
    order: list = field(default_factory=list)
    rounds: int = 0
    queries: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    failure: Optional[Failure] = None
    robust_trace: object = None

    @property
    def size(self) -> int:
        return len(self.solution)

    @property
    def total_queries(self) -> int:
        return sum(self.queries.values())


Alg0 = Callable[[Alg0Request], CoverResult]


def check_feasible(allowed, constraints: Sequence[Constraint], alpha: float,
                   ledger: QueryLedger) -> Optional[int]:
    """Position of the first constraint that ``allowed`` cannot satisfy, else None.

    Costs one query per constraint.
    """
    allowed = as_set(allowed)
    failed = None
    for j, c in enumerate(constraints):
        if not satisfied(evaluate(c, allowed, ledger), alpha) and failed is None:
            failed = j
    return failed


def is_feasible(allowed, constraints, alpha, ledger) -> bool:
    return check_feasible(allowed, constraints, alpha, ledger) is None


def _infeasible(req, mark, failed, reason="infeasible") -> CoverResult:
    c = req.constraints[failed]
    return CoverResult(
        solution=frozenset(),
        feasible=False,
        queries=req.ledger.delta(mark),
        failure=Failure(reason, constraint=c.key, removal=getattr(c, "removed", None)),
    )


class _State:
    """Current set plus cached constraint values, shared by the greedy variants."""

    def __init__(self, req: Alg0Request):
        self.req = req
        self.S = req.initial
        self.order = sorted(req.initial)
        self.values = [evaluate(c, self.S, req.ledger) for c in req.constraints]
        self.remaining = [j for j, v in enumerate(self.values) if not satisfied(v, req.alpha)]
        self.trace: list = []

    def candidates(self):
        return sorted(self.req.allowed - self.S)

    def gain(self, e: int, working: Sequence[int]):
        """Summed gain of ``e`` over ``working`` plus the new values (one query each)."""
        Se = self.S | {e}
        new = {j: evaluate(self.req.constraints[j], Se, self.req.ledger) for j in working}
        return sum(new[j] - self.values[j] for j in working), new

    def add(self, e: int, new: dict, step: Step):
        self.S = self.S | {e}
        self.order.append(e)
        for j, v in new.items():
            self.values[j] = v
        # constraints outside the evaluated set need a fresh value
        for j in self.remaining:
            if j not in new:
                self.values[j] = evaluate(self.req.constraints[j], self.S, self.req.ledger)
        self.remaining = [j for j in self.remaining if not satisfied(self.values[j], self.req.alpha)]
        self.trace.append(step)

    def result(self, mark) -> CoverResult:
        return CoverResult(
            solution=self.S,
            feasible=True,
            order=self.order,
            rounds=len(self.trace),
            queries=self.req.ledger.delta(mark),
            trace=self.trace,
        )


def _best(state: _State, working):
    best_e, best_gain, best_new = None, -math.inf, None
    for e in state.candidates():
        g, new = state.gain(e, working)
        if g > best_gain:
            best_e, best_gain, best_new = e, g, new
    return best_e, best_gain, best_new


def _greedy_step(state: _State, working, **step_kw):
    e, g, new = _best(state, working)
    if e is None or g <= 0.0:
        raise NumericalStall(
            f"no improving element with {len(state.remaining)} constraints unsatisfied "
            f"(best gain {g})"
        )
    state.add(e, new, Step(e, g, len(state.remaining), **step_kw))


def rand_gr(req: Alg0Request) -> CoverResult:
    """Randomized greedy: each round optimizes a random half of the unsatisfied constraints."""
    mark = req.ledger.snapshot()
    failed = check_feasible(req.allowed | req.initial, req.constraints, req.alpha, req.ledger)
    if failed is not None:
        return _infeasible(req, mark, failed)
    gen = req.rng.generator()
    state = _State(req)
    while state.remaining:
        k = math.ceil(len(state.remaining) / 2)
        picks = gen.choice(len(state.remaining), size=k, replace=False)
        sample = tuple(sorted(state.remaining[p] for p in picks))
        _greedy_step(state, sample, sampled=sample)
    return state.result(mark)


def greedy(req: Alg0Request, keep_satisfied: bool = False) -> CoverResult:
    """Plain greedy on the sum of the (remaining) constraints.

    With ``keep_satisfied`` the sum runs over all constraints for the whole
    run instead of dropping those already satisfied.
    """
    mark = req.ledger.snapshot()
    failed = check_feasible(req.allowed | req.initial, req.constraints, req.alpha, req.ledger)
    if failed is not None:
        return _infeasible(req, mark, failed)
    state = _State(req)
    everything = tuple(range(len(req.constraints)))
    while state.remaining:
        working = everything if keep_satisfied else tuple(state.remaining)
        _greedy_step(state, working)
    return state.result(mark)


def thres_gr(req: Alg0Request, gamma: float = 0.2, keep_satisfied: bool = False) -> CoverResult:
    """Threshold greedy: sweep the elements in id order, lowering the bar by (1 - gamma) per sweep."""
    if not 0.0 < gamma < 1.0:
        raise InputError(f"gamma must lie in (0, 1), got {gamma}")
    mark = req.ledger.snapshot()
    failed = check_feasible(req.allowed | req.initial, req.constraints, req.alpha, req.ledger)
    if failed is not None:
        return _infeasible(req, mark, failed)
    state = _State(req)
    if not state.remaining:
        return state.result(mark)
    everything = tuple(range(len(req.constraints)))

    def working():
        return everything if keep_satisfied else tuple(state.remaining)

    _, pi, _ = _best(state, working())
    # below this bar rounding noise dominates; finish with exact greedy steps
    pi_min = EPS * max(req.alpha, EPS) / req.n
    while state.remaining and pi >= pi_min:
        for e in state.candidates():
            g, new = state.gain(e, working())
            if g >= pi:
                state.add(e, new, Step(e, g, len(state.remaining), threshold=pi))
                if not state.remaining:
                    break
        pi *= 1.0 - gamma
    while state.remaining:
        _greedy_step(state, working(), threshold=0.0)
    return state.result(mark)


def sep(req: Alg0Request) -> CoverResult:
    """Baseline: greedy on each constraint separately, union of the parts."""
    if req.initial:
        raise InputError("sep is defined only for an empty initial set")
    mark = req.ledger.snapshot()
    union: set = set()
    order: list = []
    trace: list = []
    for j, c in enumerate(req.constraints):
        sub = greedy(Alg0Request(req.n, [c], req.alpha, req.allowed, frozenset(),
                                 req.rng, req.ledger))
        if not sub.feasible:
            return _infeasible(req, mark, j)
        for e in sub.order:
            if e not in union:
                union.add(e)
                order.append(e)
        trace.extend(sub.trace)
    return CoverResult(
        solution=frozenset(union),
        feasible=True,
        order=order,
        rounds=len(trace),
        queries=req.ledger.delta(mark),
        trace=trace,
    )


ALG0_NAMES = ("randgr", "greedy", "thresgr", "sep")


def get_alg0(name: str, gamma: float = 0.2, keep_satisfied: bool = False) -> Alg0:
    name = name.lower()
    if name == "randgr":
        return rand_gr
    if name == "greedy":
        return partial(greedy, keep_satisfied=keep_satisfied)
    if name == "thresgr":
        return partial(thres_gr, gamma=gamma, keep_satisfied=keep_satisfied)
    if name == "sep":
        return sep
    raise InputError(f"unknown r=0 algorithm {name!r}; choose from {', '.join(ALG0_NAMES)}")
