"""Exhaustive checks: worst-case removal, robustness, exact optimum, and the
removal-monotonicity chain of optimum sizes.

Everything here enumerates subsets directly and never calls the solvers.
Evaluations bypass the query ledger unless one is passed explicitly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from .oracle import EPS, Constraint, QueryLedger, as_set, evaluate

log = logging.getLogger(__name__)

REMOVAL_ADVISORY = 25
OPT_ADVISORY = 14


@dataclass(frozen=True)
class RemovalCertificate:
    removal: frozenset
    worst_value: float
    constraint: int


@dataclass(frozen=True)
class OptCertificate:
    opt_set: frozenset
    opt_size: int
    exhaustive: bool = True


def _value(c: Constraint, S, ledger: Optional[QueryLedger]) -> float:
    return c.value(S) if ledger is None else evaluate(c, S, ledger)


def _removals(S: Sequence[int], r: int):
    """All X ⊆ S with |X| <= r, size first then lexicographic."""
    for k in range(min(r, len(S)) + 1):
        yield from combinations(S, k)


def worst_case_removal(S, constraints: Sequence[Constraint], r: int,
                       ledger: Optional[QueryLedger] = None) -> RemovalCertificate:
    """Exact min over X ⊆ S, |X| <= r, and constraints i of c_i(S \\ X).

    Removing elements outside S changes nothing, so X ranges over subsets
    of S only. Ties keep the first (X, i) in enumeration order.
    """
    S = as_set(S)
    if len(S) > REMOVAL_ADVISORY:
        log.warning("worst_case_removal over |S|=%d enumerates %d removals",
                    len(S), sum(math.comb(len(S), k) for k in range(r + 1)))
    members = sorted(S)
    best = None
    for X in _removals(members, r):
        rest = S.difference(X)
        for i, c in enumerate(constraints):
            v = _value(c, rest, ledger)
            if best is None or v < best.worst_value:
                best = RemovalCertificate(frozenset(X), v, i)
    if best is None:  # no constraints
        return RemovalCertificate(frozenset(), math.inf, -1)
    return best


def is_robust(S, constraints: Sequence[Constraint], r: int, alpha: float,
              ledger: Optional[QueryLedger] = None) -> bool:
    """True iff every constraint stays >= 1 - alpha after any removal of <= r elements of S."""
    S = as_set(S)
    bar = 1.0 - alpha - EPS
    for X in _removals(sorted(S), r):
        rest = S.difference(X)
        for c in constraints:
            if _value(c, rest, ledger) < bar:
                return False
    return True


def brute_force_opt(allowed, constraints: Sequence[Constraint], r: int,
                    max_size: Optional[int] = None,
                    ledger: Optional[QueryLedger] = None) -> Optional[OptCertificate]:
    """Smallest (r, 0)-robust subset of ``allowed``; None when none exists.

    Subsets are tried by increasing size, lexicographically within a size.
    ``max_size`` caps the search; a capped miss returns None as well.
    """
    pool = sorted(as_set(allowed))
    if len(pool) > OPT_ADVISORY:
        log.warning("brute_force_opt over %d elements", len(pool))
    top = len(pool) if max_size is None else min(max_size, len(pool))
    for k in range(top + 1):
        for cand in combinations(pool, k):
            if is_robust(cand, constraints, r, 0.0, ledger):
                return OptCertificate(frozenset(cand), k, exhaustive=True)
    return None


def opt_size(allowed, constraints, r) -> Optional[int]:
    cert = brute_force_opt(allowed, constraints, r)
    return None if cert is None else cert.opt_size


def key_lemma_chain(allowed, constraints, r: int, X1, X2) -> list:
    """[OPT(V,r), OPT(V\\X1, r-|X1|), OPT(V\\(X1∪X2), r-|X1|-|X2|), OPT(V,0)]."""
    V = as_set(allowed)
    X1, X2 = as_set(X1), as_set(X2)
    r1, r2 = len(X1), len(X2)
    if r1 + r2 > r:
        raise ValueError("need |X1| + |X2| <= r")
    return [
        opt_size(V, constraints, r),
        opt_size(V - X1, constraints, r - r1),
        opt_size(V - X1 - X2, constraints, r - r1 - r2),
        opt_size(V, constraints, 0),
    ]


def check_key_lemma(allowed, constraints, r: int, X1, X2) -> bool:
    """Each existing optimum in the chain is >= the next one, and the next one exists."""
    chain = key_lemma_chain(allowed, constraints, r, X1, X2)
    for a, b in zip(chain, chain[1:]):
        if a is None:
            continue
        if b is None or a < b:
            return False
    return True
