"""Submodular oracles, normalization and query accounting.

Every algorithm in the package talks to constraints through
:func:`evaluate`, which charges exactly one query to the constraint's
ledger entry. Pure (uncounted) evaluation is available as
``constraint.value(S)`` and is used only by verification code and
instrumentation.
"""
from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

EPS = 1e-9


class InputError(ValueError):
    """Invalid element ids, thresholds or arguments."""


def as_set(S: Iterable[int]) -> frozenset:
    return S if isinstance(S, frozenset) else frozenset(S)


def satisfied(value: float, alpha: float) -> bool:
    """``value >= 1 - alpha`` up to the global tolerance."""
    return value >= 1.0 - alpha - EPS


# ---------------------------------------------------------------------------
# Raw set functions
# ---------------------------------------------------------------------------


class SetFunction(ABC):
    """A monotone submodular set function over ids ``0..n-1``."""

    n: int
    name: str = "f"

    @abstractmethod
    def __call__(self, S: frozenset) -> float:
        ...


class FunctionOracle(SetFunction):
    """Wraps a plain callable. Handy for tests and ad-hoc objectives."""

    def __init__(self, fn: Callable[[frozenset], float], n: int, name: str = "fn"):
        self.fn = fn
        self.n = n
        self.name = name

    def __call__(self, S):
        return float(self.fn(S))


class ModularFunction(SetFunction):
    """f(S) = sum of per-element weights."""

    def __init__(self, weights, name: str = "modular"):
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights < 0):
            raise InputError("modular weights must be non-negative")
        self.n = len(self.weights)
        self.name = name

    def __call__(self, S):
        if not S:
            return 0.0
        return float(sum(self.weights[e] for e in sorted(S)))


# ---------------------------------------------------------------------------
# Ledger and RNG
# ---------------------------------------------------------------------------


class QueryLedger:
    """Per-constraint query counts. Increments are atomic."""

    def __init__(self):
        self._counts: Counter = Counter()
        self._lock = threading.Lock()

    def charge(self, key, amount: int = 1) -> None:
        with self._lock:
            self._counts[key] += amount

    @property
    def per_constraint(self) -> dict:
        with self._lock:
            return dict(self._counts)

    @property
    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    def snapshot(self) -> Counter:
        with self._lock:
            return Counter(self._counts)

    def delta(self, since: Counter) -> dict:
        now = self.snapshot()
        now.subtract(since)
        return {k: v for k, v in sorted(now.items(), key=lambda kv: repr(kv[0])) if v}

    def __repr__(self):
        return f"QueryLedger(total={self.total})"


@dataclass(frozen=True)
class SeededRng:
    """Reproducible random stream identified by a seed and a stream path."""

    seed: int
    stream: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream + (int(k),))


# ---------------------------------------------------------------------------
# Normalized constraints
# ---------------------------------------------------------------------------


class Constraint(ABC):
    """A constraint valued in [0, 1]; satisfied when value >= 1 - alpha.

    ``key`` identifies the ledger entry that pays for queries. Derived
    constraints inherit the key of the constraint they were built from.
    """

    key: object
    n: int

    @abstractmethod
    def value(self, S: frozenset) -> float:
        ...

    @property
    def index(self) -> int:
        return self.key

    def check_ids(self, S) -> None:
        if S and (min(S) < 0 or max(S) >= self.n):
            bad = sorted(e for e in S if e < 0 or e >= self.n)
            raise InputError(f"element ids {bad} outside ground set of size {self.n}")


class NormalizedOracle(Constraint):
    """value(S) = min(inner(S) / T, 1); a zero threshold is vacuous (value 1)."""

    def __init__(self, inner: SetFunction, threshold: float, key=0, name: str | None = None):
        if threshold < 0 or not np.isfinite(threshold):
            raise InputError(f"threshold must be a finite non-negative number, got {threshold}")
        self.inner = inner
        self.threshold = float(threshold)
        self.key = key
        self.n = inner.n
        self.name = name or getattr(inner, "name", "f")

    def value(self, S):
        if self.threshold == 0.0:
            return 1.0
        return min(self.inner(as_set(S)) / self.threshold, 1.0)

    def __repr__(self):
        return f"NormalizedOracle({self.name!r}, T={self.threshold:g}, key={self.key!r})"


class RestrictedOracle(Constraint):
    """g(S) = base(S \\ removed)."""

    def __init__(self, base: Constraint, removed: Iterable[int]):
        self.base = base
        self.removed = as_set(removed)
        self.key = base.key
        self.n = base.n

    def value(self, S):
        return self.base.value(as_set(S) - self.removed)

    @property
    def root(self) -> Constraint:
        c = self.base
        while isinstance(c, RestrictedOracle):
            c = c.base
        return c

    def __repr__(self):
        return f"RestrictedOracle({self.base!r}, X={sorted(self.removed)})"


class SumOracle:
    """F(S) = sum_i c_i(S); one evaluation charges every constituent once."""

    def __init__(self, constraints: Sequence[Constraint]):
        if not constraints:
            raise InputError("sum_aggregate needs at least one constraint")
        self.constraints = list(constraints)
        self.n = self.constraints[0].n

    def value(self, S):
        S = as_set(S)
        return float(sum(c.value(S) for c in self.constraints))

    def evaluate(self, S, ledger: QueryLedger) -> float:
        S = as_set(S)
        return float(sum(evaluate(c, S, ledger) for c in self.constraints))

    def __len__(self):
        return len(self.constraints)


def evaluate(c: Constraint, S: Iterable[int], ledger: QueryLedger) -> float:
    """Counted evaluation of one constraint on one set."""
    S = as_set(S)
    c.check_ids(S)
    ledger.charge(c.key)
    return c.value(S)


def marginal_gain(c: Constraint, S: Iterable[int], e: int, ledger: QueryLedger,
                  cached_value: float | None = None) -> float:
    """c(S + e) - c(S). Costs one query when ``cached_value`` is c(S), two otherwise."""
    S = as_set(S)
    if e in S:
        raise InputError(f"element {e} already in the set")
    base = evaluate(c, S, ledger) if cached_value is None else cached_value
    return evaluate(c, S | {e}, ledger) - base


def restrict_removal(c: Constraint, X: Iterable[int]) -> RestrictedOracle:
    return RestrictedOracle(c, X)


def sum_aggregate(constraints: Sequence[Constraint]) -> SumOracle:
    return SumOracle(constraints)


def rekey(constraints: Sequence[NormalizedOracle]) -> list:
    """Assign ledger keys 0..m-1 in list order (in place) and return the list."""
    for i, c in enumerate(constraints):
        c.key = i
    return list(constraints)


# ---------------------------------------------------------------------------
# Spot checks
# ---------------------------------------------------------------------------


def _random_chain(n, rng):
    perm = rng.permutation(n)
    b = int(rng.integers(0, n + 1))
    a = int(rng.integers(0, b + 1))
    return frozenset(perm[:a].tolist()), frozenset(perm[:b].tolist()), perm


def _valuer(c):
    return c.value if hasattr(c, "value") else c


def check_monotone(c, n: int, rng: np.random.Generator, trials: int = 100) -> bool:
    """value(A) <= value(B) + EPS on random chains A ⊆ B."""
    f = _valuer(c)
    for _ in range(trials):
        A, B, _ = _random_chain(n, rng)
        if f(A) > f(B) + EPS:
            return False
    return True


def check_submodular(c, n: int, rng: np.random.Generator, trials: int = 100) -> bool:
    """Δ_e(A) >= Δ_e(B) - EPS on random A ⊆ B, e ∉ B."""
    if n < 1:
        return True
    f = _valuer(c)
    for _ in range(trials):
        perm = rng.permutation(n)
        e = int(perm[-1])
        b = int(rng.integers(0, n))
        a = int(rng.integers(0, b + 1))
        A = frozenset(perm[:a].tolist())
        B = frozenset(perm[:b].tolist())
        da = f(A | {e}) - f(A)
        db = f(B | {e}) - f(B)
        if da < db - EPS:
            return False
    return True
