"""Concrete constraint families.

* group influence under the linear threshold model, estimated on frozen
  live-edge samples (a coverage function, hence exactly monotone submodular)
* per-user movie utility (modular, cosine similarities of keyword vectors)
* set cover / weighted coverage, random test instances
* the hidden-removal adversarial oracle and the Alg1 tight instance
"""
from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .oracle import (
    EPS,
    InputError,
    ModularFunction,
    NormalizedOracle,
    QueryLedger,
    SetFunction,
    as_set,
    evaluate,
)

log = logging.getLogger(__name__)


@dataclass
class Instance:
    """Ground set size, constraints and labels; r and alpha travel with the request."""
    n: int
    constraints: list
    labels: Optional[list] = None
    name: str = "instance"
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.constraints)


# ---------------------------------------------------------------------------
# Linear threshold influence
# ---------------------------------------------------------------------------


@dataclass
class Graph:
    """Directed weighted graph; ``w[k]`` is the weight of edge ``src[k] -> dst[k]``."""
    n: int
    src: np.ndarray
    dst: np.ndarray
    w: np.ndarray
    labels: Optional[list] = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        self.w = np.asarray(self.w, dtype=float)
        if not (len(self.src) == len(self.dst) == len(self.w)):
            raise InputError("edge arrays differ in length")
        if len(self.src) and (self.src.min() < 0 or self.dst.min() < 0
                              or max(self.src.max(), self.dst.max()) >= self.n):
            raise InputError("edge endpoint outside 0..n-1")
        if np.any(self.w < 0) or np.any(self.w > 1):
            raise InputError("edge weights must lie in [0, 1]")

    @property
    def in_weight(self) -> np.ndarray:
        return np.bincount(self.dst, weights=self.w, minlength=self.n)

    def check_lt(self) -> None:
        tot = self.in_weight
        bad = np.flatnonzero(tot > 1.0 + EPS)
        if len(bad):
            raise InputError(f"in-weights exceed 1 at nodes {bad[:5].tolist()}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, weights="inverse-degree", **kw) -> "Graph":
        """Directed edges (u, v[, w]); ``weights='inverse-degree'`` sets w = 1 / indeg(v)."""
        edges = list(edges)
        src = np.array([e[0] for e in edges], dtype=np.int64)
        dst = np.array([e[1] for e in edges], dtype=np.int64)
        if weights == "inverse-degree":
            deg = np.bincount(dst, minlength=n) if len(dst) else np.zeros(n)
            w = 1.0 / deg[dst] if len(dst) else np.zeros(0)
        elif weights == "given":
            w = np.array([e[2] for e in edges], dtype=float)
        else:
            w = np.full(len(edges), float(weights))
        return cls(n, src, dst, w, **kw)


def random_graph(n: int, p: float, seed: int) -> Graph:
    """Undirected G(n, p) doubled into directed edges with 1/indeg weights."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    u, v = iu[keep], ju[keep]
    edges = list(zip(np.concatenate([u, v]).tolist(), np.concatenate([v, u]).tolist()))
    return Graph.from_edges(n, edges)


def sample_live_edge_graph(g: Graph, rng: np.random.Generator) -> np.ndarray:
    """One live-edge sample: ``parent[v]`` is the chosen in-neighbour of v or -1.

    Node v keeps in-edge (u, v) with probability w(u, v), at most one edge,
    and none with the leftover probability.
    """
    g.check_lt()
    parent = np.full(g.n, -1, dtype=np.int64)
    draws = rng.random(g.n)
    if len(g.src) == 0:
        return parent
    order = np.argsort(g.dst, kind="stable")
    dst, src, w = g.dst[order], g.src[order], g.w[order]
    cum = np.cumsum(w)
    starts = np.searchsorted(dst, np.arange(g.n), side="left")
    ends = np.searchsorted(dst, np.arange(g.n), side="right")
    base = np.where(starts > 0, cum[np.maximum(starts - 1, 0)], 0.0)
    target = base + draws
    pick = np.searchsorted(cum, target, side="right")
    hit = pick < ends
    parent[hit] = src[pick[hit]]
    return parent


class LiveEdgeSampleSet:
    """K frozen live-edge samples; reachability is computed on their disjoint union."""

    def __init__(self, n: int, parents: Sequence[np.ndarray], seed: Optional[int] = None,
                 cache_size: int = 256):
        self.n = n
        self.parents = np.asarray(parents, dtype=np.int64).reshape(len(parents), n)
        self.K = len(self.parents)
        self.seed = seed
        # children CSR over K*n stacked nodes
        child = np.arange(self.K * n)
        par = self.parents.ravel()
        live = par >= 0
        offs = (np.arange(self.K * n) // n) * n
        heads = (par + offs)[live]
        tails = child[live]
        order = np.argsort(heads, kind="stable")
        self._tails = tails[order]
        self._indptr = np.searchsorted(heads[order], np.arange(self.K * n + 1), side="left")
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size

    @classmethod
    def sample(cls, g: Graph, K: int, seed: int) -> "LiveEdgeSampleSet":
        if K < 1:
            raise InputError("need at least one sample")
        rng = np.random.default_rng(seed)
        return cls(g.n, [sample_live_edge_graph(g, rng) for _ in range(K)], seed=seed)

    def reach(self, S: frozenset) -> np.ndarray:
        """Boolean K x n matrix of nodes reached from S in each sample."""
        S = as_set(S)
        hit = self._cache.get(S)
        if hit is not None:
            self._cache.move_to_end(S)
            return hit
        visited = np.zeros(self.K * self.n, dtype=bool)
        if S:
            seeds = np.array(sorted(S), dtype=np.int64)
            frontier = (seeds[None, :] + (np.arange(self.K) * self.n)[:, None]).ravel()
            visited[frontier] = True
            while frontier.size:
                lo, hi = self._indptr[frontier], self._indptr[frontier + 1]
                cnt = hi - lo
                total = int(cnt.sum())
                if total == 0:
                    break
                idx = np.repeat(lo - np.concatenate(([0], np.cumsum(cnt)[:-1])), cnt) + np.arange(total)
                nxt = self._tails[idx]
                nxt = np.unique(nxt[~visited[nxt]])
                visited[nxt] = True
                frontier = nxt
        out = visited.reshape(self.K, self.n)
        out.flags.writeable = False
        self._cache[S] = out
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return out


def influence_value(samples: LiveEdgeSampleSet, group, S) -> float:
    """Mean number of group members reached from S over the samples."""
    S = as_set(S)
    if not S:
        return 0.0
    members = np.array(sorted(as_set(group)), dtype=np.int64)
    if members.size == 0:
        return 0.0
    return float(samples.reach(S)[:, members].sum()) / samples.K


class InfluenceFunction(SetFunction):
    def __init__(self, samples: LiveEdgeSampleSet, group, name="influence"):
        self.samples = samples
        self.group = frozenset(group)
        self.n = samples.n
        self.name = name

    def __call__(self, S):
        return influence_value(self.samples, self.group, S)


@dataclass
class GroupConstraintSpec:
    groups: list
    T: float

    def __post_init__(self):
        if not 0.0 <= self.T <= 1.0:
            raise InputError("T must be a fraction in [0, 1]")
        for i, grp in enumerate(self.groups):
            if len(grp) == 0:
                raise InputError(f"group {i} is empty")


def assign_groups(n: int, m: int, seed: int) -> list:
    """Uniform independent assignment of every node to one of m groups (empty groups dropped)."""
    labels = np.random.default_rng(seed).integers(0, m, size=n)
    groups = [frozenset(np.flatnonzero(labels == j).tolist()) for j in range(m)]
    return [grp for grp in groups if grp]


def build_lt_influence(g: Graph, spec: GroupConstraintSpec, K: int = 100, seed: int = 0,
                       samples: Optional[LiveEdgeSampleSet] = None) -> list:
    """One constraint per group, all sharing a single frozen sample set."""
    if samples is None:
        samples = LiveEdgeSampleSet.sample(g, K, seed)
    out = []
    for i, grp in enumerate(spec.groups):
        f = InfluenceFunction(samples, grp, name=f"group{i}")
        out.append(NormalizedOracle(f, spec.T * len(grp), key=i, name=f"group{i}"))
    return out


# ---------------------------------------------------------------------------
# Movie utility
# ---------------------------------------------------------------------------


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), 0.0, 1.0))


def _unit_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X, dtype=float), where=norms > 0)


@dataclass
class MovieData:
    """Candidate movies (rows of ``vectors``) and each user's favourites as row indices."""
    movie_ids: list
    vectors: np.ndarray
    favorites: dict
    T: float = 1.0


def movie_weights(vectors: np.ndarray, favorites: Sequence[int]) -> np.ndarray:
    """w_j = sum_{i in L} s(i, j) for j outside L, 0 inside L."""
    U = _unit_rows(np.asarray(vectors, dtype=float))
    fav = np.array(sorted(set(favorites)), dtype=np.int64)
    w = np.clip(U[fav] @ U.T, 0.0, 1.0).sum(axis=0)
    w[fav] = 0.0
    return w


def build_movie_utility(data: MovieData) -> list:
    """One constraint per user: utility / max attainable utility, thresholded at T."""
    out = []
    for user in sorted(data.favorites):
        fav = data.favorites[user]
        if not len(fav):
            log.warning("user %s has no favourites; dropped", user)
            continue
        w = movie_weights(data.vectors, fav)
        top = float(w.sum())
        if top <= 0.0:
            log.warning("user %s has zero attainable utility; dropped", user)
            continue
        f = ModularFunction(w / top, name=f"user{user}")
        out.append(NormalizedOracle(f, data.T, key=len(out), name=f"user{user}"))
    return out


# ---------------------------------------------------------------------------
# Set cover
# ---------------------------------------------------------------------------


class CoverCount(SetFunction):
    """Number of chosen sets containing one universe item."""

    def __init__(self, containing: Iterable[int], n: int, name="cover"):
        self.containing = frozenset(containing)
        self.n = n
        self.name = name

    def __call__(self, S):
        return float(len(self.containing.intersection(S)))


def build_set_cover(universe, family: Sequence[Iterable], T: float = 1.0) -> list:
    """One constraint per universe item: (#chosen sets containing it) / T, capped at 1.

    ``universe`` is an int p (items 0..p-1) or a sequence of item labels;
    the ground set is the family, set j having id j.
    """
    items = list(range(universe)) if isinstance(universe, int) else list(universe)
    fam = [frozenset(s) for s in family]
    n = max(len(fam), 1)
    out = []
    for k, item in enumerate(items):
        f = CoverCount([j for j, s in enumerate(fam) if item in s], n, name=f"item{item}")
        out.append(NormalizedOracle(f, T, key=k, name=f"item{item}"))
    return out


def set_cover_instance(universe, family, T: float = 1.0, labels=None, name="set-cover") -> Instance:
    return Instance(max(len(family), 1), build_set_cover(universe, family, T),
                    labels=labels, name=name,
                    meta={"universe": list(range(universe)) if isinstance(universe, int) else list(universe),
                          "family": [sorted(s) for s in family], "T": T})


SC1_UNIVERSE = [1, 2, 3, 4]
SC1_FAMILY = [{1, 2}, {3, 4}, {1, 3}, {2, 4}]
SC1_LABELS = ["A", "B", "C", "D"]


def sc1() -> Instance:
    """Four sets A={1,2}, B={3,4}, C={1,3}, D={2,4}; every item lies in exactly two."""
    return set_cover_instance(SC1_UNIVERSE, SC1_FAMILY, labels=SC1_LABELS, name="SC1")


class WeightedCover(SetFunction):
    """Sum of membership weights of one item over the chosen sets."""

    def __init__(self, weights, name="wcover"):
        self.weights = np.asarray(weights, dtype=float)
        self.n = len(self.weights)
        self.name = name

    def __call__(self, S):
        return float(sum(self.weights[j] for j in sorted(S)))


def random_instance(n: int, m: int, density: float, seed: int, T: float = 1.0,
                    weighted: bool = False, max_attempts: int = 100) -> Instance:
    """Random set-cover style instance: n candidate sets, m items to cover.

    Memberships are independent with probability ``density``; with
    ``weighted`` each membership carries a weight in (0, 1]. Draws repeat
    until every item can reach its threshold using all sets.
    """
    if n < 1 or m < 1:
        raise InputError("need n, m >= 1")
    if not 0.0 < density <= 1.0:
        raise InputError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        member = rng.random((m, n)) < density
        if weighted:
            W = member * (1.0 - rng.random((m, n)))
            ok = np.all(W.sum(axis=1) >= T - EPS)
            if ok:
                cons = [NormalizedOracle(WeightedCover(W[i], name=f"item{i}"), T, key=i)
                        for i in range(m)]
                return Instance(n, cons, name=f"random-w(n={n},m={m},seed={seed})",
                                meta={"weights": W.tolist(), "T": T, "attempts": attempt + 1})
        else:
            if np.all(member.sum(axis=1) >= T - EPS):
                family = [set(np.flatnonzero(member[:, j]).tolist()) for j in range(n)]
                inst = set_cover_instance(m, family, T, name=f"random(n={n},m={m},seed={seed})")
                inst.meta["attempts"] = attempt + 1
                return inst
    raise InputError(f"no feasible instance after {max_attempts} attempts")


# ---------------------------------------------------------------------------
# Hidden-removal adversary
# ---------------------------------------------------------------------------


class AdversarialFunction(SetFunction):
    """3|Z| below size n - r; a unit dent at V \\ R; slope 1 above."""

    def __init__(self, n: int, r: int, hidden: frozenset):
        self.n = n
        self.r = r
        self._hidden_complement = frozenset(range(n)) - hidden
        self.probes = 0
        self.name = "adversarial"

    def __call__(self, S):
        self.probes += 1
        z = len(S)
        cut = self.n - self.r
        if z < cut:
            return 3.0 * z
        if S == self._hidden_complement:
            return 3.0 * z - 1.0
        return 3.0 * cut + (z - cut)


def adversarial_oracle(n: int, r: int, seed: int) -> NormalizedOracle:
    """Constraint with threshold 3(n - r) that only V \\ R violates among (n-r)-subsets."""
    if not 1 <= r < n:
        raise InputError("need 1 <= r < n")
    rng = np.random.default_rng(seed)
    hidden = frozenset(rng.choice(n, size=r, replace=False).tolist())
    return NormalizedOracle(AdversarialFunction(n, r, hidden), 3.0 * (n - r), key=0,
                            name="adversarial")


def probe_search(c: NormalizedOracle, r: int, q: int, rng: np.random.Generator,
                 ledger: Optional[QueryLedger] = None) -> bool:
    """Query q uniformly random size-r removals; True if one of them breaks the constraint."""
    ledger = ledger or QueryLedger()
    V = frozenset(range(c.n))
    for _ in range(q):
        X = frozenset(rng.choice(c.n, size=r, replace=False).tolist())
        if evaluate(c, V - X, ledger) < 1.0 - EPS:
            return True
    return False


# ---------------------------------------------------------------------------
# Tight instance for Alg1
# ---------------------------------------------------------------------------


def _halving_blocks(items: list) -> list:
    """Consecutive blocks of sizes |items|/2, /4, ..., 1 plus a final singleton tail."""
    blocks, start, size = [], 0, len(items) // 2
    while size >= 1:
        blocks.append(items[start:start + size])
        start += size
        size //= 2
    if start < len(items):
        blocks.append(items[start:])
    return blocks


def tight_instance(k: int) -> Instance:
    """Robust set cover over n = 2^k items where Alg1 blows up to O(|S1| log n).

    Ids: the chain S_1, S_2, ... first, then each chain set's refinements
    S_{j,1}, S_{j,2}, ..., then S_a, S_a', S_b, S_b'. With smallest-id tie
    breaking greedy prefers the chain and the refinements over the four
    optimal sets.
    """
    if k < 2:
        raise InputError("k must be >= 2")
    n = 2 ** k
    items = list(range(1, n + 1))
    chain = _halving_blocks(items)
    family, labels = [], []
    for j, blk in enumerate(chain, start=1):
        family.append(set(blk))
        labels.append(f"S{j}")
    for j, blk in enumerate(chain, start=1):
        if len(blk) < 2:
            continue
        for i, sub in enumerate(_halving_blocks(blk), start=1):
            family.append(set(sub))
            labels.append(f"S{j},{i}")
    odd = set(items[0::2])
    even = set(items[1::2])
    for lab, s in (("Sa", odd), ("Sa'", odd), ("Sb", even), ("Sb'", even)):
        family.append(set(s))
        labels.append(lab)
    inst = set_cover_instance(items, family, labels=labels, name=f"tight(k={k})")
    inst.meta["optimum"] = sorted(range(len(family) - 4, len(family)))
    inst.meta["chain"] = list(range(len(chain)))
    return inst
