import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minrf.cover_zero import is_feasible
from minrf.objectives import (
    GroupConstraintSpec,
    Graph,
    LiveEdgeSampleSet,
    MovieData,
    adversarial_oracle,
    assign_groups,
    build_lt_influence,
    build_movie_utility,
    build_set_cover,
    cosine_similarity,
    influence_value,
    movie_weights,
    probe_search,
    random_graph,
    random_instance,
    sample_live_edge_graph,
    tight_instance,
)
from minrf.oracle import InputError, QueryLedger, check_monotone, check_submodular
from minrf.verify import brute_force_opt, is_robust


def reach_dfs(parent, S):
    children = {}
    for v, p in enumerate(parent):
        if p >= 0:
            children.setdefault(int(p), []).append(v)
    seen, stack = set(S), list(S)
    while stack:
        u = stack.pop()
        for v in children.get(u, []):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


# -- live-edge sampling ------------------------------------------------------

def test_single_edge_always_live():
    g = Graph.from_edges(2, [(0, 1)], weights=1.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert sample_live_edge_graph(g, rng).tolist() == [-1, 0]


def test_two_half_edges_frequency():
    g = Graph.from_edges(3, [(0, 2), (1, 2)], weights=0.5)
    rng = np.random.default_rng(1)
    picks = np.array([sample_live_edge_graph(g, rng)[2] for _ in range(10_000)])
    assert set(picks.tolist()) <= {0, 1}  # exactly one parent, never both or none
    assert abs(np.mean(picks == 0) - 0.5) <= 0.02
    assert abs(np.mean(picks == 1) - 0.5) <= 0.02


def test_partial_weight_leaves_node_unselected():
    g = Graph.from_edges(2, [(0, 1)], weights=0.3)
    rng = np.random.default_rng(2)
    picks = np.array([sample_live_edge_graph(g, rng)[1] for _ in range(10_000)])
    assert abs(np.mean(picks == 0) - 0.3) <= 0.02


def test_isolated_node_never_selects():
    g = Graph.from_edges(3, [(0, 1)], weights=1.0)
    rng = np.random.default_rng(0)
    assert all(sample_live_edge_graph(g, rng)[2] == -1 for _ in range(100))


def test_invalid_lt_weights():
    g = Graph.from_edges(3, [(0, 2), (1, 2)], weights=0.8)
    with pytest.raises(InputError):
        sample_live_edge_graph(g, np.random.default_rng(0))


# -- influence ----------------------------------------------------------------

def test_influence_examples():
    path = LiveEdgeSampleSet.sample(Graph.from_edges(2, [(0, 1)], weights=1.0), 7, 0)
    assert influence_value(path, {0, 1}, set()) == 0.0
    assert influence_value(path, {0, 1}, {0}) == 2.0
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)], weights=1.0)
    samples = LiveEdgeSampleSet.sample(star, 5, 3)
    assert influence_value(samples, range(4), {0}) == 4.0
    (c,) = build_lt_influence(star, GroupConstraintSpec([set(range(4))], 1.0), K=5, seed=3)
    assert c.value(frozenset({0})) == 1.0
    two = Graph.from_edges(2, [], weights=1.0)
    (c,) = build_lt_influence(two, GroupConstraintSpec([{1}], 1.0), K=3, seed=0)
    assert c.value(frozenset({0})) == 0.0


def test_zero_threshold_group_is_vacuous():
    g = random_graph(10, 0.3, 0)
    cons = build_lt_influence(g, GroupConstraintSpec([{0, 1}, {2}], 0.0), K=4, seed=0)
    assert all(c.value(frozenset()) == 1.0 for c in cons)


def test_empty_group_rejected():
    with pytest.raises(InputError):
        GroupConstraintSpec([set()], 0.5)


def test_reach_matches_dfs():
    g = random_graph(40, 0.08, 4)
    samples = LiveEdgeSampleSet.sample(g, 20, 9)
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = frozenset(rng.choice(40, size=int(rng.integers(1, 6)), replace=False).tolist())
        R = samples.reach(S)
        for k in range(samples.K):
            assert set(np.flatnonzero(R[k]).tolist()) == reach_dfs(samples.parents[k], S)


def test_influence_reproducible_and_shared():
    g = random_graph(60, 0.05, 1)
    groups = assign_groups(60, 3, 2)
    a = build_lt_influence(g, GroupConstraintSpec(groups, 0.3), K=25, seed=8)
    b = build_lt_influence(g, GroupConstraintSpec(groups, 0.3), K=25, seed=8)
    assert a[0].inner.samples is a[1].inner.samples
    assert np.array_equal(a[0].inner.samples.parents, b[0].inner.samples.parents)
    S = frozenset({1, 5, 9})
    assert [c.value(S) for c in a] == [c.value(S) for c in b]
    rng = np.random.default_rng(0)
    for c in a:
        assert check_monotone(c, 60, rng) and check_submodular(c, 60, rng)


def test_assign_groups_partition():
    groups = assign_groups(100, 4, 0)
    assert sorted(x for g in groups for x in g) == list(range(100))


# -- movie utility ------------------------------------------------------------

def test_cosine_examples():
    assert cosine_similarity([1, 0], [1, 0]) == 1.0
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2))
    assert cosine_similarity([0, 0], [1, 0]) == 0.0


def test_movie_two_candidates():
    # favourite is movie 0; movies 1 and 2 get similarities 0.5 and 0.3
    def unit(theta):
        return [math.cos(theta), math.sin(theta)]
    vecs = np.array([unit(0.0), unit(math.acos(0.5)), unit(math.acos(0.3))])
    w = movie_weights(vecs, [0])
    assert w.tolist() == pytest.approx([0.0, 0.5, 0.3])
    (c,) = build_movie_utility(MovieData([10, 11, 12], vecs, {7: [0]}, T=1.0))
    raw = 0.5 + 0.3
    assert c.inner(frozenset({1, 2})) * raw == pytest.approx(0.8)
    assert c.value(frozenset({1, 2})) == pytest.approx(1.0)
    assert c.value(frozenset({0})) == 0.0


def test_movie_modularity_and_drop(caplog):
    rng = np.random.default_rng(3)
    vecs = rng.random((30, 6)) * (rng.random((30, 6)) < 0.5)
    data = MovieData(list(range(30)), vecs, {0: [0, 1, 2], 1: [5], 2: []}, T=0.5)
    cons = build_movie_utility(data)
    assert len(cons) == 2  # the user without favourites is dropped
    for _ in range(50):
        c = cons[int(rng.integers(2))]
        S = frozenset(rng.choice(30, size=int(rng.integers(0, 8)), replace=False).tolist())
        T = S | frozenset(rng.choice(30, size=3, replace=False).tolist())
        j = int(rng.integers(30))
        if j in T:
            continue
        f = c.inner
        assert f(S | {j}) - f(S) == pytest.approx(f(T | {j}) - f(T))


# -- set cover ----------------------------------------------------------------

def test_set_cover_examples():
    cons = build_set_cover(3, [])
    assert all(c.value(frozenset()) == 0.0 for c in cons)
    cons = build_set_cover(3, [{0, 1, 2}])
    assert all(c.value(frozenset({0})) == 1.0 for c in cons)


def test_random_instance_examples():
    inst = random_instance(6, 4, 1.0, 0)
    assert brute_force_opt(range(6), inst.constraints, 0).opt_size == 1
    a, b = random_instance(10, 6, 0.5, 7), random_instance(10, 6, 0.5, 7)
    assert a.meta["family"] == b.meta["family"]
    assert is_feasible(range(10), a.constraints, 0.0, QueryLedger())
    with pytest.raises(InputError):
        random_instance(3, 5, 0.01, 0, T=3.0)


# -- adversarial oracle -------------------------------------------------------

def test_adversarial_piecewise_values():
    c = adversarial_oracle(6, 2, seed=0)
    f = c.inner
    V = frozenset(range(6))
    fatal = [V - set(X) for X in combinations(range(6), 2) if f(V - set(X)) == 11.0]
    assert len(fatal) == 1
    assert f(frozenset({0, 1, 2})) == 9.0
    assert f(fatal[0]) == 11.0 and c.threshold == 12.0
    assert f(V) == 14.0
    assert c.value(fatal[0]) < 1.0 and c.value(V) == 1.0
    rng = np.random.default_rng(0)
    assert check_monotone(c, 6, rng, trials=300) and check_submodular(c, 6, rng, trials=300)


def test_adversarial_probe_counts():
    c = adversarial_oracle(8, 2, seed=1)
    L = QueryLedger()
    probe_search(c, 2, 5, np.random.default_rng(0), L)
    assert L.total <= 5
    # exhaustive probing always finds R
    hits = [c.value(frozenset(range(8)) - set(X)) < 1 for X in combinations(range(8), 2)]
    assert sum(hits) == 1


# -- tight instance -----------------------------------------------------------

def test_tight_k4_layout():
    inst = tight_instance(4)
    fam = inst.meta["family"]
    assert fam[0] == list(range(1, 9)) and fam[1] == list(range(9, 13))
    assert fam[2] == [13, 14] and fam[3] == [15] and fam[4] == [16]
    assert inst.n == len(fam)
    opt = inst.meta["optimum"]
    assert [inst.labels[j] for j in opt] == ["Sa", "Sa'", "Sb", "Sb'"]


@pytest.mark.parametrize("k", [3, 4, 5])
def test_tight_optimum_and_proper_subsets(k):
    inst = tight_instance(k)
    opt = inst.meta["optimum"]
    assert is_robust(opt, inst.constraints, 1, 0.0)
    for size in range(len(opt)):
        for sub in combinations(opt, size):
            assert not is_robust(sub, inst.constraints, 1, 0.0)
    assert not is_robust(inst.meta["chain"], inst.constraints, 1, 0.0)
