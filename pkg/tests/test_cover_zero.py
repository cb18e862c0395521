import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minrf.cover_zero import (
    Alg0Request,
    NumericalStall,
    check_feasible,
    get_alg0,
    greedy,
    is_feasible,
    rand_gr,
    sep,
    thres_gr,
)
from minrf.objectives import random_instance
from minrf.oracle import (
    EPS,
    FunctionOracle,
    InputError,
    NormalizedOracle,
    QueryLedger,
    SeededRng,
)
from minrf.verify import brute_force_opt

A, B, C, D = range(4)


def req(inst, **kw):
    return Alg0Request(inst.n, inst.constraints, **kw)


def assert_valid(res, inst, alpha=0.0, initial=frozenset()):
    assert res.feasible
    assert res.solution >= initial
    for c in inst.constraints:
        assert c.value(res.solution) >= 1 - alpha - EPS


def test_check_feasible_examples(SC1):
    L = QueryLedger()
    assert is_feasible(range(4), SC1.constraints, 0.0, L)
    assert L.total == 4
    assert not is_feasible({A}, SC1.constraints, 0.0, L)
    assert check_feasible({A}, SC1.constraints, 0.0, L) == 2
    assert is_feasible(set(), SC1.constraints, 1.0, L)


def test_request_validation(SC1):
    with pytest.raises(InputError):
        req(SC1, alpha=1.0)
    with pytest.raises(InputError):
        req(SC1, initial={9})
    with pytest.raises(InputError):
        thres_gr(req(SC1), gamma=1.0)


@pytest.mark.parametrize("alg", ["randgr", "greedy", "thresgr", "sep"])
def test_sc1_all_algorithms(SC1, alg):
    res = get_alg0(alg)(req(SC1, rng=SeededRng(42)))
    assert_valid(res, SC1)
    assert 2 <= res.size <= 4


def test_greedy_sc1_picks_a_then_b(SC1):
    res = greedy(req(SC1))
    assert res.order == [A, B]
    assert res.trace[0].gain == 2.0


def test_randgr_sc1_seed42(SC1):
    res = rand_gr(req(SC1, rng=SeededRng(42)))
    assert res.size == 2 and res.solution in ({A, B}, {C, D})


def test_greedy_modular_ties_to_smallest_ids():
    c = NormalizedOracle(FunctionOracle(lambda S: len(S) / 3, 4), 1.0)
    res = greedy(Alg0Request(4, [c]))
    assert res.solution == {0, 1, 2}


@pytest.mark.parametrize("alg", ["randgr", "greedy", "thresgr"])
def test_feasible_start_is_returned_unchanged(SC1, alg):
    full = frozenset(range(4))
    res = get_alg0(alg)(req(SC1, initial=full))
    assert res.solution == full and res.rounds == 0
    res = get_alg0(alg)(req(SC1, initial={A, B}))
    assert res.solution == {A, B} and res.rounds == 0


def test_infeasible_reports_failure(SC1):
    for alg in ["randgr", "greedy", "thresgr", "sep"]:
        res = get_alg0(alg)(req(SC1, allowed={A}))
        assert not res.feasible and res.solution == frozenset()
        assert res.failure.constraint == 2


def test_thresgr_small_gamma_matches_greedy(SC1):
    assert thres_gr(req(SC1), gamma=0.01).solution == greedy(req(SC1)).solution


def test_sep_sc1(SC1):
    res = sep(req(SC1))
    assert_valid(res, SC1)
    # item 1 -> A, item 2 -> A already satisfies, item 3 -> B, item 4 -> B
    assert res.solution == {A, B}


def test_sep_rejects_initial(SC1):
    with pytest.raises(InputError):
        sep(req(SC1, initial={A}))


def test_sep_vacuous_constraints():
    c = NormalizedOracle(FunctionOracle(lambda S: 1.0 + len(S), 3), 1.0)
    assert sep(Alg0Request(3, [c, c])).solution == frozenset()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), rseed=st.integers(0, 1000))
def test_randgr_single_constraint_is_greedy(seed, rseed):
    inst = random_instance(10, 1, 0.4, seed, T=1.0, weighted=True)
    assert rand_gr(req(inst, rng=SeededRng(rseed))).order == greedy(req(inst)).order
    assert sep(req(inst)).order == greedy(req(inst)).order


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.sampled_from([0.0, 0.1, 0.3]),
       alg=st.sampled_from(["randgr", "greedy", "thresgr", "sep"]),
       weighted=st.booleans())
def test_feasible_results_satisfy_all(seed, alpha, alg, weighted):
    inst = random_instance(10, 5, 0.4, seed, T=1.5 if weighted else 2.0, weighted=weighted)
    rng = np.random.default_rng(seed)
    initial = frozenset() if alg == "sep" else frozenset(
        rng.choice(10, size=int(rng.integers(0, 3)), replace=False).tolist())
    res = get_alg0(alg)(req(inst, alpha=alpha, initial=initial, rng=SeededRng(seed)))
    assert_valid(res, inst, alpha, initial)


def _gains(inst, S, working):
    """Exhaustive gain of every candidate over the working constraints (no ledger)."""
    out = {}
    for e in range(inst.n):
        if e in S:
            continue
        out[e] = sum(inst.constraints[j].value(S | {e}) - inst.constraints[j].value(S)
                     for j in working)
    return out


def _replay(inst, res, alpha, initial=frozenset()):
    """Yield (S before step, working set, step) for a run that drops satisfied constraints."""
    S = frozenset(initial)
    for step in res.trace:
        remaining = [j for j, c in enumerate(inst.constraints) if c.value(S) < 1 - alpha - EPS]
        assert step.remaining == len(remaining)
        yield S, remaining, step
        S = S | {step.element}


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.sampled_from([0.0, 0.2]))
def test_greedy_per_round_optimality(seed, alpha):
    weighted = seed % 2 == 0
    inst = random_instance(9, 4, 0.4, seed, T=1.0 if weighted else 2.0, weighted=weighted)
    res = greedy(req(inst, alpha=alpha))
    for S, working, step in _replay(inst, res, alpha):
        gains = _gains(inst, S, working)
        best = max(gains.values())
        assert step.gain == pytest.approx(best, abs=1e-12)
        assert step.element == min(e for e, g in gains.items() if g >= best - 1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), gamma=st.sampled_from([0.1, 0.2, 0.5]))
def test_thresgr_delta_guarantee(seed, gamma):
    inst = random_instance(9, 4, 0.5, seed, T=1.0, weighted=True)
    res = thres_gr(req(inst), gamma=gamma)
    for S, working, step in _replay(inst, res, 0.0):
        best = max(_gains(inst, S, working).values())
        assert step.gain >= (1 - gamma) * best - 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), alg=st.sampled_from(["randgr", "greedy", "thresgr"]))
def test_telescoping_gain_bound(seed, alg):
    inst = random_instance(10, 6, 0.3, seed, T=2.0)
    res = get_alg0(alg)(req(inst, rng=SeededRng(seed)))
    # total increase of all m constraints along the run
    S, total = frozenset(), 0.0
    for e in res.order:
        total += sum(c.value(S | {e}) - c.value(S) for c in inst.constraints)
        S = S | {e}
    assert total <= inst.m + 1e-9
    assert sum(s.gain for s in res.trace) <= inst.m + 1e-9


def test_set_cover_ratio():
    for seed in range(50):
        inst = random_instance(4 + seed % 8, 2 + seed % 4, 0.4, seed)
        opt = brute_force_opt(range(inst.n), inst.constraints, 0)
        res = greedy(req(inst))
        assert res.size >= opt.opt_size
        assert res.size <= (math.log(inst.m) + 1) * opt.opt_size + 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_greedy_query_ceiling(seed):
    inst = random_instance(20, 6, 0.3, seed, T=2.0)
    L = QueryLedger()
    res = greedy(req(inst, ledger=L))
    # n * |S| candidate queries, one pre-check and one starting-value query
    for j in range(inst.m):
        assert L.per_constraint[j] <= inst.n * res.size + 2
    assert res.queries == L.per_constraint


def test_randgr_cheaper_than_greedy_on_average():
    rq, gq = [], []
    for seed in range(10):
        inst = random_instance(60, 8, 0.15, seed)
        rq.append(rand_gr(req(inst, rng=SeededRng(seed))).total_queries)
        gq.append(greedy(req(inst)).total_queries)
    assert np.mean(rq) < np.mean(gq)


def test_keep_satisfied_switch(SC1):
    res = greedy(req(SC1), keep_satisfied=True)
    assert_valid(res, SC1)
    res = thres_gr(req(SC1), keep_satisfied=True)
    assert_valid(res, SC1)


def test_stall_raised_on_pathological_oracle():
    # passes the pre-check on the full set but no singleton addition ever helps
    c = NormalizedOracle(FunctionOracle(lambda S: 1.0 if len(S) == 3 else 0.0, 3), 1.0)
    with pytest.raises(NumericalStall):
        greedy(Alg0Request(3, [c]))
