import pytest
from hypothesis import given, settings, strategies as st

from dutycycle import (
    OracleBudgetError,
    StateGraph,
    brute_force_matching,
    closed_form_optimum,
    offline_duty_cycle,
    schedule_from_matching,
)


def graph(set_a, set_b, eta=0.75, period=None):
    slots = list(set_a) + list(set_b)
    period = period or (max(slots) if slots else 1)
    return StateGraph(set_a=tuple(set_a), set_b=tuple(set_b), eta=eta, period_len=period)


def test_worked_example():
    result = brute_force_matching(graph([1, 4, 6, 8], [1, 3, 6, 9]))
    assert result.best_weight == 3.5
    assert result.best_sync_count == 2
    assert result.best_async_count == 2


def test_disjoint_singletons():
    result = brute_force_matching(graph([1], [2], eta=0.6))
    assert result.best_weight == 0.6
    assert result.best_async_count == 1


def test_empty_sets():
    result = brute_force_matching(graph([], [], period=3))
    assert result.best_weight == 0.0
    assert result.witness.edges == ()


def test_budget_refusal():
    big = list(range(1, 14))
    with pytest.raises(OracleBudgetError):
        brute_force_matching(graph(big, [1], period=13))
    with pytest.raises(OracleBudgetError):
        brute_force_matching(graph([1], big, period=13))


def test_exotic_eta_is_rejected():
    with pytest.raises(ValueError, match="ratio"):
        brute_force_matching(graph([1], [2], eta=0.123456789123))


def test_sync_preferred_on_weight_ties():
    # at eta = 1 the sync edge (2,2) and the async edge (2,1) tie on weight;
    # the sync-count tie-break must pick the synchronous one
    result = brute_force_matching(graph([2], [1, 2], eta=1.0))
    assert result.best_weight == 1.0
    assert result.best_sync_count == 1
    assert result.best_async_count == 0


def test_closed_form_examples():
    assert closed_form_optimum(2, 2, 2, 0.75) == 3.5
    assert closed_form_optimum(9, 0, 0, 0.4) == 9.0
    assert closed_form_optimum(0, 3, 1, 0.5) == 0.5
    with pytest.raises(ValueError):
        closed_form_optimum(-1, 0, 0, 0.5)


@st.composite
def small_instances(draw):
    period = draw(st.integers(min_value=1, max_value=10))
    set_a = draw(st.sets(st.integers(1, period), max_size=8))
    set_b = draw(st.sets(st.integers(1, period), max_size=8))
    eta = draw(st.sampled_from([0.25, 0.5, 0.75, 1.0]))
    return sorted(set_a), sorted(set_b), eta, period


@settings(max_examples=200, deadline=None)
@given(inst=small_instances())
def test_oracle_dominates_offline_and_closed_form_bounds_it(inst):
    set_a, set_b, eta, period = inst
    g = graph(set_a, set_b, eta=eta, period=period)
    off = offline_duty_cycle(g)
    ora = brute_force_matching(g)
    n_sync = len(set(set_a) & set(set_b))
    bound = closed_form_optimum(
        n_sync, len(set_a) - n_sync, len(set_b) - n_sync, eta
    )
    assert ora.best_weight >= off.cat_total - 1e-9
    assert bound >= ora.best_weight - 1e-9


@settings(max_examples=200, deadline=None)
@given(inst=small_instances())
def test_witness_is_a_valid_optimal_matching(inst):
    set_a, set_b, eta, period = inst
    g = graph(set_a, set_b, eta=eta, period=period)
    ora = brute_force_matching(g)
    # Matching construction has already enforced exclusivity; check weight
    # consistency and membership of every endpoint
    assert ora.witness.total_weight(eta) == ora.best_weight
    assert ora.witness.sync_count == ora.best_sync_count
    assert ora.witness.async_count == ora.best_async_count
    for e in ora.witness.edges:
        assert e.u_slot in set_a and e.v_slot in set_b


@settings(max_examples=150, deadline=None)
@given(inst=small_instances())
def test_witness_is_schedulable(inst):
    # the sync-count tie-break keeps the witness free of active-slot clashes
    set_a, set_b, eta, period = inst
    ora = brute_force_matching(graph(set_a, set_b, eta=eta, period=period))
    schedule_from_matching(ora.witness, period, eta)
