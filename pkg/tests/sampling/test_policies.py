"""Tests for the sampling policies."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aquatwin.constants import PolicyKind
from aquatwin.exceptions import BudgetExceedsNetworkError
from aquatwin.sampling.policies import (
    SamplingPolicy,
    budget_from_fraction,
    precompute_static_set,
    select_nodes,
    top_budget,
)

scores = arrays(
    float,
    st.integers(min_value=1, max_value=30),
    elements=st.integers(min_value=0, max_value=10**6).map(float),
)


@pytest.mark.parametrize("fraction,expected", [(0.2, 6), (0.4, 12), (0.6, 19), (0.8, 25), (1.0, 31)])
def test_budget_from_fraction_hanoi(fraction, expected):
    """Test budgets for the benchmark's 31 junctions."""
    assert budget_from_fraction(fraction, 31) == expected


def test_budget_from_fraction_minimum_one():
    """Test that tiny fractions still measure one node."""
    assert budget_from_fraction(0.01, 10) == 1
    assert budget_from_fraction(0.25, 10) == 3
    with pytest.raises(ValueError):
        budget_from_fraction(0.0, 10)


def test_adaptive_picks_largest_scores():
    """Test that the adaptive rule measures the most uncertain nodes."""
    chosen = select_nodes(SamplingPolicy.adaptive(), np.array([0.1, 5.0, 2.0, 7.0]), 2, 0)
    assert chosen.tolist() == [1, 3]


def test_adaptive_ties_go_to_lower_index():
    """Test deterministic tie-breaking."""
    chosen = select_nodes(SamplingPolicy.adaptive(), np.ones(5), 2, 0)
    assert chosen.tolist() == [0, 1]


def test_adaptive_rejects_nan():
    """Test that NaN scores are rejected."""
    with pytest.raises(ValueError):
        select_nodes(SamplingPolicy.adaptive(), np.array([1.0, np.nan]), 1, 0)


@given(scores, st.data())
def test_adaptive_is_optimal(values, data):
    """Test that no unselected node outscores a selected one."""
    budget = data.draw(st.integers(min_value=0, max_value=values.shape[0]))
    chosen = select_nodes(SamplingPolicy.adaptive(), values, budget, 0)
    assert chosen.shape == (budget,)
    assert len(set(chosen.tolist())) == budget
    rest = np.setdiff1d(np.arange(values.shape[0]), chosen)
    if budget and rest.size:
        assert values[chosen].min() >= values[rest].max()


@given(scores, st.sampled_from([0.5, 2.0, 3.0, 10.0]))
def test_adaptive_is_scale_invariant(values, factor):
    """Test that rescaling every score keeps the selection."""
    budget = max(1, values.shape[0] // 2)
    a = select_nodes(SamplingPolicy.adaptive(), values, budget, 0)
    b = select_nodes(SamplingPolicy.adaptive(), values * factor, budget, 0)
    np.testing.assert_array_equal(np.sort(values[a]), np.sort(values[b]))


def test_uniform_is_seeded_and_distinct():
    """Test that the uniform rule draws B distinct nodes from its stream."""
    policy = SamplingPolicy.uniform(seed=4)
    rng_a, rng_b = policy.rng(), policy.rng()
    for t in range(5):
        a = select_nodes(policy, np.zeros(10), 4, t, rng_a)
        b = select_nodes(policy, np.zeros(10), 4, t, rng_b)
        np.testing.assert_array_equal(a, b)
        assert len(set(a.tolist())) == 4
        assert np.all(np.diff(a) > 0)


def test_round_robin_cycles():
    """Test consecutive blocks wrapping around the index order."""
    policy = SamplingPolicy.round_robin()
    picks = [select_nodes(policy, np.zeros(5), 2, t).tolist() for t in range(4)]
    assert picks == [[0, 1], [2, 3], [0, 4], [1, 2]]


def test_round_robin_covers_every_node():
    """Test that every node is measured within ceil(N / B) steps."""
    policy = SamplingPolicy.round_robin()
    seen = set()
    for t in range(4):
        seen.update(select_nodes(policy, np.zeros(10), 3, t).tolist())
    assert seen == set(range(10))


def test_static_policy():
    """Test the fixed high-variance set."""
    policy = SamplingPolicy.static([3, 1])
    assert select_nodes(policy, np.zeros(5), 2, 7).tolist() == [1, 3]
    with pytest.raises(ValueError):
        select_nodes(policy, np.zeros(5), 3, 0)
    with pytest.raises(ValueError):
        SamplingPolicy(PolicyKind.STATIC_HIGH_VARIANCE)


def test_full_policy_ignores_budget():
    """Test that the full policy measures every node."""
    assert select_nodes(SamplingPolicy.full(), np.zeros(4), 1, 0).tolist() == [0, 1, 2, 3]


def test_budget_exceeding_network():
    """Test that a budget above N is rejected."""
    with pytest.raises(BudgetExceedsNetworkError) as exc_info:
        select_nodes(SamplingPolicy.adaptive(), np.zeros(3), 4, 0)
    assert exc_info.value.n_nodes == 3


def test_zero_budget_selects_nothing():
    """Test that budget 0 is a pure forecast rollout."""
    assert select_nodes(SamplingPolicy.adaptive(), np.ones(3), 0, 0).size == 0
    assert select_nodes(SamplingPolicy.round_robin(), np.ones(3), 0, 2).size == 0


def test_top_budget_sorted():
    """Test that top_budget returns sorted indices."""
    assert top_budget(np.array([3.0, 9.0, 1.0, 9.0]), 3).tolist() == [0, 1, 3]


def test_precompute_static_set():
    """Test that the static set holds the highest-variance nodes."""
    rng = np.random.default_rng(0)
    spread = np.array([0.1, 3.0, 0.5, 2.0])
    train = [rng.standard_normal((100, 4)) * spread for _ in range(2)]
    assert precompute_static_set(train, 2).tolist() == [1, 3]
    with pytest.raises(BudgetExceedsNetworkError):
        precompute_static_set(train, 5)
