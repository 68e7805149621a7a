import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screenlab import MissingThresholdError, ThresholdProfile, WorkHistory, make_uniform
from screenlab.history import (
    children,
    histories_of_length,
    leaf_probabilities,
    node_count,
    node_index,
    path_probability,
)


def test_enumeration_counts_and_order():
    assert [str(w) for w in histories_of_length(0)] == [""]
    assert [str(w) for w in histories_of_length(2)] == ["00", "01", "10", "11"]
    assert len(list(histories_of_length(3))) == 8
    # the number of decision nodes is 2^0 + ... + 2^(N-1)
    assert node_count(5) == sum(2**t for t in range(5)) == 31


def test_enumeration_beyond_horizon():
    with pytest.raises(ValueError):
        list(histories_of_length(4, N=3))


def test_children_and_strings():
    assert tuple(str(c) for c in children(WorkHistory.empty(), 2)) == ("1", "0")
    assert tuple(str(c) for c in children(WorkHistory.from_bits("10"), 3)) == ("101", "100")
    with pytest.raises(ValueError):
        children(WorkHistory.ones(3), 3)
    assert str(WorkHistory.from_bits([0, 0, 1, 1])) == "0011"


def test_bitwise_equality_and_index():
    assert WorkHistory.from_bits("010") == WorkHistory(3, 0b010)
    assert WorkHistory.from_bits("") != WorkHistory.from_bits("0")
    seen = {node_index(w) for t in range(4) for w in histories_of_length(t)}
    assert seen == set(range(node_count(4)))


def test_path_probability_examples():
    d = make_uniform(0, 1)
    always = ThresholdProfile.constant(3, 1.0)
    assert path_probability(always, d, WorkHistory.ones(3)) == 1.0
    assert path_probability(always, d, WorkHistory.from_bits("110")) == 0.0
    assert abs(path_probability(ThresholdProfile.constant(1, 0.3), d, WorkHistory.ones(1)) - 0.3) < 1e-15
    half = ThresholdProfile.constant(2, 0.5)
    probs = [path_probability(half, d, w) for w in histories_of_length(2)]
    assert probs == [0.25] * 4


def test_missing_threshold_names_node():
    with pytest.raises(MissingThresholdError, match="'1'"):
        ThresholdProfile.from_mapping(2, {"": 0.5, "0": 0.5})


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_leaf_probabilities_sum_to_one(N, seed):
    d = make_uniform(1, 2)
    cut = np.random.default_rng(seed).uniform(1, 2, node_count(N))
    probs = leaf_probabilities(cut, d, N)
    assert abs(probs.sum() - 1.0) <= 1e-12
    prof = ThresholdProfile(N, cut)
    for w in histories_of_length(N):
        assert abs(path_probability(prof, d, w) - probs[w.mask]) <= 1e-15


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_raising_a_cutoff_favours_work_branch(seed):
    rng = np.random.default_rng(seed)
    d = make_uniform(0, 1)
    N = 3
    cut = rng.uniform(0, 0.9, node_count(N))
    prof = ThresholdProfile(N, cut)
    node = list(itertools.chain.from_iterable(histories_of_length(t) for t in range(N)))[rng.integers(node_count(N))]
    bumped = prof.with_cutoff(node, prof.cutoff(node) + 0.05)
    for w in histories_of_length(N):
        if w.length > node.length and w.prefix(node.length) == node and w.bits[node.length] == 1:
            assert path_probability(bumped, d, w) >= path_probability(prof, d, w)
