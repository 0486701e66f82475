from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from gossipsim.accessibility import (
    ChurnConfig,
    absence_duration,
    init_accessibility,
    partition_nodes,
    read_state_json,
    rounds_since_accessible,
    state_from_dict,
    state_to_dict,
    step_accessibility,
    write_state_json,
)


def test_config_validation():
    with pytest.raises(ValueError):
        ChurnConfig(dropout_p=-0.1)
    with pytest.raises(ValueError):
        ChurnConfig(dropout_p=1.5)
    with pytest.raises(ValueError):
        ChurnConfig(rate=0.0)


def test_zero_dropout_keeps_everyone_accessible():
    cfg = ChurnConfig(dropout_p=0.0, rate=1.0)
    st = init_accessibility(10)
    rng = np.random.default_rng(0)
    for t in range(200):
        st = step_accessibility(st, cfg, t, rng)
        assert st.accessible.all()
        assert st.rejoin_at == {}


def test_duration_mean_matches_rate():
    rng = np.random.default_rng(2024)
    draws = np.array([absence_duration(0.5, rng) for _ in range(100_000)])
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - 2.0) < 3 * se


def test_duration_distribution_ks_against_exponential():
    rng = np.random.default_rng(7)
    draws = np.array([absence_duration(0.5, rng) for _ in range(100_000)])
    result = stats.kstest(draws, "expon", args=(0.0, 2.0))
    assert result.pvalue > 0.01


def test_dropped_node_returns_after_scheduled_round():
    cfg = ChurnConfig(dropout_p=1.0, rate=10.0)
    st = init_accessibility(1)
    rng = np.random.default_rng(1)
    st = step_accessibility(st, cfg, 0, rng)
    assert not st.accessible[0]
    rejoin = st.rejoin_at[0]
    assert rejoin >= 1
    for t in range(1, rejoin):
        st = step_accessibility(st, ChurnConfig(dropout_p=0.0), t, rng)
        assert not st.accessible[0]
    st = step_accessibility(st, ChurnConfig(dropout_p=0.0), rejoin, rng)
    assert st.accessible[0]


def test_just_rejoined_node_not_dropped_same_round():
    # with dropout_p=1 a node rejoining at round t stays accessible at t
    # and is only eligible again at t+1
    cfg = ChurnConfig(dropout_p=1.0, rate=100.0)  # durations ~ceil to 1 round
    st = init_accessibility(1)
    rng = np.random.default_rng(3)
    st = step_accessibility(st, cfg, 0, rng)
    assert not st.accessible[0]
    st = step_accessibility(st, cfg, 1, rng)
    assert st.accessible[0]
    st = step_accessibility(st, cfg, 2, rng)
    assert not st.accessible[0]


def test_rounds_since_accessible_zero_when_accessible():
    st = init_accessibility(3)
    rng = np.random.default_rng(0)
    st = step_accessibility(st, ChurnConfig(dropout_p=0.0), 4, rng)
    assert rounds_since_accessible(st, 4, 1) == 0


def test_rounds_since_accessible_counts_gap():
    st = init_accessibility(2)
    st.last_accessible[0] = 5
    assert rounds_since_accessible(st, 8, 0) == 3


def test_rounds_since_accessible_resets_on_rejoin():
    st = init_accessibility(1)
    rng = np.random.default_rng(0)
    st = step_accessibility(st, ChurnConfig(dropout_p=1.0, rate=0.5), 0, rng)
    rejoin = st.rejoin_at[0]
    for t in range(1, rejoin + 1):
        st = step_accessibility(st, ChurnConfig(dropout_p=0.0), t, rng)
    assert st.accessible[0]
    assert rounds_since_accessible(st, rejoin, 0) == 0


def test_rounds_since_accessible_increases_by_one_per_absent_round():
    st = init_accessibility(1)
    rng = np.random.default_rng(5)
    st = step_accessibility(st, ChurnConfig(dropout_p=1.0, rate=0.2), 0, rng)
    rejoin = st.rejoin_at[0]
    previous = rounds_since_accessible(st, 0, 0)
    for t in range(1, rejoin):
        st = step_accessibility(st, ChurnConfig(dropout_p=0.0), t, rng)
        current = rounds_since_accessible(st, t, 0)
        assert current == previous + 1
        assert current >= 0
        previous = current


def test_unknown_node_rejected():
    st = init_accessibility(3)
    with pytest.raises(ValueError):
        rounds_since_accessible(st, 0, 3)


def test_partition_all_accessible():
    st = init_accessibility(14)
    acc, dropped, n1, n2 = partition_nodes(st)
    assert n1 == 14 and n2 == 0
    assert acc == set(range(14)) and dropped == set()


def test_partition_one_dropped():
    st = init_accessibility(14)
    st.accessible[3] = False
    acc, dropped, n1, n2 = partition_nodes(st)
    assert n1 == 13 and n2 == 1 and dropped == {3}


def test_partition_is_disjoint_cover_on_random_states():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        n = int(rng.integers(1, 15))
        st = init_accessibility(n)
        st.accessible = rng.random(n) < 0.7
        acc, dropped, n1, n2 = partition_nodes(st)
        assert acc | dropped == set(range(n))
        assert acc & dropped == set()
        assert n1 + n2 == n


def test_mean_inaccessible_count_near_reported_setting():
    # n=14, p=10%, rate=1: churn alone keeps roughly 1.5-2 nodes out per round
    cfg = ChurnConfig(dropout_p=0.1, rate=1.0)
    total = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        st = init_accessibility(14)
        for t in range(50):
            st = step_accessibility(st, cfg, t, rng)
            total += 14 - st.accessible.sum()
    mean_out = total / (20 * 50)
    assert 1.0 < mean_out < 3.0


def test_state_json_roundtrip(tmp_path):
    st = init_accessibility(4)
    rng = np.random.default_rng(0)
    st = step_accessibility(st, ChurnConfig(dropout_p=0.5, rate=0.5), 0, rng)
    payload = state_to_dict(st)
    back = state_from_dict(payload)
    assert np.array_equal(back.accessible, st.accessible)
    assert back.rejoin_at == st.rejoin_at
    assert np.array_equal(back.last_accessible, st.last_accessible)
    path = tmp_path / "state.json"
    write_state_json(path, st)
    again = read_state_json(path)
    assert np.array_equal(again.accessible, st.accessible)


def test_invariant_rejoin_map_matches_flags():
    cfg = ChurnConfig(dropout_p=0.3, rate=0.7)
    rng = np.random.default_rng(21)
    st = init_accessibility(10)
    for t in range(100):
        st = step_accessibility(st, cfg, t, rng)
        for i in range(10):
            if not st.accessible[i]:
                assert i in st.rejoin_at and st.rejoin_at[i] > t
            else:
                assert i not in st.rejoin_at
        assert np.all(st.last_accessible <= t)
