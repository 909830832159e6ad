import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from socrl.learn import (EpsilonSchedule, LinearQ, QTable, epsilon_greedy,
                         linear_q_update, pacboy_feature_count, q_update)
from socrl.seeding import component_rng


def test_q_update_alpha_zero_is_noop():
    t = QTable(3, 2)
    t.values[:] = 0.5
    before = t.values.copy()
    q_update(t, 0, 1, 4.0, 2, False, 0.9, 0.0)
    assert np.array_equal(t.values, before)


def test_q_update_full_alpha_assignment():
    # alpha 1 with gamma 0.4 is the Pac-Boy fruit-agent setting: the update
    # becomes a deterministic Bellman assignment.
    t = QTable(3, 2)
    q_update(t, 0, 0, 1.0, 1, False, 0.4, 1.0)
    assert t.values[0, 0] == 1.0


def test_q_update_hand_evaluated():
    t = QTable(3, 2)
    t.values[0, 0] = 0.5
    t.values[1, 1] = 2.0
    q_update(t, 0, 0, 1.0, 1, False, 0.9, 0.1)
    assert t.values[0, 0] == pytest.approx(0.73, abs=1e-12)


def test_q_update_terminal_ignores_bootstrap():
    t = QTable(2, 2)
    t.values[1] = 100.0
    q_update(t, 0, 0, 1.0, 1, True, 0.9, 1.0)
    assert t.values[0, 0] == 1.0


@given(s=st.integers(0, 4), a=st.integers(0, 2), r=st.floats(-5, 5),
       s2=st.integers(0, 4), term=st.booleans(),
       gamma=st.floats(0, 1), alpha=st.floats(0, 1))
def test_q_update_touches_single_entry(s, a, r, s2, term, gamma, alpha):
    t = QTable(5, 3)
    t.values[:] = np.arange(15, dtype=float).reshape(5, 3)
    before = t.values.copy()
    q_update(t, s, a, r, s2, term, gamma, alpha)
    mask = np.ones_like(before, dtype=bool)
    mask[s, a] = False
    assert np.array_equal(t.values[mask], before[mask])


def test_q_update_index_and_value_errors():
    t = QTable(2, 2)
    with pytest.raises(IndexError):
        q_update(t, 5, 0, 0.0, 0, False, 0.9, 0.1)
    with pytest.raises(ValueError, match="finite"):
        q_update(t, 0, 0, float("nan"), 0, False, 0.9, 0.1)
    with pytest.raises(ValueError, match="alpha"):
        q_update(t, 0, 0, 0.0, 0, False, 0.9, 1.5)


# ---------------------------------------------------------------------------

def test_linear_update_no_features_is_noop():
    m = LinearQ(4, 2, extractor=lambda x: np.array([], dtype=np.int64))
    linear_q_update(m, 0, 0, 1.0, 0, False, 0.9, 0.5)
    assert np.all(m.weights == 0.0)


def test_linear_update_single_feature():
    m = LinearQ(4, 2, extractor=lambda x: np.array([x]))
    linear_q_update(m, 2, 1, 1.0, 3, False, 0.9, 0.005)
    assert m.weights[1, 2] == pytest.approx(0.005, abs=1e-15)
    assert np.count_nonzero(m.weights) == 1


def test_linear_update_features_share_delta():
    m = LinearQ(6, 2, extractor=lambda x: np.array(x))
    linear_q_update(m, [1, 4], 0, 2.0, [1, 4], True, 0.9, 0.1)
    assert m.weights[0, 1] == m.weights[0, 4] != 0.0


def test_linear_one_hot_matches_tabular():
    # LinearQ over one-hot state features must reproduce tabular Q-learning
    # exactly on an identical transition stream.
    n_states, n_actions = 6, 3
    table = QTable(n_states, n_actions)
    model = LinearQ(n_states, n_actions, extractor=lambda s: np.array([s]))
    rng = component_rng(0, 0)
    s = 0
    for _ in range(2000):
        a = int(rng.random() * n_actions)
        s2 = int(rng.random() * n_states)
        r = float(rng.random() - 0.5)
        term = rng.random() < 0.05
        q_update(table, s, a, r, s2, term, 0.9, 0.1)
        linear_q_update(model, s, a, r, s2, term, 0.9, 0.1)
        s = 0 if term else s2
    assert np.abs(model.weights.T - table.values).max() < 1e-12


def test_linear_feature_index_range_checked():
    m = LinearQ(4, 2, extractor=lambda x: np.array([9]))
    with pytest.raises(IndexError):
        m.q_values(0)


# ---------------------------------------------------------------------------

def test_epsilon_greedy_zero_eps_is_argmax():
    rng = component_rng(1, 0)
    for _ in range(50):
        assert epsilon_greedy(np.array([0.0, 3.0, 1.0]), 0.0, rng) == 1


def test_epsilon_greedy_eps_one_uniform():
    # Empirical frequency oracle: eps=1 must be uniform within +-1%.
    rng = component_rng(2, 0)
    counts = np.zeros(4)
    n = 100_000
    for _ in range(n):
        counts[epsilon_greedy(np.array([0.0, 3.0, 1.0, 1.0]), 1.0, rng)] += 1
    assert np.abs(counts / n - 0.25).max() < 0.01


def test_epsilon_greedy_mixture_frequency():
    # With eps=0.1 and a unique argmax the argmax frequency is
    # 0.9 + 0.1/|A| (greedy mass plus its share of the uniform mass).
    rng = component_rng(3, 0)
    n = 100_000
    hits = sum(
        epsilon_greedy(np.array([0.0, 5.0, 1.0, 0.5]), 0.1, rng) == 1
        for _ in range(n)
    )
    assert hits / n == pytest.approx(0.9 + 0.1 / 4, abs=0.01)


def test_epsilon_greedy_tie_break_uniform():
    rng = component_rng(4, 0)
    counts = np.zeros(3)
    for _ in range(30_000):
        counts[epsilon_greedy(np.array([2.0, 2.0, 1.0]), 0.0, rng)] += 1
    assert counts[2] == 0
    assert np.abs(counts[:2] / 30_000 - 0.5).max() < 0.02


def test_epsilon_greedy_draw_count_contract():
    # The compiled engine relies on exactly two doubles per call.
    rng_a = component_rng(5, 0)
    rng_b = component_rng(5, 0)
    epsilon_greedy(np.array([1.0, 0.0]), 0.3, rng_a)
    rng_b.random(2)
    assert rng_a.random() == rng_b.random()


def test_epsilon_greedy_first_mode_deterministic():
    rng = component_rng(6, 0)
    before = rng.bit_generator.state
    assert epsilon_greedy(np.array([1.0, 1.0, 0.0]), 0.0, rng, tie_break="first") == 0
    assert rng.bit_generator.state == before


def test_epsilon_greedy_errors():
    rng = component_rng(7, 0)
    with pytest.raises(ValueError):
        epsilon_greedy(np.array([]), 0.1, rng)
    with pytest.raises(ValueError):
        epsilon_greedy(np.array([1.0]), 1.5, rng)
    with pytest.raises(ValueError):
        epsilon_greedy(np.array([1.0]), 0.5, rng, tie_break="bogus")


# ---------------------------------------------------------------------------

def test_epsilon_schedule_endpoints_and_shape():
    sched = EpsilonSchedule(1.0, 0.0, 150_000)
    assert sched.value(0) == 1.0
    assert sched.value(150_000) == pytest.approx(0.0, abs=1e-12)
    assert sched.value(1_000_000) == pytest.approx(0.0, abs=1e-12)
    values = [sched.value(t) for t in range(0, 150_001, 1500)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_epsilon_schedule_constant():
    sched = EpsilonSchedule(0.1, 0.1, 0)
    assert sched.value(0) == sched.value(10**9) == 0.1


@given(initial=st.floats(0, 1), final=st.floats(0, 1),
       anneal=st.integers(1, 10**6), t=st.integers(0, 10**7))
def test_epsilon_schedule_within_bounds(initial, final, anneal, t):
    sched = EpsilonSchedule(initial, final, anneal)
    lo, hi = min(initial, final), max(initial, final)
    assert lo - 1e-12 <= sched.value(t) <= hi + 1e-12


def test_epsilon_schedule_validation():
    with pytest.raises(ValueError):
        EpsilonSchedule(1.5, 0.0, 10)
    with pytest.raises(ValueError):
        EpsilonSchedule(0.5, 0.0, -1)


# ---------------------------------------------------------------------------

def test_qtable_roundtrip_bit_identical(tmp_path):
    t = QTable(5, 3)
    rng = component_rng(8, 0)
    t.values[:] = rng.standard_normal((5, 3))
    t.values[2, 1] = 0.0
    path = tmp_path / "t.qtable"
    t.save(path)
    loaded = QTable.load(path)
    assert np.array_equal(loaded.values, t.values)
    assert (loaded.n_states, loaded.n_actions) == (5, 3)


def test_qtable_saves_only_nonzero(tmp_path):
    t = QTable(4, 2)
    t.values[3, 1] = 1.25
    path = tmp_path / "t.qtable"
    t.save(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "qtable v1 states 4 actions 2"
    assert lines[1:] == ["3 1 1.25"]


def test_qtable_load_bad_header(tmp_path):
    path = tmp_path / "bad.qtable"
    path.write_text("qtable v2 states 2 actions 2\n")
    with pytest.raises(ValueError, match="header"):
        QTable.load(path)


def test_linearq_roundtrip(tmp_path):
    m = LinearQ(6, 2, extractor=lambda x: np.array([x]))
    m.weights[1, 4] = -0.375
    path = tmp_path / "m.linearq"
    m.save(path)
    m2 = LinearQ(6, 2, extractor=lambda x: np.array([x]))
    m2.load_weights(path)
    assert np.array_equal(m2.weights, m.weights)
    m3 = LinearQ(7, 2, extractor=lambda x: np.array([x]))
    with pytest.raises(ValueError, match="dimensions"):
        m3.load_weights(path)


def test_qtable_view_shares_memory():
    parent = np.zeros((3, 4, 2))
    t = QTable(4, 2, values=parent[1])
    t.values[2, 1] = 7.0
    assert parent[1, 2, 1] == 7.0


# ---------------------------------------------------------------------------

def test_feature_count_matches_concatenated_one_hots():
    assert pacboy_feature_count(76, 75, 2) == 17_252
