import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socrl.mdp import (EpisodeTrace, TabularMdp, TabularMdpEnvironment,
                       discounted_return, run_episode, value_iteration)


def test_discounted_return_zero_rewards():
    assert discounted_return([0, 0, 0], 0.9) == 0.0


def test_discounted_return_half():
    assert discounted_return([1, 1, 1], 0.5) == 1.75


def test_discounted_return_gamma_zero_keeps_first():
    assert discounted_return([5, 2], 0.0) == 5.0


def test_discounted_return_empty():
    assert discounted_return([], 0.7) == 0.0


def test_discounted_return_gamma_bounds():
    with pytest.raises(ValueError):
        discounted_return([1.0], 1.5)


@given(
    rewards=st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
                     min_size=0, max_size=20),
    a=st.floats(-5, 5), b=st.floats(-5, 5),
    gamma=st.floats(0, 1),
)
def test_discounted_return_linear(rewards, a, b, gamma):
    r1 = [x for x, _ in rewards]
    r2 = [y for _, y in rewards]
    mixed = [a * x + b * y for x, y in rewards]
    lhs = discounted_return(mixed, gamma)
    rhs = a * discounted_return(r1, gamma) + b * discounted_return(r2, gamma)
    assert lhs == pytest.approx(rhs, abs=1e-7)


# ---------------------------------------------------------------------------

def chain_mdp(gamma_unused=None) -> TabularMdp:
    """Three chain states plus a terminal one; +1 on entering the terminal.

    Hand-unrolled Bellman backup with gamma 0.9 (the oracle for the frozen
    values below): Q(s2,R) = 1; Q(s1,R) = 0.9 * 1 = 0.9;
    Q(s0,R) = 0.9 * 0.9 = 0.81; left actions bootstrap the state values
    V(s0)=0.81, V(s1)=0.9, so Q(s0,L)=Q(s1,L)=0.729 and Q(s2,L)=0.81.
    """
    n = 4
    p = np.zeros((n, 2, n))
    r = np.zeros((n, 2, n))
    for s in range(3):
        p[s, 1, s + 1] = 1.0
        p[s, 0, max(s - 1, 0)] = 1.0
    r[2, 1, 3] = 1.0
    return TabularMdp(n, 2, p, r, frozenset({3}))


def test_value_iteration_self_loop_geometric():
    p = np.ones((1, 1, 1))
    r = np.ones((1, 1, 1))
    mdp = TabularMdp(1, 1, p, r)
    q = value_iteration(mdp, 0.5, tol=1e-12)
    assert q.values[0, 0] == pytest.approx(2.0, abs=1e-9)


def test_value_iteration_zero_rewards():
    mdp = chain_mdp()
    mdp = TabularMdp(mdp.n_states, 2, mdp.transition, np.zeros_like(mdp.reward),
                     mdp.terminal)
    q = value_iteration(mdp, 0.9)
    assert np.all(q.values == 0.0)


def test_value_iteration_chain_hand_unrolled():
    q = value_iteration(chain_mdp(), 0.9, tol=1e-12).values
    assert q[0, 1] == pytest.approx(0.81, abs=1e-9)
    assert q[1, 1] == pytest.approx(0.9, abs=1e-9)
    assert q[2, 1] == pytest.approx(1.0, abs=1e-9)
    assert q[0, 0] == pytest.approx(0.729, abs=1e-9)
    assert q[1, 0] == pytest.approx(0.729, abs=1e-9)
    assert q[2, 0] == pytest.approx(0.81, abs=1e-9)
    assert np.all(q[3] == 0.0)


def test_value_iteration_bellman_residual_random_mdp():
    rng = np.random.default_rng(5)
    n, m = 6, 3
    p = rng.random((n, m, n))
    p /= p.sum(axis=2, keepdims=True)
    r = rng.normal(size=(n, m, n))
    mdp = TabularMdp(n, m, p, r)
    tol = 1e-9
    gamma = 0.8
    q = value_iteration(mdp, gamma, tol=tol).values
    # independent residual evaluation
    v = q.max(axis=1)
    backup = np.einsum("sat,sat->sa", p, r) + gamma * (p @ v)
    assert np.abs(backup - q).max() < tol * 2 / (1 - gamma)


def test_value_iteration_rejects_non_stochastic():
    mdp = chain_mdp()
    bad = TabularMdp(mdp.n_states, 2, mdp.transition * 0.5, mdp.reward, mdp.terminal)
    with pytest.raises(ValueError, match="sums to"):
        value_iteration(bad, 0.9)


def test_value_iteration_rejects_bad_tol():
    with pytest.raises(ValueError):
        value_iteration(chain_mdp(), 0.9, tol=0.0)


def test_tabular_mdp_rejects_negative_probabilities():
    mdp = chain_mdp()
    p = mdp.transition.copy()
    p[0, 0, 0] = -0.5
    p[0, 0, 1] = 1.5
    with pytest.raises(ValueError, match="nonnegative"):
        TabularMdp(mdp.n_states, 2, p, mdp.reward, mdp.terminal).validate()


def test_mdp_text_roundtrip(tmp_path):
    mdp = chain_mdp()
    path = tmp_path / "chain.mdp"
    mdp.save(path)
    loaded = TabularMdp.load(path)
    assert np.array_equal(loaded.transition, mdp.transition)
    assert np.array_equal(loaded.reward, mdp.reward)
    assert loaded.terminal == mdp.terminal


def test_mdp_text_bad_header(tmp_path):
    path = tmp_path / "bad.mdp"
    path.write_text("states 3\n")
    with pytest.raises(ValueError, match="header"):
        TabularMdp.load(path)


def test_mdp_text_bad_line(tmp_path):
    path = tmp_path / "bad.mdp"
    path.write_text("states 2 actions 1\n0 0 1 0.5\n")
    with pytest.raises(ValueError, match="transition line"):
        TabularMdp.load(path)


def test_mdp_text_unlisted_transitions_zero(tmp_path):
    path = tmp_path / "sparse.mdp"
    path.write_text("states 2 actions 1\n0 0 1 1.0 2.5\nterminal 1\n")
    mdp = TabularMdp.load(path)
    assert mdp.transition[1, 0, 0] == 0.0
    assert mdp.reward[0, 0, 1] == 2.5
    mdp.validate()


# ---------------------------------------------------------------------------

def test_run_episode_single_step():
    env = TabularMdpEnvironment(chain_mdp())
    trace = run_episode(env, lambda s: 1, max_steps=1, seed=0)
    assert len(trace) == 1


def test_run_episode_stops_at_terminal():
    env = TabularMdpEnvironment(chain_mdp())
    trace = run_episode(env, lambda s: 1, max_steps=50, seed=0)
    assert len(trace) == 3
    assert trace.steps[-1][4] is True
    assert trace.total_reward == 1.0


def test_run_episode_deterministic_under_seed():
    mdp = chain_mdp()
    rng = np.random.default_rng(3)
    p = rng.random((4, 2, 4))
    p /= p.sum(axis=2, keepdims=True)
    noisy = TabularMdp(4, 2, p, mdp.reward)
    env = TabularMdpEnvironment(noisy)
    policy = lambda s: s % 2
    t1 = run_episode(env, policy, max_steps=30, seed=11)
    t2 = run_episode(env, policy, max_steps=30, seed=11)
    assert t1.steps == t2.steps


def test_run_episode_rejects_bad_action():
    env = TabularMdpEnvironment(chain_mdp())
    with pytest.raises(ValueError, match="not in action set"):
        run_episode(env, lambda s: 9, max_steps=5, seed=0)


def test_run_episode_rejects_bad_max_steps():
    env = TabularMdpEnvironment(chain_mdp())
    with pytest.raises(ValueError):
        run_episode(env, lambda s: 1, max_steps=0)


def test_step_after_terminal_is_error():
    env = TabularMdpEnvironment(chain_mdp())
    env.reset(0)
    for _ in range(3):
        env.step(1)
    with pytest.raises(RuntimeError, match="terminal"):
        env.step(1)


def test_trace_rewards_property():
    trace = EpisodeTrace([(0, 1, 0.5, 1, False), (1, 1, -1.0, 2, True)])
    assert trace.rewards == [0.5, -1.0]
    assert trace.total_reward == -0.5
