"""Core MDP types, the discounted return, and a value-iteration oracle.

The value-iteration solver is deliberately independent of the incremental
learners in :mod:`socrl.learn`; tests use it as ground truth for Q-learning
convergence.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .learn import QTable


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Sum of gamma^k * rewards[k].  Empty sequences return 0."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    weight = 1.0
    for r in rewards:
        total += weight * r
        weight *= gamma
    return total


class FlatEnvironment(ABC):
    """The undecomposed single-agent task behind a step interface.

    Concrete environments expose ``action_set`` (ordered flat actions),
    ``state_space_size``, and ``current_state``.  All stochasticity flows
    from ``self.rng``; ``reset(seed)`` replaces that generator, so equal
    seeds plus equal action sequences give identical episode realizations.
    """

    action_set: list
    rng: np.random.Generator

    @property
    @abstractmethod
    def state_space_size(self) -> int: ...

    @abstractmethod
    def reset(self, seed: int | None = None) -> Any:
        """Start a new episode and return its initial state."""

    @abstractmethod
    def step(self, action) -> tuple[Any, float, bool]:
        """Apply one flat action; returns (next_state, reward, terminal)."""

    @property
    @abstractmethod
    def current_state(self) -> Any: ...

    @property
    @abstractmethod
    def terminal(self) -> bool: ...

    def episode_success(self) -> float:
        """Domain success fraction of the finished episode (metric hook)."""
        return 0.0

    def action_index(self, action) -> int:
        try:
            return self.action_set.index(action)
        except ValueError:
            raise ValueError(f"action {action!r} not in action set {self.action_set}") from None

    def _check_not_terminal(self) -> None:
        if self.terminal:
            raise RuntimeError("step() called on a terminal episode; call reset() first")


@dataclass
class DiscountedReturnSpec:
    """Discount factor of the flat performance objective."""

    gamma: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass
class TabularMdp:
    """Explicit-matrix MDP used by the oracle and oracle-backed tests.

    transition[s, a, s'] holds probabilities, reward[s, a, s'] expected
    rewards.  Rows of non-terminal states must be stochastic; terminal
    states' rows are ignored.
    """

    n_states: int
    n_actions: int
    transition: np.ndarray
    reward: np.ndarray
    terminal: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=np.float64)
        self.reward = np.asarray(self.reward, dtype=np.float64)
        self.terminal = frozenset(self.terminal)
        shape = (self.n_states, self.n_actions, self.n_states)
        if self.transition.shape != shape or self.reward.shape != shape:
            raise ValueError(f"transition/reward must have shape {shape}")

    def validate(self, atol: float = 1e-9) -> None:
        if (self.transition < 0).any():
            raise ValueError("transition probabilities must be nonnegative")
        for s in range(self.n_states):
            if s in self.terminal:
                continue
            sums = self.transition[s].sum(axis=1)
            if not np.allclose(sums, 1.0, atol=atol, rtol=0.0):
                bad = int(np.argmax(np.abs(sums - 1.0)))
                raise ValueError(
                    f"transition row (s={s}, a={bad}) sums to {sums[bad]!r}, expected 1"
                )

    @classmethod
    def load(cls, path) -> "TabularMdp":
        """Parse the plain-text format:

        ``states S actions A`` header, then ``s a s' prob reward`` lines,
        then an optional ``terminal s1 s2 ...`` line.  Unlisted transitions
        have probability 0.
        """
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        if not lines:
            raise ValueError(f"{path}: empty MDP file")
        head = lines[0].split()
        if len(head) != 4 or head[0] != "states" or head[2] != "actions":
            raise ValueError(f"{path}: bad header {lines[0]!r}, expected 'states S actions A'")
        n_states, n_actions = int(head[1]), int(head[3])
        p = np.zeros((n_states, n_actions, n_states))
        r = np.zeros((n_states, n_actions, n_states))
        terminal: set[int] = set()
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "terminal":
                terminal.update(int(t) for t in parts[1:])
                continue
            if len(parts) != 5:
                raise ValueError(f"{path}: bad transition line {ln!r}")
            s, a, s2 = int(parts[0]), int(parts[1]), int(parts[2])
            if not (0 <= s < n_states and 0 <= a < n_actions and 0 <= s2 < n_states):
                raise ValueError(f"{path}: index out of range in line {ln!r}")
            p[s, a, s2] = float(parts[3])
            r[s, a, s2] = float(parts[4])
        return cls(n_states, n_actions, p, r, frozenset(terminal))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"states {self.n_states} actions {self.n_actions}\n")
            for s in range(self.n_states):
                for a in range(self.n_actions):
                    for s2 in np.flatnonzero(self.transition[s, a]):
                        fh.write(
                            f"{s} {a} {int(s2)} {float(self.transition[s, a, s2])!r} "
                            f"{float(self.reward[s, a, s2])!r}\n"
                        )
            if self.terminal:
                fh.write("terminal " + " ".join(str(t) for t in sorted(self.terminal)) + "\n")


def value_iteration(mdp: TabularMdp, gamma: float, tol: float = 1e-9) -> QTable:
    """Solve for Q* by synchronous sweeps until the max-norm residual < tol.

    Terminal states keep Q identically 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    mdp.validate()
    nonterm = np.array([s not in mdp.terminal for s in range(mdp.n_states)])
    expected_r = np.einsum("sat,sat->sa", mdp.transition, mdp.reward)
    q = np.zeros((mdp.n_states, mdp.n_actions))
    while True:
        v = np.where(nonterm, q.max(axis=1), 0.0)
        q_next = expected_r + gamma * (mdp.transition @ v)
        q_next[~nonterm] = 0.0
        residual = np.abs(q_next - q).max()
        q = q_next
        if residual < tol:
            break
    table = QTable(mdp.n_states, mdp.n_actions)
    table.values[:] = q
    return table


class TabularMdpEnvironment(FlatEnvironment):
    """FlatEnvironment view of an explicit TabularMdp (integer states)."""

    def __init__(self, mdp: TabularMdp, initial_state: int = 0,
                 rng: np.random.Generator | None = None):
        mdp.validate()
        self.mdp = mdp
        self.initial_state = initial_state
        self.action_set = list(range(mdp.n_actions))
        self.rng = rng if rng is not None else np.random.default_rng()
        self._state = initial_state
        self._terminal = initial_state in mdp.terminal

    @property
    def state_space_size(self) -> int:
        return self.mdp.n_states

    @property
    def current_state(self) -> int:
        return self._state

    @property
    def terminal(self) -> bool:
        return self._terminal

    def reset(self, seed: int | None = None) -> int:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self._state = self.initial_state
        self._terminal = self._state in self.mdp.terminal
        return self._state

    def step(self, action) -> tuple[int, float, bool]:
        self._check_not_terminal()
        a = self.action_index(action)
        probs = self.mdp.transition[self._state, a]
        # One double per step, walked through the cumulative distribution.
        u = self.rng.random()
        acc = 0.0
        s2 = self.mdp.n_states - 1
        for j, pj in enumerate(probs):
            acc += pj
            if u < acc:
                s2 = j
                break
        reward = float(self.mdp.reward[self._state, a, s2])
        self._state = s2
        self._terminal = s2 in self.mdp.terminal
        return s2, reward, self._terminal


@dataclass
class EpisodeTrace:
    """Ordered (state, action, reward, next_state, terminal) transitions."""

    steps: list[tuple]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def rewards(self) -> list[float]:
        return [s[2] for s in self.steps]

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))


def run_episode(env: FlatEnvironment, policy: Callable, max_steps: int,
                seed: int | None = None) -> EpisodeTrace:
    """Roll one episode under `policy(state) -> action`, at most max_steps."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    state = env.reset(seed)
    steps = []
    for _ in range(max_steps):
        action = policy(state)
        env.action_index(action)  # raises on actions outside the action set
        next_state, reward, terminal = env.step(action)
        steps.append((state, action, reward, next_state, terminal))
        state = next_state
        if terminal:
            break
    return EpisodeTrace(steps)
