"""Tabular Q-learning, epsilon-greedy selection, and the linear flat baseline."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .seeding import rand_below


class QTable:
    """Dense state x action value table.

    `values` may be a view into a larger parent array (the Pac-Boy builder
    stacks all fruit tables into one block so the compiled engine can walk
    them contiguously); mutations through the view are shared by design.
    Dimensions are fixed at creation.
    """

    def __init__(self, n_states: int, n_actions: int, initial: float = 0.0,
                 values: np.ndarray | None = None):
        if n_states < 1 or n_actions < 1:
            raise ValueError("QTable dimensions must be positive")
        self.n_states = n_states
        self.n_actions = n_actions
        self.initial = initial
        if values is None:
            self.values = np.full((n_states, n_actions), float(initial))
        else:
            if values.shape != (n_states, n_actions):
                raise ValueError(
                    f"values shape {values.shape} != ({n_states}, {n_actions})"
                )
            self.values = values

    def q(self, s: int) -> np.ndarray:
        return self.values[s]

    def update(self, s: int, a: int, r: float, s_next: int, terminal: bool,
               gamma: float, alpha: float) -> None:
        q_update(self, s, a, r, s_next, terminal, gamma, alpha)

    def copy(self) -> "QTable":
        out = QTable(self.n_states, self.n_actions, self.initial)
        out.values[:] = self.values
        return out

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest()

    def save(self, path) -> None:
        """Write the text format: header, then `s a value` for entries != 0."""
        with open(path, "w") as fh:
            fh.write(f"qtable v1 states {self.n_states} actions {self.n_actions}\n")
            for s, a in zip(*np.nonzero(self.values)):
                fh.write(f"{int(s)} {int(a)} {float(self.values[s, a])!r}\n")

    @classmethod
    def load(cls, path, initial: float = 0.0) -> "QTable":
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty table file")
        head = lines[0].split()
        if len(head) != 6 or head[:2] != ["qtable", "v1"] or head[2] != "states" or head[4] != "actions":
            raise ValueError(f"{path}: bad header {lines[0]!r}")
        table = cls(int(head[3]), int(head[5]), initial=initial)
        for ln in lines[1:]:
            s, a, v = ln.split()
            table.values[int(s), int(a)] = float(v)
        return table


def q_update(table: QTable, s: int, a: int, r: float, s_next: int,
             terminal: bool, gamma: float, alpha: float) -> QTable:
    """One Q-learning backup; touches only entry (s, a)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r}")
    if not (0 <= s < table.n_states and 0 <= a < table.n_actions):
        raise IndexError(f"(s={s}, a={a}) out of range for {table.n_states}x{table.n_actions} table")
    if not terminal and not 0 <= s_next < table.n_states:
        raise IndexError(f"s_next={s_next} out of range")
    target = r if terminal else r + gamma * float(table.values[s_next].max())
    table.values[s, a] += alpha * (target - table.values[s, a])
    return table


class LinearQ:
    """Linear function approximation over sparse binary features.

    Q(x, a) = sum of weights[a, j] over the active feature indices of x.
    """

    def __init__(self, n_features: int, n_actions: int,
                 extractor: Callable[..., np.ndarray]):
        self.n_features = n_features
        self.n_actions = n_actions
        self.extractor = extractor
        self.weights = np.zeros((n_actions, n_features))

    def active_features(self, x) -> np.ndarray:
        idx = np.asarray(self.extractor(x), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_features):
            raise IndexError("active feature index out of range")
        return idx

    def q_values(self, x) -> np.ndarray:
        idx = self.active_features(x)
        if idx.size == 0:
            return np.zeros(self.n_actions)
        return self.weights[:, idx].sum(axis=1)

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.weights).tobytes()).hexdigest()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"linearq v1 features {self.n_features} actions {self.n_actions}\n")
            for a, j in zip(*np.nonzero(self.weights)):
                fh.write(f"{int(a)} {int(j)} {float(self.weights[a, j])!r}\n")

    def load_weights(self, path) -> None:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        head = lines[0].split()
        if len(head) != 6 or head[:2] != ["linearq", "v1"]:
            raise ValueError(f"{path}: bad header {lines[0]!r}")
        if (int(head[3]), int(head[5])) != (self.n_features, self.n_actions):
            raise ValueError(
                f"{path}: dimensions {head[3]}x{head[5]} do not match "
                f"{self.n_features}x{self.n_actions}"
            )
        self.weights[:] = 0.0
        for ln in lines[1:]:
            a, j, v = ln.split()
            self.weights[int(a), int(j)] = float(v)


def linear_q_update(model: LinearQ, x, a: int, r: float, x_next,
                    terminal: bool, gamma: float, alpha: float) -> LinearQ:
    """Semi-gradient Q-learning step on the active features of x."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r}")
    idx = model.active_features(x)
    if idx.size == 0:
        return model
    q_sa = float(model.weights[a, idx].sum())
    target = r if terminal else r + gamma * float(model.q_values(x_next).max())
    model.weights[a, idx] += alpha * (target - q_sa)
    return model


@dataclass
class EpsilonSchedule:
    """Linear anneal from `initial` to `final` over `anneal_steps` steps.

    anneal_steps == 0 means constant `initial`.
    """

    initial: float
    final: float
    anneal_steps: int

    def __post_init__(self) -> None:
        for name, v in (("initial", self.initial), ("final", self.final)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"epsilon {name} must lie in [0, 1], got {v}")
        if self.anneal_steps < 0:
            raise ValueError("anneal_steps must be >= 0")

    def value(self, step: int) -> float:
        if self.anneal_steps == 0:
            return self.initial
        frac = min(max(step, 0), self.anneal_steps) / self.anneal_steps
        return self.initial + (self.final - self.initial) * frac

    @staticmethod
    def constant(eps: float) -> "EpsilonSchedule":
        return EpsilonSchedule(eps, eps, 0)


def epsilon_greedy(qvalues: np.ndarray, epsilon: float,
                   rng: np.random.Generator, tie_break: str = "random") -> int:
    """Pick argmax with probability 1 - epsilon, else uniform.

    tie_break "random" breaks exact-value ties uniformly and consumes exactly
    two doubles per call regardless of the outcome -- the compiled engine
    relies on that fixed draw count to stay stream-aligned with this code.
    tie_break "first" is the deterministic lowest-index mode for tests; with
    epsilon == 0 it consumes no draws.
    """
    qvalues = np.asarray(qvalues)
    n = qvalues.shape[0]
    if n == 0:
        raise ValueError("epsilon_greedy needs a nonempty value vector")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if tie_break == "first":
        if epsilon > 0.0 and rng.random() < epsilon:
            return rand_below(rng, n)
        return int(np.argmax(qvalues))
    if tie_break != "random":
        raise ValueError(f"unknown tie_break mode {tie_break!r}")
    u_explore = rng.random()
    u_choice = rng.random()
    if u_explore < epsilon:
        return int(u_choice * n)
    ties = np.flatnonzero(qvalues == qvalues.max())
    return int(ties[int(u_choice * ties.shape[0])])


def pacboy_feature_count(n_positions: int = 76, n_fruit_slots: int = 75,
                         n_ghosts: int = 2) -> int:
    return n_fruit_slots * n_positions + n_ghosts * n_positions * n_positions


def pacboy_feature_extract(state, n_positions: int = 76,
                           n_fruit_slots: int = 75) -> np.ndarray:
    """Sparse one-hot encoding of a Pac-Boy state, concatenated per agent.

    Fruit slot f contributes one active index in its own block only while
    its fruit is present; each ghost block contributes exactly one.
    """
    pac = state.pacboy
    active = [f * n_positions + pac for f in np.flatnonzero(state.fruit)]
    base = n_fruit_slots * n_positions
    block = n_positions * n_positions
    for k, g in enumerate(state.ghosts):
        active.append(base + k * block + pac * n_positions + g)
    return np.asarray(active, dtype=np.int64)


class QTableLearner:
    """QTable plus its update hyperparameters, behind the learner interface."""

    def __init__(self, table: QTable, gamma: float, alpha: float):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        self.table = table
        self.gamma = gamma
        self.alpha = alpha

    def scores(self, s: int) -> np.ndarray:
        return self.table.values[s]

    def update(self, s: int, a: int, r: float, s_next: int, terminal: bool) -> None:
        q_update(self.table, s, a, r, s_next, terminal, self.gamma, self.alpha)

    def digest(self) -> str:
        return self.table.digest()


class LinearQLearner:
    """LinearQ model behind the same learner interface (states are raw)."""

    def __init__(self, model: LinearQ, gamma: float, alpha: float):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
        self.model = model
        self.gamma = gamma
        self.alpha = alpha

    def scores(self, x) -> np.ndarray:
        return self.model.q_values(x)

    def update(self, x, a: int, r: float, x_next, terminal: bool) -> None:
        linear_q_update(self.model, x, a, r, x_next, terminal, self.gamma, self.alpha)

    def digest(self) -> str:
        return self.model.digest()
