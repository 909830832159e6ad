"""Pac-Boy: collect fruits in a maze while two random-walking ghosts roam.

Rewards: +1 per fruit eaten, -10 per ghost contact.  An episode ends when all
fruits are eaten or after `max_episode_steps` steps, whichever comes first;
ghost contact does not end it.

Step order (fixed, and mirrored exactly by the compiled engine):
Pac-Boy moves first (blocked moves stay), eats any fruit on the arrival
cell, then each ghost in turn moves uniformly at random to an adjacent
walkable cell (one double per ghost).  Ghost k counts as contacted when
Pac-Boy's arrival cell is the ghost's pre-move cell (landing on it, which
also covers position swaps) or its post-move cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import FlatEnvironment
from ..seeding import rand_below
from .maze import MOVES, Maze, default_maze

FRUIT_PROB = 0.5
DEFAULT_MAX_STEPS = 300


@dataclass(frozen=True)
class PacBoyState:
    pacboy: int
    ghosts: tuple[int, ...]
    fruit: np.ndarray          # bool per fruit slot; treat as immutable
    steps_elapsed: int

    def fruit_count(self) -> int:
        return int(self.fruit.sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PacBoyState)
            and self.pacboy == other.pacboy
            and self.ghosts == other.ghosts
            and self.steps_elapsed == other.steps_elapsed
            and np.array_equal(self.fruit, other.fruit)
        )

    def __hash__(self) -> int:
        return hash((self.pacboy, self.ghosts, self.steps_elapsed, self.fruit.tobytes()))


def ghost_contacts(state: PacBoyState, next_state: PacBoyState) -> tuple[bool, ...]:
    """Per-ghost contact flags for one transition, from the state pair alone."""
    p1 = next_state.pacboy
    return tuple(
        g0 == p1 or g1 == p1 for g0, g1 in zip(state.ghosts, next_state.ghosts)
    )


def fruit_eaten_at(state: PacBoyState, next_state: PacBoyState, slot: int) -> bool:
    return bool(state.fruit[slot]) and not bool(next_state.fruit[slot])


class PacBoyEnv(FlatEnvironment):
    action_set = list(MOVES)

    def __init__(self, maze: Maze | None = None,
                 rng: np.random.Generator | None = None,
                 max_episode_steps: int = DEFAULT_MAX_STEPS):
        self.maze = maze if maze is not None else default_maze()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.max_episode_steps = max_episode_steps
        self.n_fruit_slots = len(self.maze.fruit_cells)
        self._fruit_at = self.maze.arrays()["fruit_at"]
        self._state: PacBoyState | None = None
        self._terminal = True
        self._spawned = 0

    @property
    def state_space_size(self) -> int:
        n = self.maze.n_cells
        return n * (2 ** self.n_fruit_slots) * n ** len(self.maze.ghost_starts)

    @property
    def current_state(self) -> PacBoyState:
        if self._state is None:
            raise RuntimeError("environment not reset yet")
        return self._state

    @property
    def terminal(self) -> bool:
        return self._terminal

    @property
    def spawned_fruits(self) -> int:
        """Fruit count drawn at the last reset."""
        return self._spawned

    def reset(self, seed: int | None = None) -> PacBoyState:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        fruit = self.rng.random(self.n_fruit_slots) < FRUIT_PROB
        self._state = PacBoyState(
            pacboy=self.maze.pacboy_start,
            ghosts=tuple(self.maze.ghost_starts),
            fruit=fruit,
            steps_elapsed=0,
        )
        self._spawned = int(fruit.sum())
        self._terminal = self._spawned == 0
        return self._state

    def set_state(self, state: PacBoyState) -> None:
        """Force an arbitrary state (test and analysis hook)."""
        self._state = state
        self._spawned = max(self._spawned, state.fruit_count())
        self._terminal = (
            state.fruit_count() == 0 or state.steps_elapsed >= self.max_episode_steps
        )

    def step(self, action) -> tuple[PacBoyState, float, bool]:
        self._check_not_terminal()
        a = self.action_index(action)
        state = self.current_state
        maze = self.maze

        p1 = maze.move(state.pacboy, MOVES[a])
        fruit = state.fruit.copy()
        reward = 0.0
        slot = self._fruit_at[p1]
        if slot >= 0 and fruit[slot]:
            fruit[slot] = False
            reward += 1.0

        ghosts = []
        for g0 in state.ghosts:
            nbrs = maze.neighbors(g0)
            g1 = nbrs[rand_below(self.rng, len(nbrs))]
            if g0 == p1 or g1 == p1:
                reward -= 10.0
            ghosts.append(g1)

        next_state = PacBoyState(
            pacboy=p1,
            ghosts=tuple(ghosts),
            fruit=fruit,
            steps_elapsed=state.steps_elapsed + 1,
        )
        self._state = next_state
        remaining = next_state.fruit_count()
        self._terminal = remaining == 0 or next_state.steps_elapsed >= self.max_episode_steps
        return next_state, reward, self._terminal

    def episode_success(self) -> float:
        if self._spawned == 0:
            return 1.0
        return (self._spawned - self.current_state.fruit_count()) / self._spawned
