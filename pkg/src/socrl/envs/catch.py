"""Catch: a ball drops from the top row, a one-pixel paddle slides below.

Reward +1 when the ball reaches the bottom row at the paddle column, -1 when
it reaches the bottom anywhere else, 0 otherwise; the episode is terminal
exactly when the ball reaches the bottom row, so every episode lasts N-1
steps.  The ball falls straight down; reset consumes one double for the
ball column and puts the paddle at the center column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import FlatEnvironment
from ..seeding import rand_below

CATCH_ACTIONS = ["left", "no-op", "right"]
_SHIFT = {"left": -1, "no-op": 0, "right": 1}


@dataclass(frozen=True)
class CatchState:
    ball: tuple[int, int]      # (column, row)
    paddle: int                # column on the bottom row
    n: int                     # grid size


class CatchEnv(FlatEnvironment):
    action_set = list(CATCH_ACTIONS)

    def __init__(self, n: int = 24, rng: np.random.Generator | None = None):
        if n < 2:
            raise ValueError("grid size must be >= 2")
        self.n = n
        self.rng = rng if rng is not None else np.random.default_rng()
        self._state: CatchState | None = None
        self._terminal = True
        self._caught = False

    @property
    def state_space_size(self) -> int:
        return self.n * self.n * self.n

    @property
    def current_state(self) -> CatchState:
        if self._state is None:
            raise RuntimeError("environment not reset yet")
        return self._state

    @property
    def terminal(self) -> bool:
        return self._terminal

    def reset(self, seed: int | None = None) -> CatchState:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        col = rand_below(self.rng, self.n)
        self._state = CatchState(ball=(col, 0), paddle=self.n // 2, n=self.n)
        self._terminal = False
        self._caught = False
        return self._state

    def set_state(self, state: CatchState) -> None:
        self._state = state
        self._terminal = state.ball[1] >= state.n - 1

    def step(self, action) -> tuple[CatchState, float, bool]:
        self._check_not_terminal()
        shift = _SHIFT[CATCH_ACTIONS[self.action_index(action)]]
        state = self.current_state
        paddle = min(max(state.paddle + shift, 0), self.n - 1)
        col, row = state.ball
        row += 1
        next_state = CatchState(ball=(col, row), paddle=paddle, n=self.n)
        self._state = next_state
        self._terminal = row == self.n - 1
        reward = 0.0
        if self._terminal:
            self._caught = col == paddle
            reward = 1.0 if self._caught else -1.0
        return next_state, reward, self._terminal

    def episode_success(self) -> float:
        return 1.0 if self._caught else 0.0
