"""Falling fruit: a body slides horizontally, an arm offsets the basket.

Flat actions are (body_action, arm_action) pairs, each from
{left, no-op, right}.  The basket column is clamp(body + arm_offset) and the
arm offset is bounded by +-K.  The fruit falls one row per step; +1 when it
lands in the basket, -1 when it lands anywhere else (mirroring Catch; only
the +1 case is intrinsic to the task).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..mdp import FlatEnvironment
from ..seeding import rand_below

_MOVES = ["left", "no-op", "right"]
_SHIFT = {"left": -1, "no-op": 0, "right": 1}
FALLINGFRUIT_ACTIONS = list(itertools.product(_MOVES, _MOVES))


@dataclass(frozen=True)
class FallingFruitState:
    body: int
    arm_offset: int
    fruit: tuple[int, int]     # (column, row)

    def basket(self, width: int) -> int:
        return min(max(self.body + self.arm_offset, 0), width - 1)


class FallingFruitEnv(FlatEnvironment):
    action_set = list(FALLINGFRUIT_ACTIONS)

    def __init__(self, width: int = 10, height: int = 10, arm_range: int = 2,
                 rng: np.random.Generator | None = None):
        self.width = width
        self.height = height
        self.arm_range = arm_range
        self.rng = rng if rng is not None else np.random.default_rng()
        self._state: FallingFruitState | None = None
        self._terminal = True
        self._caught = False

    @property
    def state_space_size(self) -> int:
        return self.width * (2 * self.arm_range + 1) * self.width * self.height

    @property
    def current_state(self) -> FallingFruitState:
        if self._state is None:
            raise RuntimeError("environment not reset yet")
        return self._state

    @property
    def terminal(self) -> bool:
        return self._terminal

    def reset(self, seed: int | None = None) -> FallingFruitState:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        col = rand_below(self.rng, self.width)
        self._state = FallingFruitState(body=self.width // 2, arm_offset=0, fruit=(col, 0))
        self._terminal = False
        self._caught = False
        return self._state

    def set_state(self, state: FallingFruitState) -> None:
        self._state = state
        self._terminal = state.fruit[1] >= self.height - 1

    def step(self, action) -> tuple[FallingFruitState, float, bool]:
        self._check_not_terminal()
        body_act, arm_act = self.action_set[self.action_index(action)]
        state = self.current_state
        body = min(max(state.body + _SHIFT[body_act], 0), self.width - 1)
        arm = min(max(state.arm_offset + _SHIFT[arm_act], -self.arm_range), self.arm_range)
        col, row = state.fruit
        row += 1
        next_state = FallingFruitState(body=body, arm_offset=arm, fruit=(col, row))
        self._state = next_state
        self._terminal = row == self.height - 1
        reward = 0.0
        if self._terminal:
            self._caught = next_state.basket(self.width) == col
            reward = 1.0 if self._caught else -1.0
        return next_state, reward, self._terminal

    def episode_success(self) -> float:
        return 1.0 if self._caught else 0.0
