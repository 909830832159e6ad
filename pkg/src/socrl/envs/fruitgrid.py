"""Fruit collection on an open grid: 8 compass moves plus no-op.

The flat reward is +1 once the last fruit is collected and 0 otherwise.
Walking over a fruit removes it.  Moves clamp at the borders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import FlatEnvironment
from ..seeding import rand_below

FRUITGRID_ACTIONS = [
    "north", "north-east", "east", "south-east",
    "south", "south-west", "west", "north-west", "no-op",
]
# (dx, dy) with x growing east and y growing north.
_DELTAS = {
    "north": (0, 1), "north-east": (1, 1), "east": (1, 0), "south-east": (1, -1),
    "south": (0, -1), "south-west": (-1, -1), "west": (-1, 0), "north-west": (-1, 1),
    "no-op": (0, 0),
}


@dataclass(frozen=True)
class FruitGridState:
    agent: tuple[int, int]
    fruits: frozenset[tuple[int, int]]


class FruitGridEnv(FlatEnvironment):
    action_set = list(FRUITGRID_ACTIONS)

    def __init__(self, size: int = 10, n_fruits: int = 1,
                 rng: np.random.Generator | None = None,
                 max_episode_steps: int = 0):
        if n_fruits < 1 or n_fruits >= size * size:
            raise ValueError("n_fruits must be in [1, size^2)")
        self.size = size
        self.n_fruits = n_fruits
        self.rng = rng if rng is not None else np.random.default_rng()
        # 0 disables the step cap; training configs set one so episodes under
        # an unconverged policy still end.
        self.max_episode_steps = max_episode_steps
        self._state: FruitGridState | None = None
        self._terminal = True
        self._steps = 0
        self._spawned = 0

    @property
    def state_space_size(self) -> int:
        cells = self.size * self.size
        return cells * cells ** self.n_fruits

    @property
    def current_state(self) -> FruitGridState:
        if self._state is None:
            raise RuntimeError("environment not reset yet")
        return self._state

    @property
    def terminal(self) -> bool:
        return self._terminal

    def reset(self, seed: int | None = None) -> FruitGridState:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        cells = self.size * self.size
        agent_cell = rand_below(self.rng, cells)
        agent = (agent_cell % self.size, agent_cell // self.size)
        pool = [
            (x, y) for y in range(self.size) for x in range(self.size)
            if (x, y) != agent
        ]
        fruits = set()
        for _ in range(self.n_fruits):
            fruits.add(pool.pop(rand_below(self.rng, len(pool))))
        self._state = FruitGridState(agent=agent, fruits=frozenset(fruits))
        self._steps = 0
        self._spawned = len(fruits)
        self._terminal = False
        return self._state

    def set_state(self, state: FruitGridState) -> None:
        self._state = state
        self._steps = 0
        self._spawned = max(self._spawned, len(state.fruits))
        self._terminal = not state.fruits

    def step(self, action) -> tuple[FruitGridState, float, bool]:
        self._check_not_terminal()
        name = FRUITGRID_ACTIONS[self.action_index(action)]
        dx, dy = _DELTAS[name]
        state = self.current_state
        x = min(max(state.agent[0] + dx, 0), self.size - 1)
        y = min(max(state.agent[1] + dy, 0), self.size - 1)
        fruits = state.fruits - {(x, y)}
        next_state = FruitGridState(agent=(x, y), fruits=fruits)
        self._state = next_state
        self._steps += 1
        reward = 1.0 if not fruits else 0.0
        self._terminal = not fruits or (
            self.max_episode_steps > 0 and self._steps >= self.max_episode_steps
        )
        return next_state, reward, self._terminal

    def episode_success(self) -> float:
        if self._spawned == 0:
            return 1.0
        return (self._spawned - len(self.current_state.fruits)) / self._spawned
