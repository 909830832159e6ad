from .catch import CATCH_ACTIONS, CatchEnv, CatchState
from .fallingfruit import FALLINGFRUIT_ACTIONS, FallingFruitEnv, FallingFruitState
from .fruitgrid import FRUITGRID_ACTIONS, FruitGridEnv, FruitGridState
from .maze import MOVES, Maze, default_maze, load_maze, parse_maze
from .pacboy import PacBoyEnv, PacBoyState, fruit_eaten_at, ghost_contacts

__all__ = [
    "CATCH_ACTIONS", "CatchEnv", "CatchState",
    "FALLINGFRUIT_ACTIONS", "FallingFruitEnv", "FallingFruitState",
    "FRUITGRID_ACTIONS", "FruitGridEnv", "FruitGridState",
    "MOVES", "Maze", "default_maze", "load_maze", "parse_maze",
    "PacBoyEnv", "PacBoyState", "fruit_eaten_at", "ghost_contacts",
]
