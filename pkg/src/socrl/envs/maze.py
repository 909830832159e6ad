"""Maze grids for the Pac-Boy environment.

File format: line 1 is ``expect <walkable-count>``, the rest is the grid with
``#`` wall, ``.`` walkable, ``P`` the Pac-Boy start, ``G`` a ghost start.
Fruit slots are the walkable cells except ``P``, indexed in row-major order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

GLYPHS = {"#", ".", "P", "G"}
MOVES = ("N", "S", "E", "W")
_DELTAS = {"N": (-1, 0), "S": (1, 0), "E": (0, 1), "W": (0, -1)}


@dataclass
class Maze:
    width: int
    height: int
    walkable: list[tuple[int, int]]           # row-major (row, col) cells
    pacboy_start: int                         # walkable-cell index
    ghost_starts: tuple[int, ...]             # walkable-cell indices
    cell_index: dict[tuple[int, int], int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.cell_index:
            self.cell_index = {rc: i for i, rc in enumerate(self.walkable)}

    @property
    def n_cells(self) -> int:
        return len(self.walkable)

    @property
    def fruit_cells(self) -> list[int]:
        """Walkable-cell indices that can hold a fruit (all but the P start)."""
        return [i for i in range(self.n_cells) if i != self.pacboy_start]

    def neighbors(self, cell: int) -> list[int]:
        r, c = self.walkable[cell]
        out = []
        for dr, dc in _DELTAS.values():
            j = self.cell_index.get((r + dr, c + dc))
            if j is not None:
                out.append(j)
        return out

    def move(self, cell: int, action: str) -> int:
        """Destination of a move; blocked moves stay in place."""
        r, c = self.walkable[cell]
        dr, dc = _DELTAS[action]
        return self.cell_index.get((r + dr, c + dc), cell)

    def arrays(self) -> dict[str, np.ndarray]:
        """Dense adjacency arrays consumed by the engines.

        move_to[s, a] is the post-move cell for action MOVES[a];
        nbrs[s, :deg[s]] lists adjacent walkable cells in N,S,E,W order.
        """
        n = self.n_cells
        move_to = np.empty((n, 4), dtype=np.int64)
        nbrs = np.full((n, 4), -1, dtype=np.int64)
        deg = np.zeros(n, dtype=np.int64)
        fruit_at = np.full(n, -1, dtype=np.int64)
        for f, cell in enumerate(self.fruit_cells):
            fruit_at[cell] = f
        for s in range(n):
            for a, act in enumerate(MOVES):
                move_to[s, a] = self.move(s, act)
            for j in self.neighbors(s):
                nbrs[s, deg[s]] = j
                deg[s] += 1
        return {"move_to": move_to, "nbrs": nbrs, "deg": deg, "fruit_at": fruit_at}


def parse_maze(text: str) -> Maze:
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("expect "):
        raise ValueError("maze file must start with an 'expect <count>' header")
    expected = int(lines[0].split()[1])
    rows = lines[1:]
    if not rows:
        raise ValueError("maze file has no grid rows")
    width = len(rows[0])
    walkable: list[tuple[int, int]] = []
    pac: tuple[int, int] | None = None
    ghosts: list[tuple[int, int]] = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {r} has length {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch not in GLYPHS:
                raise ValueError(f"bad glyph {ch!r} at row {r}, col {c}")
            if ch == "#":
                continue
            walkable.append((r, c))
            if ch == "P":
                if pac is not None:
                    raise ValueError("more than one Pac-Boy start")
                pac = (r, c)
            elif ch == "G":
                ghosts.append((r, c))
    if len(walkable) != expected:
        raise ValueError(
            f"walkable-cell count {len(walkable)} does not match header expect {expected}"
        )
    if pac is None:
        raise ValueError("maze has no Pac-Boy start 'P'")
    if not ghosts:
        raise ValueError("maze has no ghost start 'G'")
    # Walkable cells must form a single connected component.
    wset = set(walkable)
    seen = {walkable[0]}
    queue = deque([walkable[0]])
    while queue:
        r, c = queue.popleft()
        for dr, dc in _DELTAS.values():
            nxt = (r + dr, c + dc)
            if nxt in wset and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    if len(seen) != len(walkable):
        raise ValueError("walkable cells are not connected")
    index = {rc: i for i, rc in enumerate(walkable)}
    return Maze(
        width=width,
        height=len(rows),
        walkable=walkable,
        pacboy_start=index[pac],
        ghost_starts=tuple(index[g] for g in ghosts),
        cell_index=index,
    )


def load_maze(path) -> Maze:
    with open(path) as fh:
        return parse_maze(fh.read())


def default_maze() -> Maze:
    """The canonical shipped maze: 76 walkable cells, two corner ghosts."""
    text = resources.files("socrl.envs").joinpath("data/pacboy_maze.txt").read_text()
    return parse_maze(text)
