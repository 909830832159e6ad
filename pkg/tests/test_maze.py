import numpy as np
import pytest

from socrl.envs.maze import default_maze, parse_maze

SMALL = """\
expect 8
#####
#G.P#
#.#.#
#...#
#####
"""


def test_default_maze_has_76_walkable_cells():
    maze = default_maze()
    assert maze.n_cells == 76
    assert len(maze.fruit_cells) == 75
    assert len(maze.ghost_starts) == 2
    assert maze.pacboy_start not in maze.fruit_cells


def test_default_maze_starts_are_walkable():
    maze = default_maze()
    assert 0 <= maze.pacboy_start < maze.n_cells
    assert all(0 <= g < maze.n_cells for g in maze.ghost_starts)


def test_small_maze_parses():
    maze = parse_maze(SMALL)
    assert maze.n_cells == 8
    assert len(maze.fruit_cells) == 7


def test_move_blocked_by_wall_stays():
    maze = parse_maze(SMALL)
    # the P cell at (1, 3) has a wall to its east
    p = maze.pacboy_start
    assert maze.move(p, "E") == p
    assert maze.move(p, "S") != p


def test_neighbors_consistent_with_moves():
    maze = default_maze()
    for cell in range(maze.n_cells):
        nbrs = maze.neighbors(cell)
        assert 1 <= len(nbrs) <= 4
        moved = {maze.move(cell, a) for a in "NSEW"} - {cell}
        assert moved == set(nbrs)


def test_arrays_match_object_model():
    maze = default_maze()
    arrays = maze.arrays()
    assert arrays["move_to"].shape == (76, 4)
    for cell in range(maze.n_cells):
        assert arrays["deg"][cell] == len(maze.neighbors(cell))
        assert sorted(arrays["nbrs"][cell, :arrays["deg"][cell]]) == sorted(maze.neighbors(cell))
    fruit_at = arrays["fruit_at"]
    assert (fruit_at >= 0).sum() == 75
    assert fruit_at[maze.pacboy_start] == -1
    assert sorted(fruit_at[fruit_at >= 0]) == list(range(75))


def test_disconnected_maze_rejected():
    text = "expect 3\n#####\n#P#G#\n##.##\n#####\n"
    with pytest.raises(ValueError, match="not connected"):
        parse_maze(text)


def test_count_mismatch_rejected():
    with pytest.raises(ValueError, match="does not match header"):
        parse_maze(SMALL.replace("expect 8", "expect 9"))


def test_bad_glyph_rejected():
    with pytest.raises(ValueError, match="bad glyph"):
        parse_maze(SMALL.replace(".", "x", 1))


def test_missing_header_rejected():
    with pytest.raises(ValueError, match="expect"):
        parse_maze("#####\n#P.G#\n#####\n")


def test_missing_pacboy_rejected():
    with pytest.raises(ValueError, match="no Pac-Boy start"):
        parse_maze(SMALL.replace("P", "."))


def test_duplicate_pacboy_rejected():
    with pytest.raises(ValueError, match="more than one"):
        parse_maze("expect 8\n#####\n#G.P#\n#.#.#\n#..P#\n#####\n".replace("expect 8", "expect 8"))
