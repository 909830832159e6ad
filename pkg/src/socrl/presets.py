"""Builders for the shipped decompositions.

Each builder constructs the environment, the agents with their projections
and local rewards, the aggregator, and the per-component random streams for
one experiment seed.  Systems that a compiled kernel can run carry a
``kernel_hint`` plus the arrays the kernel needs.
"""

from __future__ import annotations

import numpy as np

from .depgraph import DependencyGraph
from .envs.catch import CATCH_ACTIONS, CatchEnv
from .envs.fallingfruit import FALLINGFRUIT_ACTIONS, FallingFruitEnv
from .envs.fruitgrid import FruitGridEnv
from .envs.maze import MOVES, Maze, default_maze
from .envs.pacboy import PacBoyEnv, fruit_eaten_at, ghost_contacts
from .learn import (EpsilonSchedule, LinearQ, LinearQLearner, QTable,
                    QTableLearner, pacboy_feature_count, pacboy_feature_extract)
from .seeding import AGENT_STREAM_BASE, ENV_STREAM, POLICY_STREAM, component_rng
from .soc import (COMM_NONE, AgentSpec, CompositeAggregator, EnsembleAggregator,
                  SocSystem, StepContext, compose_high_level_reward,
                  compose_low_level_reward)

# Appendix-table defaults for the Pac-Boy decomposition.
PACBOY_SOC_GAMMA = 0.4
PACBOY_FRUIT_ALPHA = 1.0
PACBOY_GHOST_ALPHA = 0.1
PACBOY_SOC_EPSILON = EpsilonSchedule(0.1, 0.1, 0)
# ... and for the linear flat baseline.
LINEAR_GAMMA = 0.9
LINEAR_ALPHA = 0.005
LINEAR_EPSILON = EpsilonSchedule(1.0, 0.0, 150_000)
# Tabular Catch defaults; the discounts realize the large/small horizon split.
CATCH_HIGH_GAMMA = 0.99
CATCH_LOW_GAMMA = 0.65
CATCH_ALPHA = 0.1
CATCH_EPSILON = EpsilonSchedule(1.0, 0.01, 10_000)
CATCH_WINDOW = 7   # the low agent sees a (2*7+1)^2 box around the paddle


# ---------------------------------------------------------------------------
# Pac-Boy, ensemble of per-fruit and per-ghost agents with Q-sum

def build_pacboy_qsum(seed: int, maze: Maze | None = None,
                      fruit_gamma: float = PACBOY_SOC_GAMMA,
                      fruit_alpha: float = PACBOY_FRUIT_ALPHA,
                      ghost_gamma: float = PACBOY_SOC_GAMMA,
                      ghost_alpha: float = PACBOY_GHOST_ALPHA,
                      epsilon: EpsilonSchedule = PACBOY_SOC_EPSILON,
                      share_ghost_table: bool = True) -> SocSystem:
    maze = maze if maze is not None else default_maze()
    env = PacBoyEnv(maze, rng=component_rng(seed, ENV_STREAM))
    n_cells = maze.n_cells
    n_slots = env.n_fruit_slots
    n_ghosts = len(maze.ghost_starts)
    flat_actions = tuple(MOVES)

    fruit_block = np.zeros((n_slots, n_cells, len(MOVES)))
    agents = []
    for f in range(n_slots):
        agents.append(AgentSpec(
            id=f"fruit_{f:02d}",
            projection=_pac_position_projection,
            learner=QTableLearner(
                QTable(n_cells, len(MOVES), values=fruit_block[f]),
                fruit_gamma, fruit_alpha),
            env_actions=flat_actions,
            local_reward=_fruit_reward(f),
            local_terminal=_fruit_terminal(f),
            active=_fruit_active(f),
            group="fruits",
        ))

    ghost_tables = [QTable(n_cells * n_cells, len(MOVES))]
    if not share_ghost_table:
        ghost_tables = [QTable(n_cells * n_cells, len(MOVES)) for _ in range(n_ghosts)]
    for k in range(n_ghosts):
        table = ghost_tables[0] if share_ghost_table else ghost_tables[k]
        agents.append(AgentSpec(
            id=f"ghost_{k}",
            projection=_ghost_projection(k, n_cells),
            learner=QTableLearner(table, ghost_gamma, ghost_alpha),
            env_actions=flat_actions,
            local_reward=_ghost_reward(k),
            group="ghosts",
        ))

    system = SocSystem(env, agents, EnsembleAggregator("q_sum"), "ensemble",
                       epsilon_schedule=epsilon,
                       policy_rng=component_rng(seed, POLICY_STREAM))
    system.dependencies = DependencyGraph(tuple(a.id for a in agents))
    if share_ghost_table and n_ghosts == 2:
        system.kernel_hint = "pacboy_qsum"
        arrays = maze.arrays()
        system.kernel_ctx = {
            "fruit_q": fruit_block,
            "ghost_q": ghost_tables[0].values,
            "move_to": arrays["move_to"],
            "nbrs": arrays["nbrs"],
            "deg": arrays["deg"],
            "fruit_at": arrays["fruit_at"],
            "ghost_starts": np.asarray(maze.ghost_starts, dtype=np.int64),
            "fruit_gamma": fruit_gamma,
            "fruit_alpha": fruit_alpha,
            "ghost_gamma": ghost_gamma,
            "ghost_alpha": ghost_alpha,
            "fruit_ids": {a.id for a in agents if a.group == "fruits"},
            "ghost_ids": {a.id for a in agents if a.group == "ghosts"},
        }
    return system


def _pac_position_projection(joint) -> int:
    return joint.flat_state.pacboy


def _ghost_projection(k: int, n_cells: int):
    def projection(joint) -> int:
        state = joint.flat_state
        return state.pacboy * n_cells + state.ghosts[k]
    return projection


def _fruit_reward(f: int):
    def reward(ctx: StepContext) -> float:
        return 1.0 if fruit_eaten_at(ctx.state, ctx.next_state, f) else 0.0
    return reward


def _fruit_terminal(f: int):
    def terminal(ctx: StepContext) -> bool:
        return ctx.terminal or fruit_eaten_at(ctx.state, ctx.next_state, f)
    return terminal


def _fruit_active(f: int):
    def active(joint) -> bool:
        return bool(joint.flat_state.fruit[f])
    return active


def _ghost_reward(k: int):
    def reward(ctx: StepContext) -> float:
        return -10.0 if ghost_contacts(ctx.state, ctx.next_state)[k] else 0.0
    return reward


# ---------------------------------------------------------------------------
# Pac-Boy, flat linear baseline (ensemble of one over the same features)

def build_pacboy_linear(seed: int, maze: Maze | None = None,
                        gamma: float = LINEAR_GAMMA,
                        alpha: float = LINEAR_ALPHA,
                        epsilon: EpsilonSchedule = LINEAR_EPSILON) -> SocSystem:
    maze = maze if maze is not None else default_maze()
    env = PacBoyEnv(maze, rng=component_rng(seed, ENV_STREAM))
    n_cells = maze.n_cells
    n_slots = env.n_fruit_slots
    n_ghosts = len(maze.ghost_starts)
    model = LinearQ(
        pacboy_feature_count(n_cells, n_slots, n_ghosts), len(MOVES),
        extractor=lambda state: pacboy_feature_extract(state, n_cells, n_slots),
    )
    agent = AgentSpec(
        id="flat",
        projection=lambda joint: joint.flat_state,
        learner=LinearQLearner(model, gamma, alpha),
        env_actions=tuple(MOVES),
        group="flat",
    )
    system = SocSystem(env, [agent], EnsembleAggregator("q_sum"), "ensemble",
                       epsilon_schedule=epsilon,
                       policy_rng=component_rng(seed, POLICY_STREAM))
    system.dependencies = DependencyGraph(("flat",))
    return system


# ---------------------------------------------------------------------------
# Catch, high-level requester + low-level executor

def catch_low_state(ball_col: int, ball_row: int, paddle: int, comm_idx: int,
                    n: int, window: int = CATCH_WINDOW) -> int:
    """Local state of the low agent: ball relative to the paddle inside a
    bounded box, a single blind state outside it, times the observed comm.

    comm_idx: 0 none, then 1 + index into CATCH_ACTIONS.
    """
    span = 2 * window + 1
    cells = span * (window + 1) + 1
    dx = ball_col - paddle
    dy = (n - 1) - ball_row
    if abs(dx) <= window and dy <= window:
        cell = dy * span + (dx + window)
    else:
        cell = cells - 1
    return comm_idx * cells + cell


def catch_low_state_count(window: int = CATCH_WINDOW) -> int:
    span = 2 * window + 1
    return 4 * (span * (window + 1) + 1)


def _comm_index(comm) -> int:
    return 0 if comm == COMM_NONE else 1 + CATCH_ACTIONS.index(comm)


def build_catch_pair(seed: int, n: int = 24,
                     comm_bonus: float = 0.1, comm_penalty: float = 0.0,
                     act_interval: int = 2,
                     inert_noop_comm: bool = False,
                     high_gamma: float = CATCH_HIGH_GAMMA,
                     low_gamma: float = CATCH_LOW_GAMMA,
                     alpha: float = CATCH_ALPHA,
                     epsilon: EpsilonSchedule = CATCH_EPSILON,
                     window: int = CATCH_WINDOW) -> SocSystem:
    """The Catch decomposition: the high agent sees the whole screen and only
    communicates a desired action; the low agent controls the paddle, sees a
    bounded box around it, and is paid `comm_bonus` for complying.

    With `inert_noop_comm` the no-op comm action is a plain no-request token:
    it never earns the low agent a bonus (and never costs the penalty), which
    is the configuration the communication-penalty experiment uses.
    """
    env = CatchEnv(n, rng=component_rng(seed, ENV_STREAM))
    comm_actions = tuple(CATCH_ACTIONS)

    def high_projection(joint) -> int:
        state = joint.flat_state
        return (state.ball[0] * n + state.ball[1]) * n + state.paddle

    def high_reward(ctx: StepContext) -> float:
        return compose_high_level_reward(ctx.reward, ctx.agent_action[1], comm_penalty)

    def low_projection(joint) -> int:
        state = joint.flat_state
        comm = joint.last_comm["high"]
        return catch_low_state(state.ball[0], state.ball[1], state.paddle,
                               _comm_index(comm), n, window)

    def low_reward(ctx: StepContext) -> float:
        requested = ctx.observed_comm["high"]
        if requested == COMM_NONE or (inert_noop_comm and requested == "no-op"):
            return ctx.reward
        return compose_low_level_reward(ctx.reward, ctx.agent_action[0],
                                        requested, comm_bonus)

    high = AgentSpec(
        id="high",
        projection=high_projection,
        learner=QTableLearner(QTable(n * n * n, len(comm_actions)), high_gamma, alpha),
        comm_actions=comm_actions,
        local_reward=high_reward,
        act_interval=act_interval,
        group="high",
    )
    low = AgentSpec(
        id="low",
        projection=low_projection,
        learner=QTableLearner(QTable(catch_low_state_count(window), len(CATCH_ACTIONS)),
                              low_gamma, alpha),
        env_actions=tuple(CATCH_ACTIONS),
        local_reward=low_reward,
        group="low",
    )
    aggregator = CompositeAggregator(order=("low",),
                                     mapping={(a,): a for a in CATCH_ACTIONS})
    high_rng = component_rng(seed, AGENT_STREAM_BASE)
    low_rng = component_rng(seed, AGENT_STREAM_BASE + 1)
    system = SocSystem(env, [high, low], aggregator, "composite",
                       epsilon_schedule=epsilon,
                       policy_rng=component_rng(seed, POLICY_STREAM),
                       agent_rngs={"high": high_rng, "low": low_rng})
    system.dependencies = DependencyGraph(("high", "low"),
                                          {("high", "low"), ("low", "high")})
    system.kernel_hint = "catch_pair"
    system.kernel_ctx = {
        "high_q": high.learner.table.values,
        "low_q": low.learner.table.values,
        "act_interval": act_interval,
        "window": window,
        "bonus": comm_bonus,
        "penalty": comm_penalty,
        "inert_noop_comm": inert_noop_comm,
        "high_gamma": high_gamma,
        "high_alpha": alpha,
        "low_gamma": low_gamma,
        "low_alpha": alpha,
        "high_rng": high_rng,
        "low_rng": low_rng,
    }
    return system


# ---------------------------------------------------------------------------
# Fruit grid, independent horizontal/vertical split (single fruit)

def build_fruitgrid_split(seed: int, size: int = 10,
                          gamma: float = 0.9, alpha: float = 0.5,
                          epsilon: EpsilonSchedule = EpsilonSchedule.constant(1.0),
                          max_episode_steps: int = 100) -> SocSystem:
    env = FruitGridEnv(size=size, n_fruits=1,
                       rng=component_rng(seed, ENV_STREAM),
                       max_episode_steps=max_episode_steps)
    horizontal_actions = ("west", "no-op", "east")
    vertical_actions = ("north", "no-op", "south")
    dx = {"west": -1, "no-op": 0, "east": 1}
    dy = {"north": 1, "no-op": 0, "south": -1}
    name_by_delta = {
        (0, 1): "north", (1, 1): "north-east", (1, 0): "east",
        (1, -1): "south-east", (0, -1): "south", (-1, -1): "south-west",
        (-1, 0): "west", (-1, 1): "north-west", (0, 0): "no-op",
    }
    mapping = {
        (h, v): name_by_delta[(dx[h], dy[v])]
        for h in horizontal_actions for v in vertical_actions
    }

    def axis_projection(axis: int):
        def projection(joint) -> int:
            state = joint.flat_state
            if not state.fruits:
                return 0
            fruit = next(iter(state.fruits))
            return state.agent[axis] * size + fruit[axis]
        return projection

    def axis_reward(axis: int):
        def reward(ctx: StepContext) -> float:
            fruit = next(iter(ctx.state.fruits))
            return 1.0 if ctx.next_state.agent[axis] == fruit[axis] else 0.0
        return reward

    horizontal = AgentSpec(
        id="horizontal",
        projection=axis_projection(0),
        learner=QTableLearner(QTable(size * size, 3), gamma, alpha),
        env_actions=horizontal_actions,
        local_reward=axis_reward(0),
        group="horizontal",
    )
    vertical = AgentSpec(
        id="vertical",
        projection=axis_projection(1),
        learner=QTableLearner(QTable(size * size, 3), gamma, alpha),
        env_actions=vertical_actions,
        local_reward=axis_reward(1),
        group="vertical",
    )
    aggregator = CompositeAggregator(order=("horizontal", "vertical"), mapping=mapping)
    system = SocSystem(env, [horizontal, vertical], aggregator, "composite",
                       epsilon_schedule=epsilon,
                       policy_rng=component_rng(seed, POLICY_STREAM),
                       agent_rngs={
                           "horizontal": component_rng(seed, AGENT_STREAM_BASE),
                           "vertical": component_rng(seed, AGENT_STREAM_BASE + 1),
                       })
    system.dependencies = DependencyGraph(("horizontal", "vertical"))
    return system


# ---------------------------------------------------------------------------
# Falling fruit, acyclic body -> arm pair

def build_fallingfruit_pair(seed: int, width: int = 10, height: int = 10,
                            arm_range: int = 2,
                            gamma: float = 0.9, alpha: float = 0.3,
                            epsilon: EpsilonSchedule = EpsilonSchedule(1.0, 0.05, 20_000)) -> SocSystem:
    env = FallingFruitEnv(width, height, arm_range,
                          rng=component_rng(seed, ENV_STREAM))
    moves = ("left", "no-op", "right")
    arm_span = 2 * arm_range + 1

    def body_projection(joint) -> int:
        s = joint.flat_state
        return (s.fruit[0] * height + s.fruit[1]) * width + s.body

    def body_reward(ctx: StepContext) -> float:
        return 1.0 if ctx.next_state.body == ctx.next_state.fruit[0] else 0.0

    def arm_projection(joint) -> int:
        s = joint.flat_state
        return (((s.fruit[0] * height + s.fruit[1]) * width + s.body) * arm_span
                + s.arm_offset + arm_range)

    body = AgentSpec(
        id="body",
        projection=body_projection,
        learner=QTableLearner(QTable(width * height * width, 3), gamma, alpha),
        env_actions=moves,
        local_reward=body_reward,
        group="body",
    )
    arm = AgentSpec(
        id="arm",
        projection=arm_projection,
        learner=QTableLearner(QTable(width * height * width * arm_span, 3), gamma, alpha),
        env_actions=moves,
        group="arm",
    )
    aggregator = CompositeAggregator(
        order=("body", "arm"),
        mapping={(b, a): (b, a) for b in moves for a in moves},
    )
    system = SocSystem(env, [body, arm], aggregator, "composite",
                       epsilon_schedule=epsilon,
                       policy_rng=component_rng(seed, POLICY_STREAM),
                       agent_rngs={
                           "body": component_rng(seed, AGENT_STREAM_BASE),
                           "arm": component_rng(seed, AGENT_STREAM_BASE + 1),
                       })
    system.dependencies = DependencyGraph(("body", "arm"), {("body", "arm")})
    return system
