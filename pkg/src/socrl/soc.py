"""The multi-agent decomposition itself.

A system splits one flat task across agents that each see a projection of the
joint space (flat state x everyone's previous communication actions), earn
their own local rewards with their own discounts, and feed an aggregator:

* composite mode: every agent picks its own (environment, communication)
  action pair; a declared bijection composes the environment components into
  one flat action.
* ensemble mode: every agent scores the full flat action set from its own
  table; the aggregator combines the scores (Q-sum or a voting rule) and
  picks one flat action epsilon-greedily.  All agents then train off-policy
  on that flat action.

Communication is delayed by one step: actions emitted at step t are visible
in observations from step t+1 on.  At t=0 every channel holds COMM_NONE.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .learn import EpsilonSchedule, epsilon_greedy
from .mdp import FlatEnvironment
from .seeding import rand_below

COMM_NONE = "none"
ENSEMBLE_VARIANTS = ("q_sum", "majority_vote", "rank_vote", "power_mean")


@dataclass(frozen=True)
class JointState:
    """Flat state plus the previous step's communication actions."""

    flat_state: Any
    last_comm: Mapping[str, Any]


@dataclass(frozen=True)
class StepContext:
    """Everything an agent's local reward/terminal predicate may look at."""

    state: Any
    action: Any                      # flat action applied to the environment
    next_state: Any
    reward: float                    # flat reward
    terminal: bool
    observed_comm: Mapping[str, Any]  # comm visible this step (emitted at t-1)
    agent_action: tuple              # this agent's (env_action, comm_action)


def flat_reward_only(ctx: StepContext) -> float:
    return ctx.reward


def env_terminal_only(ctx: StepContext) -> bool:
    return ctx.terminal


def always_active(joint: JointState) -> bool:
    return True


@dataclass(eq=False)
class AgentSpec:
    """One agent of the decomposition.

    ``projection`` maps a JointState to the agent's local state; for tabular
    learners that is an index below the learner's state count.  Exactly the
    environment-action components drive the flat environment; communication
    components only reach other agents' observations (one step later).
    ``act_interval`` > 1 makes the agent re-decide every so many steps and
    hold its previous action in between.
    """

    id: str
    projection: Callable[[JointState], Any]
    learner: Any
    env_actions: tuple = ()
    comm_actions: tuple = ()
    local_reward: Callable[[StepContext], float] = flat_reward_only
    local_terminal: Callable[[StepContext], bool] = env_terminal_only
    active: Callable[[JointState], bool] = always_active
    act_interval: int = 1
    group: str = ""
    actions: list = field(init=False)

    def __post_init__(self) -> None:
        if not self.env_actions and not self.comm_actions:
            raise ValueError(f"agent {self.id}: env_actions and comm_actions both empty")
        if self.act_interval < 1:
            raise ValueError(f"agent {self.id}: act_interval must be >= 1")
        env = list(self.env_actions) if self.env_actions else [None]
        comm = list(self.comm_actions) if self.comm_actions else [None]
        self.actions = list(itertools.product(env, comm))

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def decode(self, idx: int) -> tuple:
        return self.actions[idx]


def project(agent: AgentSpec, joint: JointState) -> Any:
    """Apply an agent's state projection, range-checking tabular indices."""
    local = agent.projection(joint)
    table = getattr(agent.learner, "table", None)
    if table is not None and not 0 <= local < table.n_states:
        raise ValueError(
            f"agent {agent.id}: projection yielded {local}, outside "
            f"[0, {table.n_states})"
        )
    return local


# ---------------------------------------------------------------------------
# Aggregation

def aggregate_composite(mapping: Mapping[tuple, Any], env_actions: Sequence) -> Any:
    """Look up the declared bijection from per-agent env actions to A_flat."""
    key = tuple(env_actions)
    try:
        return mapping[key]
    except KeyError:
        raise ValueError(f"no flat action declared for env-action tuple {key}") from None


def aggregate_qsum(per_agent_qvalues: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise sum, accumulated in agent order.

    numpy's axis-0 reduction adds rows sequentially, which keeps the result
    bit-identical to the compiled engine's explicit accumulation loop.
    """
    rows = _stack(per_agent_qvalues)
    return rows.sum(axis=0)


def aggregate_vote(per_agent_qvalues: Sequence[np.ndarray], variant: str,
                   p: float | None = None) -> np.ndarray:
    """Score the flat actions by majority vote, rank vote, or power mean."""
    rows = _stack(per_agent_qvalues)
    n_agents, n_actions = rows.shape
    if variant == "majority_vote":
        scores = np.zeros(n_actions)
        for row in rows:
            scores[int(np.argmax(row))] += 1.0
        return scores
    if variant == "rank_vote":
        scores = np.zeros(n_actions)
        for row in rows:
            # rank 0 = best action; score contribution |A| - rank
            order = np.argsort(-row, kind="stable")
            for rank, a in enumerate(order):
                scores[a] += n_actions - rank
        return scores
    if variant == "power_mean":
        if p is None or p == 0:
            raise ValueError("power_mean requires a nonzero exponent p")
        if p != int(p) and (rows < 0).any():
            raise ValueError("power_mean with fractional p requires nonnegative Q-values")
        return (np.mean(rows ** p, axis=0)) ** (1.0 / p)
    raise ValueError(f"unknown vote variant {variant!r}")


def _stack(per_agent_qvalues: Sequence[np.ndarray]) -> np.ndarray:
    if not per_agent_qvalues:
        raise ValueError("no agent value vectors to aggregate")
    rows = [np.asarray(v, dtype=np.float64) for v in per_agent_qvalues]
    width = rows[0].shape[0]
    for r in rows:
        if r.shape != (width,):
            raise ValueError("per-agent value vectors must all have the same length")
    return np.stack(rows)


@dataclass
class EnsembleAggregator:
    variant: str = "q_sum"
    p: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in ENSEMBLE_VARIANTS:
            raise ValueError(f"unknown ensemble variant {self.variant!r}")

    def combine(self, rows: Sequence[np.ndarray], n_actions: int) -> np.ndarray:
        if not rows:
            return np.zeros(n_actions)
        if self.variant == "q_sum":
            return aggregate_qsum(rows)
        return aggregate_vote(rows, self.variant, self.p)


@dataclass
class CompositeAggregator:
    """Bijection from the product of env-action sets onto the flat set."""

    order: tuple[str, ...]               # agent ids contributing env actions
    mapping: dict[tuple, Any]

    def __call__(self, components: Mapping[str, Any]) -> Any:
        return aggregate_composite(
            self.mapping, [components[aid] for aid in self.order]
        )


# ---------------------------------------------------------------------------
# Reward composition used by the Catch pair

def compose_low_level_reward(flat_reward: float, own_env_action,
                             requested_action, comm_bonus: float) -> float:
    """Flat reward plus a bonus for doing what was asked."""
    if comm_bonus < 0:
        raise ValueError("comm_bonus must be >= 0")
    return flat_reward + comm_bonus * (own_env_action == requested_action)


def compose_high_level_reward(flat_reward: float, comm_action,
                              comm_penalty: float, noop="no-op") -> float:
    """Flat reward minus a penalty for any non-no-op communication."""
    if comm_penalty < 0:
        raise ValueError("comm_penalty must be >= 0")
    return flat_reward - comm_penalty * (comm_action != noop)


# ---------------------------------------------------------------------------
# The system

@dataclass
class AgentStep:
    local_state: Any
    action: Any
    local_reward: float
    next_local_state: Any
    decided: bool
    active: bool


@dataclass
class StepRecord:
    t: int
    state: Any
    flat_action: Any
    reward: float
    next_state: Any
    terminal: bool
    observed_comm: dict
    emitted_comm: dict
    agents: dict[str, AgentStep]


@dataclass
class StepOutcome:
    reward: float
    terminal: bool
    emitted_comm: dict
    record: StepRecord | None


class SocSystem:
    """Agents + aggregator + environment, stepped as one unit.

    Step contract (the compiled engine mirrors it draw for draw):

    1. Agents due to act (episode step divisible by their act_interval)
       project the joint state, which carries the comm actions emitted at the
       previous step, and select with epsilon-greedy (two doubles from their
       own stream in composite mode; the aggregator's stream in ensemble
       mode).  Other agents repeat their held action.
    2. The aggregator produces one flat action; the environment steps.
    3. Each agent's local reward for this step is accumulated into its open
       decision window.
    4. Windows that close this step (next step is a decision step, or the
       episode ended, or the agent's own terminal predicate fired) trigger a
       Q-learning update on (window state, window action, accumulated
       reward, next local state).
    5. The comm channel is overwritten with this step's emissions, visible
       from the next step on.

    In ensemble mode every agent is trained off-policy on the aggregator's
    selected flat action, and act_interval must be 1.
    """

    def __init__(self, env: FlatEnvironment, agents: Sequence[AgentSpec],
                 aggregator, mode: str,
                 epsilon_schedule: EpsilonSchedule | None = None,
                 policy_rng: np.random.Generator | None = None,
                 agent_rngs: Mapping[str, np.random.Generator] | None = None):
        if mode not in ("composite", "ensemble"):
            raise ValueError(f"unknown mode {mode!r}")
        self.env = env
        self.agents = list(agents)
        self.aggregator = aggregator
        self.mode = mode
        self.epsilon_schedule = epsilon_schedule or EpsilonSchedule.constant(0.0)
        self.policy_rng = policy_rng if policy_rng is not None else np.random.default_rng()
        self.agent_rngs = dict(agent_rngs or {})
        self.frozen: set[str] = set()
        self.train_steps = 0
        self.kernel_hint: str | None = None
        self.kernel_ctx: dict = {}

        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate agent ids")
        if mode == "ensemble":
            n_flat = len(env.action_set)
            for a in self.agents:
                if a.act_interval != 1:
                    raise ValueError("ensemble mode requires act_interval == 1")
                if a.comm_actions:
                    raise ValueError("ensemble mode does not support comm actions")
                if tuple(a.env_actions) != tuple(env.action_set):
                    raise ValueError(
                        "ensemble agents must score the full flat action set, "
                        "in the environment's order"
                    )
        else:
            env_ids = [a.id for a in self.agents if a.env_actions]
            if tuple(env_ids) != tuple(self.aggregator.order):
                raise ValueError(
                    "composite aggregator order must list exactly the agents "
                    "with env actions, in declaration order"
                )

        self.joint: JointState | None = None
        self.needs_reset = True
        self._ep_step = 0
        self._held: dict[str, tuple] = {}
        self._window: dict[str, list] = {}

    # -- episode control ----------------------------------------------------

    def comm_ids(self) -> list[str]:
        return [a.id for a in self.agents if a.comm_actions]

    def begin_phase(self) -> None:
        """Discard any partial episode so the next step starts fresh."""
        self.needs_reset = True

    def start_episode(self) -> None:
        # A reset that lands terminal (Pac-Boy drawing zero fruits) is redrawn.
        flat = self.env.reset()
        while self.env.terminal:
            flat = self.env.reset()
        self.joint = JointState(flat, {aid: COMM_NONE for aid in self.comm_ids()})
        self._ep_step = 0
        self._held.clear()
        self._window.clear()
        self.needs_reset = False

    # -- stepping -----------------------------------------------------------

    def step(self, epsilon: float, learning: bool = True,
             behavior: str = "policy", record: bool = False) -> StepOutcome:
        if self.needs_reset or self.joint is None:
            raise RuntimeError("call start_episode() before step()")
        if self.mode == "ensemble":
            return self._step_ensemble(epsilon, learning, behavior, record)
        if behavior != "policy":
            raise ValueError("random behavior is only supported in ensemble mode")
        return self._step_composite(epsilon, learning, record)

    def _step_composite(self, epsilon: float, learning: bool,
                        record: bool) -> StepOutcome:
        joint = self.joint
        observed = dict(joint.last_comm)
        emitted: dict[str, Any] = {}
        components: dict[str, Any] = {}
        chosen: dict[str, tuple[int, tuple]] = {}
        decided: dict[str, bool] = {}

        for agent in self.agents:
            if self._ep_step % agent.act_interval == 0:
                local = project(agent, joint)
                eps = 0.0 if agent.id in self.frozen else epsilon
                rng = self.agent_rngs.get(agent.id, self.policy_rng)
                a_idx = epsilon_greedy(agent.learner.scores(local), eps, rng)
                self._held[agent.id] = (a_idx, agent.decode(a_idx))
                self._window[agent.id] = [local, a_idx, 0.0]
                decided[agent.id] = True
            else:
                a_idx, _ = self._held[agent.id]
                decided[agent.id] = False
            env_act, comm_act = self._held[agent.id][1]
            if agent.comm_actions:
                emitted[agent.id] = comm_act
            if agent.env_actions:
                components[agent.id] = env_act

        flat_action = self.aggregator(components)
        state = joint.flat_state
        next_state, reward, terminal = self.env.step(flat_action)
        joint_next = JointState(next_state, emitted)

        agent_steps: dict[str, AgentStep] = {}
        for agent in self.agents:
            act_pair = self._held[agent.id][1]
            ctx = StepContext(state, flat_action, next_state, reward, terminal,
                              observed, act_pair)
            r_loc = agent.local_reward(ctx)
            window = self._window.get(agent.id)
            if window is not None:
                window[2] += r_loc
                closes = terminal or (self._ep_step + 1) % agent.act_interval == 0
                if closes:
                    s_w, a_w, acc = window
                    term_w = terminal or agent.local_terminal(ctx)
                    next_local = None if term_w else project(agent, joint_next)
                    if learning and agent.id not in self.frozen:
                        self._update(agent, s_w, a_w, acc, next_local, term_w)
                    self._window[agent.id] = None
            if record:
                agent_steps[agent.id] = AgentStep(
                    local_state=project(agent, joint),
                    action=act_pair,
                    local_reward=r_loc,
                    next_local_state=project(agent, joint_next),
                    decided=decided[agent.id],
                    active=True,
                )

        rec = None
        if record:
            rec = StepRecord(self._ep_step, state, flat_action, reward, next_state,
                             terminal, observed, dict(emitted), agent_steps)
        self.joint = joint_next
        self._ep_step += 1
        if terminal:
            self.needs_reset = True
        return StepOutcome(reward, terminal, emitted, rec)

    def _step_ensemble(self, epsilon: float, learning: bool, behavior: str,
                       record: bool) -> StepOutcome:
        joint = self.joint
        n_flat = len(self.env.action_set)
        active_agents = [a for a in self.agents if a.active(joint)]
        active_ids = {a.id for a in active_agents}
        locals_ = {a.id: project(a, joint) for a in active_agents}

        if behavior == "random":
            flat_idx = rand_below(self.policy_rng, n_flat)
        elif behavior == "policy":
            rows = [a.learner.scores(locals_[a.id]) for a in active_agents]
            combined = self.aggregator.combine(rows, n_flat)
            flat_idx = epsilon_greedy(combined, epsilon, self.policy_rng)
        else:
            raise ValueError(f"unknown behavior {behavior!r}")

        flat_action = self.env.action_set[flat_idx]
        state = joint.flat_state
        next_state, reward, terminal = self.env.step(flat_action)
        joint_next = JointState(next_state, {})

        agent_steps: dict[str, AgentStep] = {}
        for agent in self.agents:
            if agent.id not in active_ids:
                if record:
                    agent_steps[agent.id] = AgentStep(None, None, 0.0, None,
                                                      decided=False, active=False)
                continue
            ctx = StepContext(state, flat_action, next_state, reward, terminal,
                              {}, (flat_action, None))
            r_loc = agent.local_reward(ctx)
            term_a = terminal or agent.local_terminal(ctx)
            local = locals_[agent.id]
            next_local = None if term_a else project(agent, joint_next)
            if learning and agent.id not in self.frozen:
                self._update(agent, local, flat_idx, r_loc, next_local, term_a)
            if record:
                agent_steps[agent.id] = AgentStep(local, flat_idx, r_loc,
                                                  next_local, decided=True,
                                                  active=True)

        rec = None
        if record:
            rec = StepRecord(self._ep_step, state, flat_action, reward, next_state,
                             terminal, {}, {}, agent_steps)
        self.joint = joint_next
        self._ep_step += 1
        if terminal:
            self.needs_reset = True
        return StepOutcome(reward, terminal, {}, rec)

    @staticmethod
    def _update(agent: AgentSpec, s, a_idx: int, r: float, s_next, terminal: bool) -> None:
        agent.learner.update(s, a_idx, r, 0 if s_next is None else s_next, terminal)

    # -- bookkeeping --------------------------------------------------------

    def learner_digests(self) -> dict[str, str]:
        # Shared tables appear once per agent but hash identically.
        return {a.id: a.learner.digest() for a in self.agents}

    def greedy_flat_action(self, joint: JointState):
        """Deterministic composed greedy action (evaluation helper)."""
        if self.mode == "ensemble":
            active = [a for a in self.agents if a.active(joint)]
            rows = [a.learner.scores(project(a, joint)) for a in active]
            combined = self.aggregator.combine(rows, len(self.env.action_set))
            return self.env.action_set[int(np.argmax(combined))]
        components = {}
        for agent in self.agents:
            if not agent.env_actions:
                continue
            local = project(agent, joint)
            a_idx = int(np.argmax(agent.learner.scores(local)))
            components[agent.id] = agent.decode(a_idx)[0]
        return self.aggregator(components)
