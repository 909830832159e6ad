"""Experiment configuration: a flat key-value text format with sections.

Sections are ``[env]``, ``[agents]``, ``[aggregator]``, ``[learn]`` and
``[run]``; keys are ``name = value`` pairs.  ``depends`` keys inside
``[agents]`` declare dependency edges as ``j <- i`` (agent j's dynamics
depend on agent i's policy) and may repeat or hold comma-separated lists.
Unknown sections or keys are configuration errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..depgraph import DependencyGraph
from ..learn import EpsilonSchedule
from ..presets import (CATCH_EPSILON, LINEAR_EPSILON, PACBOY_SOC_EPSILON,
                       build_catch_pair, build_fallingfruit_pair,
                       build_fruitgrid_split, build_pacboy_linear,
                       build_pacboy_qsum)
from ..soc import SocSystem


class ConfigError(Exception):
    """A configuration problem the user has to fix (CLI exit code 2)."""


_SECTIONS = ("env", "agents", "aggregator", "learn", "run")

_ENV_KEYS = {
    "pacboy": {"name", "maze", "max_episode_steps"},
    "catch": {"name", "size"},
    "fruitgrid": {"name", "size", "fruits", "max_episode_steps"},
    "fallingfruit": {"name", "width", "height", "arm_range"},
}

_PRESET_KEYS = {
    "pacboy_qsum": {"preset", "fruit_gamma", "fruit_alpha", "ghost_gamma",
                    "ghost_alpha", "share_ghost_table"},
    "pacboy_linear": {"preset", "gamma", "alpha"},
    "catch_pair": {"preset", "comm_bonus", "comm_penalty", "act_interval",
                   "inert_noop_comm", "high_gamma", "low_gamma", "alpha"},
    "fruitgrid_split": {"preset", "gamma", "alpha"},
    "fallingfruit_pair": {"preset", "gamma", "alpha"},
}

_PRESET_ENV = {
    "pacboy_qsum": "pacboy",
    "pacboy_linear": "pacboy",
    "catch_pair": "catch",
    "fruitgrid_split": "fruitgrid",
    "fallingfruit_pair": "fallingfruit",
}

_PRESET_EPSILON = {
    "pacboy_qsum": PACBOY_SOC_EPSILON,
    "pacboy_linear": LINEAR_EPSILON,
    "catch_pair": CATCH_EPSILON,
    "fruitgrid_split": EpsilonSchedule.constant(1.0),
    "fallingfruit_pair": EpsilonSchedule(1.0, 0.05, 20_000),
}

_PRESET_VARIANTS = {
    "pacboy_qsum": {"q_sum", "majority_vote", "rank_vote", "power_mean"},
    "pacboy_linear": {"q_sum"},
    "catch_pair": {"composite"},
    "fruitgrid_split": {"composite"},
    "fallingfruit_pair": {"composite"},
}

_AGGREGATOR_KEYS = {"variant", "p"}
_LEARN_KEYS = {"epsilon_initial", "epsilon_final", "epsilon_anneal_steps"}
_RUN_KEYS = {"epochs", "train_steps", "eval_steps", "seeds", "out"}

# Appendix-table run defaults (the Pac-Boy columns).
DEFAULT_TRAIN_STEPS = 20_000
DEFAULT_EVAL_STEPS = 10_000
DEFAULT_EPOCHS = 10
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass
class ExperimentConfig:
    env_name: str
    preset: str
    env_params: dict = field(default_factory=dict)
    agent_params: dict = field(default_factory=dict)
    aggregator_variant: str | None = None
    aggregator_p: float | None = None
    epsilon: EpsilonSchedule | None = None
    epochs: int = DEFAULT_EPOCHS
    train_steps: int = DEFAULT_TRAIN_STEPS
    eval_steps: int = DEFAULT_EVAL_STEPS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    out: Path | None = None
    depends: tuple[tuple[str, str], ...] = ()

    def with_agent_param(self, key: str, value) -> "ExperimentConfig":
        params = dict(self.agent_params)
        params[key] = value
        return replace(self, agent_params=params)

    def build(self, seed: int) -> SocSystem:
        """Instantiate the system for one experiment seed."""
        kw = dict(self.agent_params)
        epsilon = self.epsilon or _PRESET_EPSILON[self.preset]
        try:
            if self.preset == "pacboy_qsum":
                from ..envs.maze import default_maze, load_maze
                maze_spec = self.env_params.get("maze", "builtin")
                maze = default_maze() if maze_spec == "builtin" else load_maze(maze_spec)
                system = build_pacboy_qsum(seed, maze=maze, epsilon=epsilon, **kw)
                if self.aggregator_variant and self.aggregator_variant != "q_sum":
                    from ..soc import EnsembleAggregator
                    system.aggregator = EnsembleAggregator(self.aggregator_variant,
                                                           self.aggregator_p)
                    system.kernel_hint = None
            elif self.preset == "pacboy_linear":
                from ..envs.maze import default_maze, load_maze
                maze_spec = self.env_params.get("maze", "builtin")
                maze = default_maze() if maze_spec == "builtin" else load_maze(maze_spec)
                system = build_pacboy_linear(seed, maze=maze, epsilon=epsilon, **kw)
            elif self.preset == "catch_pair":
                system = build_catch_pair(seed, n=int(self.env_params.get("size", 24)),
                                          epsilon=epsilon, **kw)
            elif self.preset == "fruitgrid_split":
                system = build_fruitgrid_split(
                    seed, size=int(self.env_params.get("size", 10)),
                    max_episode_steps=int(self.env_params.get("max_episode_steps", 100)),
                    epsilon=epsilon, **kw)
            elif self.preset == "fallingfruit_pair":
                system = build_fallingfruit_pair(
                    seed,
                    width=int(self.env_params.get("width", 10)),
                    height=int(self.env_params.get("height", 10)),
                    arm_range=int(self.env_params.get("arm_range", 2)),
                    epsilon=epsilon, **kw)
            else:
                raise ConfigError(f"unknown preset {self.preset!r}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cannot build preset {self.preset!r}: {exc}") from exc
        if self.env_params.get("max_episode_steps") and self.env_name == "pacboy":
            system.env.max_episode_steps = int(self.env_params["max_episode_steps"])
        if self.depends:
            ids = tuple(sorted({a.group for a in system.agents}))
            system.dependencies = DependencyGraph(ids, set(self.depends))
        return system

    def groups(self) -> list[str]:
        order = []
        for agent in self.build(0).agents:
            if agent.group not in order:
                order.append(agent.group)
        return order


def _parse_sections(text: str, source: str) -> dict[str, list[tuple[str, str]]]:
    sections: dict[str, list[tuple[str, str]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SECTIONS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{current}]")
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any section")
        for sep in ("=", ":"):
            if sep in line:
                key, value = line.split(sep, 1)
                sections[current].append((key.strip(), value.strip()))
                break
        else:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
    return sections


def _to_number(key: str, value: str, cast, source: str):
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"{source}: key {key!r} has bad value {value!r}") from None


def _to_bool(key: str, value: str, source: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{source}: key {key!r} expects a boolean, got {value!r}")


_AGENT_FLOAT_KEYS = {"fruit_gamma", "fruit_alpha", "ghost_gamma", "ghost_alpha",
                     "gamma", "alpha", "comm_bonus", "comm_penalty",
                     "high_gamma", "low_gamma"}
_AGENT_INT_KEYS = {"act_interval"}
_AGENT_BOOL_KEYS = {"share_ghost_table", "inert_noop_comm"}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    sections = _parse_sections(text, source)
    if "env" not in sections:
        raise ConfigError(f"{source}: missing [env] section")
    if "agents" not in sections:
        raise ConfigError(f"{source}: missing [agents] section")

    env_kv = dict(sections["env"])
    if len(env_kv) != len(sections["env"]):
        raise ConfigError(f"{source}: duplicate key in [env]")
    env_name = env_kv.get("name")
    if env_name not in _ENV_KEYS:
        raise ConfigError(f"{source}: [env] name must be one of "
                          f"{sorted(_ENV_KEYS)}, got {env_name!r}")
    for key in env_kv:
        if key not in _ENV_KEYS[env_name]:
            raise ConfigError(f"{source}: unknown [env] key {key!r} for {env_name}")
    env_params = {k: v for k, v in env_kv.items() if k != "name"}

    depends: list[tuple[str, str]] = []
    agent_kv: dict[str, str] = {}
    for key, value in sections["agents"]:
        if key == "depends":
            for part in value.split(","):
                part = part.strip()
                if not part:
                    continue
                if "<-" not in part:
                    raise ConfigError(f"{source}: depends entry {part!r} must be 'j <- i'")
                j, i = (p.strip() for p in part.split("<-", 1))
                depends.append((i, j))
            continue
        if key in agent_kv:
            raise ConfigError(f"{source}: duplicate [agents] key {key!r}")
        agent_kv[key] = value
    preset = agent_kv.get("preset")
    if preset not in _PRESET_KEYS:
        raise ConfigError(f"{source}: [agents] preset must be one of "
                          f"{sorted(_PRESET_KEYS)}, got {preset!r}")
    if _PRESET_ENV[preset] != env_name:
        raise ConfigError(f"{source}: preset {preset!r} runs on "
                          f"{_PRESET_ENV[preset]!r}, not {env_name!r}")
    agent_params: dict = {}
    for key, value in agent_kv.items():
        if key == "preset":
            continue
        if key not in _PRESET_KEYS[preset]:
            raise ConfigError(f"{source}: unknown [agents] key {key!r} for preset {preset}")
        if key in _AGENT_FLOAT_KEYS:
            agent_params[key] = _to_number(key, value, float, source)
        elif key in _AGENT_INT_KEYS:
            agent_params[key] = _to_number(key, value, int, source)
        elif key in _AGENT_BOOL_KEYS:
            agent_params[key] = _to_bool(key, value, source)

    variant = None
    p_value = None
    if "aggregator" in sections:
        agg_kv = dict(sections["aggregator"])
        for key in agg_kv:
            if key not in _AGGREGATOR_KEYS:
                raise ConfigError(f"{source}: unknown [aggregator] key {key!r}")
        variant = agg_kv.get("variant")
        if variant is not None and variant not in _PRESET_VARIANTS[preset]:
            raise ConfigError(f"{source}: aggregator variant {variant!r} not valid "
                              f"for preset {preset} (allowed: "
                              f"{sorted(_PRESET_VARIANTS[preset])})")
        if "p" in agg_kv:
            p_value = _to_number("p", agg_kv["p"], float, source)

    epsilon = None
    if "learn" in sections:
        learn_kv = dict(sections["learn"])
        for key in learn_kv:
            if key not in _LEARN_KEYS:
                raise ConfigError(f"{source}: unknown [learn] key {key!r}")
        defaults = _PRESET_EPSILON[preset]
        epsilon = EpsilonSchedule(
            _to_number("epsilon_initial", learn_kv.get("epsilon_initial",
                       str(defaults.initial)), float, source),
            _to_number("epsilon_final", learn_kv.get("epsilon_final",
                       str(defaults.final)), float, source),
            _to_number("epsilon_anneal_steps", learn_kv.get("epsilon_anneal_steps",
                       str(defaults.anneal_steps)), int, source),
        )

    epochs, train_steps, eval_steps = DEFAULT_EPOCHS, DEFAULT_TRAIN_STEPS, DEFAULT_EVAL_STEPS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    out = None
    if "run" in sections:
        run_kv = dict(sections["run"])
        for key in run_kv:
            if key not in _RUN_KEYS:
                raise ConfigError(f"{source}: unknown [run] key {key!r}")
        epochs = _to_number("epochs", run_kv.get("epochs", str(epochs)), int, source)
        train_steps = _to_number("train_steps", run_kv.get("train_steps",
                                 str(train_steps)), int, source)
        eval_steps = _to_number("eval_steps", run_kv.get("eval_steps",
                                str(eval_steps)), int, source)
        if "seeds" in run_kv:
            parts = run_kv["seeds"].split()
            if len(parts) == 1:
                seeds = tuple(range(_to_number("seeds", parts[0], int, source)))
            else:
                seeds = tuple(_to_number("seeds", p, int, source) for p in parts)
        if "out" in run_kv:
            out = Path(run_kv["out"])
    if epochs < 1 or train_steps < 0 or eval_steps < 1 or not seeds:
        raise ConfigError(f"{source}: [run] values must be positive")

    return ExperimentConfig(
        env_name=env_name, preset=preset, env_params=env_params,
        agent_params=agent_params, aggregator_variant=variant,
        aggregator_p=p_value, epsilon=epsilon, epochs=epochs,
        train_steps=train_steps, eval_steps=eval_steps, seeds=seeds,
        out=out, depends=tuple(depends),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), source=str(path))
