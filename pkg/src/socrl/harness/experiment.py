"""Experiment runner: alternating train/eval epochs, metrics, persistence.

Metrics rows carry one evaluation phase each; the CSV is reproducible
byte-for-byte under a fixed config and seed except for its timestamp
comment line.  Evaluation runs with learning off and epsilon 0 and is
asserted (by table digests) to leave every learner untouched.
"""

from __future__ import annotations

import datetime
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..depgraph import CYCLIC, classify
from ..engine import run_phase
from ..learn import LinearQLearner, QTable, QTableLearner
from ..soc import SocSystem
from .config import ConfigError, ExperimentConfig

logger = logging.getLogger("socrl.harness")

CSV_HEADER = "seed,epoch,mean_reward,mean_steps,fruit_fraction_or_catch_rate,comm_frequency"


@dataclass
class MetricsRow:
    seed: int | str
    epoch: int
    mean_reward: float
    mean_steps: float
    success: float
    comm_frequency: float

    def csv(self) -> str:
        return (f"{self.seed},{self.epoch},{float(self.mean_reward)!r},"
                f"{float(self.mean_steps)!r},{float(self.success)!r},"
                f"{float(self.comm_frequency)!r}")


@dataclass
class ExperimentResult:
    rows: list[MetricsRow] = field(default_factory=list)

    def per_seed(self) -> list[MetricsRow]:
        return [r for r in self.rows if r.seed != "mean"]

    def aggregate(self) -> list[MetricsRow]:
        return [r for r in self.rows if r.seed == "mean"]

    def row(self, seed: int | str, epoch: int) -> MetricsRow:
        for r in self.rows:
            if r.seed == seed and r.epoch == epoch:
                return r
        raise KeyError((seed, epoch))

    def add_aggregates(self, seeds, epochs: int) -> None:
        for epoch in range(1, epochs + 1):
            group = [r for r in self.per_seed() if r.epoch == epoch]
            if not group:
                continue
            self.rows.append(MetricsRow(
                "mean", epoch,
                float(np.mean([r.mean_reward for r in group])),
                float(np.mean([r.mean_steps for r in group])),
                float(np.mean([r.success for r in group])),
                float(np.mean([r.comm_frequency for r in group])),
            ))

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        lines = [f"# socrl metrics generated {stamp}", CSV_HEADER]
        lines += [r.csv() for r in self.rows]
        path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Group-level table persistence

def _group_learners(system: SocSystem) -> dict[str, list]:
    groups: dict[str, list] = {}
    for agent in system.agents:
        groups.setdefault(agent.group or agent.id, []).append(agent.learner)
    return groups


def save_tables(system: SocSystem, directory) -> list[Path]:
    """One file per agent group; a group of tabular agents is stacked in
    agent order (agents sharing one table store it once)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for group, learners in _group_learners(system).items():
        first = learners[0]
        if isinstance(first, LinearQLearner):
            path = directory / f"{group}.linearq"
            first.model.save(path)
        else:
            path = directory / f"{group}.qtable"
            tables = _distinct_tables(learners)
            if len(tables) == 1:
                tables[0].save(path)
            else:
                stacked = QTable(sum(t.n_states for t in tables), tables[0].n_actions)
                stacked.values[:] = np.vstack([t.values for t in tables])
                stacked.save(path)
        written.append(path)
    return written


def _distinct_tables(learners) -> list[QTable]:
    tables = []
    for lr in learners:
        if not any(lr.table is t for t in tables):
            tables.append(lr.table)
    return tables


def load_tables(system: SocSystem, directory, groups=None) -> list[str]:
    """Fill the named groups' learners from saved files; dimension-checked."""
    directory = Path(directory)
    loaded = []
    for group, learners in _group_learners(system).items():
        if groups is not None and group not in groups:
            continue
        first = learners[0]
        if isinstance(first, LinearQLearner):
            path = directory / f"{group}.linearq"
            if not path.exists():
                raise ConfigError(f"no saved model for group {group!r} in {directory}")
            first.model.load_weights(path)
        else:
            path = directory / f"{group}.qtable"
            if not path.exists():
                raise ConfigError(f"no saved table for group {group!r} in {directory}")
            saved = QTable.load(path)
            tables = _distinct_tables(learners)
            total = sum(t.n_states for t in tables)
            if saved.n_states != total or saved.n_actions != tables[0].n_actions:
                raise ConfigError(
                    f"{path}: dimensions {saved.n_states}x{saved.n_actions} do not "
                    f"match group {group!r} ({total}x{tables[0].n_actions})"
                )
            offset = 0
            for t in tables:
                t.values[:] = saved.values[offset:offset + t.n_states]
                offset += t.n_states
        loaded.append(group)
    return loaded


def transfer_load(system: SocSystem, directory, freeze=()) -> SocSystem:
    """Start the system's named agents from saved tables.

    `freeze` lists groups that keep their loaded tables fixed (and act
    greedily) during subsequent training; everyone else continues learning.
    """
    load_tables(system, directory)
    unknown = set(freeze) - {a.group for a in system.agents}
    if unknown:
        raise ConfigError(f"cannot freeze unknown groups {sorted(unknown)}")
    system.frozen |= {a.id for a in system.agents if a.group in set(freeze)}
    return system


def _digest_all(system: SocSystem) -> dict[str, str]:
    return system.learner_digests()


# ---------------------------------------------------------------------------
# The runner

def run_experiment(cfg: ExperimentConfig, tables_dir=None, freeze=(),
                   force_fallback: bool = False,
                   save: bool = True) -> ExperimentResult:
    """Alternate training and evaluation epochs for every configured seed.

    Returns the per-seed metrics rows plus per-epoch aggregate rows flagged
    with seed "mean"; writes metrics.csv and final tables under cfg.out when
    an output directory is configured and `save` is true.
    """
    result = ExperimentResult()
    graph = None
    for seed in cfg.seeds:
        system = cfg.build(seed)
        if graph is None:
            graph = getattr(system, "dependencies", None)
            if graph is not None and classify(graph) == CYCLIC:
                logger.warning(
                    "dependency graph is cyclic; training proceeds in parallel "
                    "(stability not guaranteed, matching the shipped domains)"
                )
        if tables_dir is not None:
            transfer_load(system, Path(tables_dir) / f"seed{seed}" / "tables",
                          freeze=freeze)
        for epoch in range(1, cfg.epochs + 1):
            run_phase(system, cfg.train_steps, learning=True,
                      force_fallback=force_fallback)
            before = _digest_all(system)
            metrics = run_phase(system, cfg.eval_steps, learning=False,
                                force_fallback=force_fallback)
            if _digest_all(system) != before:
                raise RuntimeError("evaluation phase modified a learner table")
            result.rows.append(MetricsRow(
                seed, epoch, metrics.mean_reward, metrics.mean_length,
                metrics.mean_success, metrics.comm_frequency,
            ))
            logger.info("seed %s epoch %d: reward %.2f, steps %.1f, "
                        "success %.3f, comm %.3f", seed, epoch,
                        metrics.mean_reward, metrics.mean_length,
                        metrics.mean_success, metrics.comm_frequency)
        if cfg.out is not None and save:
            save_tables(system, Path(cfg.out) / f"seed{seed}" / "tables")
    result.add_aggregates(cfg.seeds, cfg.epochs)
    if cfg.out is not None and save:
        result.write_csv(Path(cfg.out) / "metrics.csv")
    return result


def evaluate(cfg: ExperimentConfig, tables_dir, force_fallback: bool = False) -> ExperimentResult:
    """Evaluation-only epochs from saved tables: learning off, epsilon 0."""
    result = ExperimentResult()
    for seed in cfg.seeds:
        system = cfg.build(seed)
        load_tables(system, Path(tables_dir) / f"seed{seed}" / "tables")
        for epoch in range(1, cfg.epochs + 1):
            metrics = run_phase(system, cfg.eval_steps, learning=False,
                                force_fallback=force_fallback)
            result.rows.append(MetricsRow(
                seed, epoch, metrics.mean_reward, metrics.mean_length,
                metrics.mean_success, metrics.comm_frequency,
            ))
    result.add_aggregates(cfg.seeds, cfg.epochs)
    if cfg.out is not None:
        result.write_csv(Path(cfg.out) / "eval_metrics.csv")
    return result


PRETRAIN_GROUPS = ("fruits", "ghosts", "both")


def pretrain(cfg: ExperimentConfig, group: str, steps: int,
             out_dir=None, force_fallback: bool = False) -> list[Path]:
    """Drive the environment with uniform-random flat actions for `steps`,
    updating only the named agent group off-policy, and persist the tables.
    """
    if group not in PRETRAIN_GROUPS:
        raise ConfigError(f"unknown pretraining group {group!r}; "
                          f"expected one of {PRETRAIN_GROUPS}")
    out_dir = Path(out_dir if out_dir is not None else (cfg.out or "pretrained"))
    written = []
    for seed in cfg.seeds:
        system = cfg.build(seed)
        if system.mode != "ensemble":
            raise ConfigError("pretraining applies to ensemble systems")
        groups = {a.group for a in system.agents}
        wanted = {"fruits", "ghosts"} if group == "both" else {group}
        if not wanted <= groups:
            raise ConfigError(f"system has groups {sorted(groups)}, not {sorted(wanted)}")
        system.frozen = {a.id for a in system.agents if a.group not in wanted}
        run_phase(system, steps, learning=True, behavior="random",
                  force_fallback=force_fallback)
        system.frozen = set()
        written += save_tables(system, out_dir / f"seed{seed}" / "tables")
    return written
