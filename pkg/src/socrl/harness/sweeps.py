"""Parameter sweeps over the Catch decomposition."""

from __future__ import annotations

import datetime
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .experiment import ExperimentResult, run_experiment

logger = logging.getLogger("socrl.harness")


@dataclass
class SweepRow:
    param: str
    value: float
    final_success: float
    comm_frequency: float


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    experiments: dict[float, ExperimentResult] = field(default_factory=dict)

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        lines = [f"# socrl sweep generated {stamp}",
                 "param,value,final_success,comm_frequency"]
        lines += [f"{r.param},{float(r.value)!r},{float(r.final_success)!r},"
                  f"{float(r.comm_frequency)!r}" for r in self.rows]
        path.write_text("\n".join(lines) + "\n")


def _final_epoch_means(result: ExperimentResult, epochs: int) -> tuple[float, float]:
    final = [r for r in result.per_seed() if r.epoch == epochs]
    return (float(np.mean([r.success for r in final])),
            float(np.mean([r.comm_frequency for r in final])))


def _sweep(cfg: ExperimentConfig, param: str, values, force_fallback: bool) -> SweepResult:
    out = SweepResult()
    for value in values:
        sub = cfg.with_agent_param(param, value)
        if cfg.out is not None:
            sub = replace(sub, out=Path(cfg.out) / f"{param}_{value}")
        result = run_experiment(sub, force_fallback=force_fallback)
        success, comm = _final_epoch_means(result, cfg.epochs)
        out.rows.append(SweepRow(param, float(value), success, comm))
        out.experiments[float(value)] = result
        logger.info("sweep %s=%s: final success %.3f, comm %.3f",
                    param, value, success, comm)
    if cfg.out is not None:
        out.write_csv(Path(cfg.out) / f"sweep_{param}.csv")
    return out


def _require_catch(cfg: ExperimentConfig) -> None:
    if cfg.preset != "catch_pair":
        raise ConfigError("this sweep requires the catch_pair preset")


def sweep_comm_reward(cfg: ExperimentConfig, values,
                      force_fallback: bool = False) -> SweepResult:
    """One full experiment per compliance-bonus value; reports the
    final-epoch mean catch rate for each."""
    _require_catch(cfg)
    return _sweep(cfg, "comm_bonus", values, force_fallback)


def sweep_comm_penalty(cfg: ExperimentConfig, values,
                       force_fallback: bool = False) -> SweepResult:
    """Final catch rate and communication frequency per penalty value.

    Requires the no-op comm action to be a plain no-request token and the
    high-level agent to re-decide every step.
    """
    _require_catch(cfg)
    if cfg.agent_params.get("act_interval", 2) != 1:
        raise ConfigError("the communication-penalty sweep requires act_interval = 1")
    if not cfg.agent_params.get("inert_noop_comm", False):
        raise ConfigError("the communication-penalty sweep requires inert_noop_comm = true")
    return _sweep(cfg, "comm_penalty", values, force_fallback)


def sweep_act_interval(cfg: ExperimentConfig, values,
                       force_fallback: bool = False) -> SweepResult:
    """Full learning curve per action-selection interval.

    Too-frequent re-deciding makes the high agent's reward look sparser per
    decision and slows learning; too-infrequent lowers the asymptote because
    the paddle is steered too coarsely.  The curves live in the returned
    per-value experiments.
    """
    _require_catch(cfg)
    return _sweep(cfg, "act_interval", [int(v) for v in values], force_fallback)
