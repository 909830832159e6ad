"""Phase runner: drives a SocSystem for a fixed number of environment steps.

Two interchangeable engines execute the step contract documented on
:class:`socrl.soc.SocSystem`:

* the pure-Python reference path (``SocSystem.step`` in a loop), always
  available;
* compiled kernels in :mod:`socrl._speedups` for the Pac-Boy ensemble and
  the Catch pair, selected automatically when the extension imported and the
  system matches a kernel.

Both consume the same generator streams with the same draw discipline, so
they produce bit-identical tables, metrics, and generator states; the test
suite asserts exactly that.  Set ``SOCRL_DISABLE_EXT=1`` to force the
reference path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .soc import SocSystem

try:
    from . import _speedups
except ImportError:  # pragma: no cover - build without the extension
    _speedups = None


def extension_available() -> bool:
    if os.environ.get("SOCRL_DISABLE_EXT", "") not in ("", "0"):
        return False
    return _speedups is not None


@dataclass
class PhaseMetrics:
    """Counters over one phase; episode means cover completed episodes only."""

    steps: int = 0
    episodes: int = 0
    sum_reward: float = 0.0
    sum_length: int = 0
    sum_success: float = 0.0
    comm_steps: int = 0

    @property
    def mean_reward(self) -> float:
        return self.sum_reward / self.episodes if self.episodes else float("nan")

    @property
    def mean_length(self) -> float:
        return self.sum_length / self.episodes if self.episodes else float("nan")

    @property
    def mean_success(self) -> float:
        return self.sum_success / self.episodes if self.episodes else float("nan")

    @property
    def comm_frequency(self) -> float:
        return self.comm_steps / self.steps if self.steps else 0.0


def run_phase(system: SocSystem, n_steps: int, *, learning: bool = True,
              behavior: str = "policy", force_fallback: bool = False,
              record_sink: list | None = None) -> PhaseMetrics:
    """Run exactly `n_steps` environment steps, resetting episodes as needed.

    Training phases draw epsilon from the system's schedule at the global
    training-step counter; evaluation phases use epsilon 0 and leave every
    table untouched.  The trailing partial episode contributes to `steps`
    but not to the episode averages.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    system.begin_phase()
    if record_sink is None and not force_fallback and _kernel_for(system, behavior):
        return _run_kernel(system, n_steps, learning, behavior)

    metrics = PhaseMetrics()
    ep_reward = 0.0
    ep_length = 0
    for _ in range(n_steps):
        if system.needs_reset:
            system.start_episode()
            ep_reward = 0.0
            ep_length = 0
        eps = system.epsilon_schedule.value(system.train_steps) if learning else 0.0
        out = system.step(eps, learning=learning, behavior=behavior,
                          record=record_sink is not None)
        if record_sink is not None:
            record_sink.append(out.record)
        metrics.steps += 1
        ep_reward += out.reward
        ep_length += 1
        if any(c != "no-op" for c in out.emitted_comm.values()):
            metrics.comm_steps += 1
        if learning:
            system.train_steps += 1
        if out.terminal:
            metrics.episodes += 1
            metrics.sum_reward += ep_reward
            metrics.sum_length += ep_length
            metrics.sum_success += system.env.episode_success()
    return metrics


def _kernel_for(system: SocSystem, behavior: str) -> str | None:
    if not extension_available():
        return None
    hint = system.kernel_hint
    if hint == "pacboy_qsum":
        ctx = system.kernel_ctx
        for group in (ctx["fruit_ids"], ctx["ghost_ids"]):
            overlap = system.frozen & group
            if overlap and overlap != group:
                return None  # partial freezing within a group: reference path
        return hint
    if hint == "catch_pair" and behavior == "policy":
        return hint
    return None


def _run_kernel(system: SocSystem, n_steps: int, learning: bool,
                behavior: str) -> PhaseMetrics:
    ctx = system.kernel_ctx
    sched = system.epsilon_schedule
    metrics = PhaseMetrics(steps=n_steps)
    if system.kernel_hint == "pacboy_qsum":
        env = system.env
        episodes, sum_reward, sum_length, sum_success = _speedups.pacboy_phase(
            ctx["fruit_q"], ctx["ghost_q"],
            ctx["move_to"], ctx["nbrs"], ctx["deg"], ctx["fruit_at"],
            env.maze.pacboy_start, ctx["ghost_starts"],
            env.max_episode_steps, n_steps,
            1 if learning else 0,
            1 if behavior == "random" else 0,
            1 if learning and not (ctx["fruit_ids"] & system.frozen) else 0,
            1 if learning and not (ctx["ghost_ids"] & system.frozen) else 0,
            ctx["fruit_gamma"], ctx["fruit_alpha"],
            ctx["ghost_gamma"], ctx["ghost_alpha"],
            sched.initial, sched.final, sched.anneal_steps, system.train_steps,
            env.rng, system.policy_rng,
        )
    elif system.kernel_hint == "catch_pair":
        env = system.env
        episodes, sum_reward, sum_length, sum_success, comm_steps = _speedups.catch_phase(
            ctx["high_q"], ctx["low_q"],
            env.n, ctx["act_interval"], ctx["window"],
            ctx["bonus"], ctx["penalty"],
            1 if ctx["inert_noop_comm"] else 0,
            ctx["high_gamma"], ctx["high_alpha"],
            ctx["low_gamma"], ctx["low_alpha"],
            n_steps,
            1 if learning else 0,
            1 if learning and "high" not in system.frozen else 0,
            1 if learning and "low" not in system.frozen else 0,
            1 if "high" in system.frozen else 0,
            1 if "low" in system.frozen else 0,
            sched.initial, sched.final, sched.anneal_steps, system.train_steps,
            env.rng, ctx["high_rng"], ctx["low_rng"],
        )
        metrics.comm_steps = comm_steps
    else:  # pragma: no cover - guarded by _kernel_for
        raise RuntimeError(f"no kernel for hint {system.kernel_hint!r}")
    metrics.episodes = episodes
    metrics.sum_reward = sum_reward
    metrics.sum_length = sum_length
    metrics.sum_success = sum_success
    if learning:
        system.train_steps += n_steps
    # The kernel ran episodes past the Python-side objects; the next phase
    # starts from a fresh reset either way.
    system.begin_phase()
    return metrics
