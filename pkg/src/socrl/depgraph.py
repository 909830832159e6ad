"""Declared dependencies between agents, their stability class, and schedules.

An edge i -> j declares that agent j's transition dynamics depend on agent
i's policy.  Edges are trusted as declared; the shipped domains are
spot-checked empirically by the test suite, but nothing is inferred from
data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

logger = logging.getLogger("socrl.depgraph")

INDEPENDENT = "independent"
ACYCLIC = "acyclic"
CYCLIC = "cyclic"


@dataclass
class DependencyGraph:
    agent_ids: tuple[str, ...]
    edges: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        self.agent_ids = tuple(self.agent_ids)
        self.edges = frozenset(self.edges)
        known = set(self.agent_ids)
        for i, j in self.edges:
            if i not in known or j not in known:
                raise ValueError(f"edge ({i} -> {j}) references an undeclared agent")
            if i == j:
                raise ValueError(f"self-edge on agent {i}")


def classify(graph: DependencyGraph) -> str:
    """Independent (no edges), acyclic (nonempty DAG), or cyclic."""
    if not graph.edges:
        return INDEPENDENT
    succ: dict[str, list[str]] = {a: [] for a in graph.agent_ids}
    indeg = {a: 0 for a in graph.agent_ids}
    for i, j in graph.edges:
        succ[i].append(j)
        indeg[j] += 1
    queue = [a for a in graph.agent_ids if indeg[a] == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for j in succ[node]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    return ACYCLIC if seen == len(graph.agent_ids) else CYCLIC


@dataclass
class TrainingSchedule:
    """Sequence of phases; each phase freezes a set of agents.

    mode "parallel" is a single phase freezing nobody.  Coordinate descent
    trains one agent per phase, all others frozen, rotating `rounds` times
    through `order`.
    """

    mode: str
    phases: list[frozenset[str]]
    rounds: int = 1
    order: tuple[str, ...] = ()


def schedule_for(graph: DependencyGraph, policy: str = "strict",
                 rounds: int = 1, order: Sequence[str] | None = None) -> TrainingSchedule:
    """Pick a schedule for the graph's stability class.

    Independent and acyclic systems learn in parallel.  Cyclic systems get
    grouped coordinate descent under the strict policy; best_effort keeps
    parallel learning but logs that stability is not guaranteed.
    """
    if policy not in ("strict", "best_effort"):
        raise ValueError(f"unknown policy {policy!r}")
    cls = classify(graph)
    if cls != CYCLIC or policy == "best_effort":
        if cls == CYCLIC:
            logger.warning(
                "cyclic dependency graph trained in parallel: stable learning "
                "is not guaranteed (best-effort mode)"
            )
        return TrainingSchedule(mode="parallel", phases=[frozenset()])
    if rounds < 1:
        raise ValueError("coordinate descent needs rounds >= 1")
    order = tuple(order) if order is not None else graph.agent_ids
    if set(order) != set(graph.agent_ids):
        raise ValueError("coordinate-descent order must be a permutation of the agents")
    everyone = set(graph.agent_ids)
    phases = [frozenset(everyone - {aid}) for _ in range(rounds) for aid in order]
    return TrainingSchedule(mode="coordinate_descent", phases=phases,
                            rounds=rounds, order=order)


def run_schedule(system, schedule: TrainingSchedule, steps_per_phase: int,
                 force_fallback: bool = False):
    """Execute the schedule; frozen agents act greedily and never update."""
    from .engine import run_phase  # local import to avoid a cycle

    ids = {a.id for a in system.agents}
    for phase in schedule.phases:
        if not phase <= ids:
            raise ValueError(f"schedule freezes unknown agents {sorted(phase - ids)}")
    for phase in schedule.phases:
        system.frozen = set(phase)
        run_phase(system, steps_per_phase, learning=True,
                  force_fallback=force_fallback)
    system.frozen = set()
    return system
