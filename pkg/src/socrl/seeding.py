"""Seed bookkeeping: one experiment seed, fixed per-component sub-streams.

Every source of randomness in an experiment is a ``numpy.random.Generator``
derived from the experiment seed and a fixed component index via
``SeedSequence(entropy=seed, spawn_key=(component,))``.  Because the spawn key
is positional and not sequential, adding a new component never perturbs the
streams of existing ones.

Component index registry:

====================  =====
environment           0
policy / aggregator   1
behaviour (pretrain)  2
agent *i*             10+i
====================  =====
"""

from __future__ import annotations

import numpy as np

ENV_STREAM = 0
POLICY_STREAM = 1
BEHAVIOR_STREAM = 2
AGENT_STREAM_BASE = 10


def component_rng(seed: int, component: int) -> np.random.Generator:
    """Generator for one component of an experiment seeded with `seed`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(component,))
    return np.random.Generator(np.random.PCG64(ss))


def rand_below(rng: np.random.Generator, n: int) -> int:
    """Uniform draw from {0, ..., n-1} consuming exactly one double.

    Both engine implementations (pure Python and compiled) map a single
    ``next_double`` to a bounded integer this way, so their random streams
    stay aligned draw for draw.  The float truncation bias is O(n / 2^53),
    far below anything the statistical tests can resolve.
    """
    return int(rng.random() * n)
