"""Deterministic seed-stream plumbing shared by pipelines and the harness."""

from __future__ import annotations

import numpy as np


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """n independent generators derived from one master seed.

    Streams are positional: callers document which stream feeds which phase
    (calibration, acceptance draws, candidate draws, ...) so replays line up.
    ``seed`` may be an int or an already-spawned SeedSequence.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def replication_seeds(seed: int, replications: int) -> list[np.random.SeedSequence]:
    """Per-replication seed sequences; aggregation by index keeps runs
    independent of execution order."""
    return np.random.SeedSequence(seed).spawn(replications)
