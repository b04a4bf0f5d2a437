"""Seed derivation shared by every stochastic component.

All randomness in the package flows from a single nonnegative master seed.
Each consumer owns a fixed stream id, and its generator is created as
``numpy.random.default_rng([seed, stream_id])`` (PCG64 keyed through a
SeedSequence), so the landmark sample, the random projections, the
per-iteration example draws, the gradient-norm probe, and dataset splits
are all decorrelated but individually reproducible from one seed.

Reproducibility is bit-exact for a fixed numpy version; numpy reserves the
right to revise generator method streams between releases.
"""

from __future__ import annotations

import numpy as np

NYSTROM_SAMPLE_STREAM = 1
FOURIER_STREAM = 2
XI_STREAM = 3
DG_STREAM = 4
SPLIT_STREAM = 5


def stream(seed: int, stream_id: int) -> np.random.Generator:
    """Generator for one purpose-specific stream under a master seed."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.default_rng([seed, stream_id])
