"""Counter-based random streams keyed by (seed, replicate, stream)."""
from __future__ import annotations

import numpy as np

from .errors import ConfigError

# stream ids
SAMPLING = 0
STOCHASTIC = 1
INITIAL_STATE = 2


def make_rng(seed: int, replicate: int = 0, stream: int = SAMPLING, *extra: int) -> np.random.Generator:
    """Independent Philox generator for one (seed, replicate, stream, *extra) key.

    The key fully determines the stream, so results do not depend on which
    worker runs a replicate or in which order.
    """
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2 ** 64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    ss = np.random.SeedSequence([int(seed), int(replicate), int(stream), *(int(k) for k in extra)])
    return np.random.Generator(np.random.Philox(ss))
