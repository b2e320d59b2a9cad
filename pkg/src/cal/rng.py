"""Deterministic random streams.

Every stochastic entry point takes an integer seed and draws from a
counter-based generator (Philox 4x64-10).  Stream (seed, index) is keyed as
``(seed << 64) | index``, so trial ``index`` always sees the same draws no
matter how trials are partitioned across workers: partial counts from any
worker layout combine into the same totals.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the Philox generator for substream ``index`` of ``seed``."""
    seed = int(seed)
    index = int(index)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a u64, got {seed}")
    if index < 0:
        raise ValueError(f"stream index must be non-negative, got {index}")
    return np.random.Generator(np.random.Philox(key=(seed << 64) | index))
