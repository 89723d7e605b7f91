"""Counter-keyed random streams.

Every stochastic operation draws from a Philox generator keyed by
``(seed, stage, draw)`` through a ``SeedSequence`` spawn key. Philox is
counter-based, so identical keys give identical streams on any platform
and independent keys give statistically independent streams without
coordination between workers.
"""

import numpy as np


def stream(seed: int, stage: int = 0, draw: int = 0) -> np.random.Generator:
    """Generator for the stream keyed by (seed, stage, draw)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stage), int(draw)))
    return np.random.Generator(np.random.Philox(ss))


def normal(shape, seed: int, stage: int = 0, draw: int = 0) -> np.ndarray:
    """One unit-normal array from the keyed stream."""
    return stream(seed, stage, draw).standard_normal(shape)
