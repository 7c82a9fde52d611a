"""Counter-based random streams keyed by a master seed and a task path.

Every stream is a Philox generator whose key is derived from
``(seed, *task)`` through :class:`numpy.random.SeedSequence`, so a task
draws the same numbers no matter which worker executes it.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *task: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in task))
    return np.random.Generator(np.random.Philox(ss))
