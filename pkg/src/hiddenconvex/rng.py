"""Deterministic, splittable randomness.

Every stochastic draw in the package flows through a :class:`RandomSource`,
which wraps a PCG64 ``numpy.random.Generator``.  A fixed seed yields a
bit-identical draw sequence, and distinct run indices derive statistically
independent substreams from one base seed via ``SeedSequence`` spawn keys.
"""

from __future__ import annotations

import numpy as np


class RandomSource:
    """A seeded random stream with reproducible substreams.

    Parameters
    ----------
    seed : int
        64-bit base seed.
    run_index : int, optional
        When given, the stream is the ``run_index``-th independent child
        of the base seed (used to give each experiment run its own stream).
    """

    def __init__(self, seed: int, run_index: int | None = None):
        self.seed = int(seed)
        self.run_index = run_index
        if run_index is None:
            seq = np.random.SeedSequence(self.seed)
        else:
            seq = np.random.SeedSequence(self.seed, spawn_key=(int(run_index),))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    @classmethod
    def for_run(cls, base_seed: int, run_index: int) -> "RandomSource":
        """Independent substream for one run of a multi-seed experiment."""
        return cls(base_seed, run_index=run_index)

    def spawn(self, n: int) -> list["RandomSource"]:
        """``n`` independent child sources (run indices ``0..n-1``)."""
        return [RandomSource(self.seed, run_index=i) for i in range(n)]

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, size=None):
        return self.generator.standard_normal(size)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, run_index={self.run_index})"
