"""Seeded random streams.

Every sampler in this package draws from an explicit stream so that runs
are reproducible and parallel chains never share state. A stream is
identified by a (seed, stream) pair and is backed by a counter-based
Philox generator: the same pair always reproduces the same draw sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream", "as_generator"]


@dataclass
class RngStream:
    """A named, reproducible random stream.

    Parameters
    ----------
    seed : int
        Base seed, shared by every chain of one run.
    stream : int, optional
        Stream id; parallel chains use 0, 1, ..., k-1.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator | None = field(
        default=None, repr=False, compare=False
    )

    def generator(self) -> np.random.Generator:
        """Return the backing generator, creating it on first use.

        Successive calls return the same generator, so draws continue the
        stream rather than restarting it.
        """
        if self._gen is None:
            ss = np.random.SeedSequence((int(self.seed), int(self.stream)))
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen


def as_generator(rng) -> np.random.Generator:
    """Coerce an RngStream, numpy Generator, or integer seed to a Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot interpret {type(rng).__name__} as a random stream")
