"""Deterministic random-number streams.

Every randomized component (Monte-Carlo batches, frontier restarts) owns a
counter-based Philox stream keyed by ``(seed, index)``.  Streams are
statistically independent across indices, independent of scheduling order,
and bit-identical across runs on the same backend.
"""

from numpy.random import Generator, Philox

from .errors import SeedRequired


def stream(seed: int | None, index: int = 0) -> Generator:
    """Return the Philox generator for worker ``index`` under ``seed``."""
    if seed is None:
        raise SeedRequired("an explicit integer seed is required")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise SeedRequired(f"seed must be an integer, got {seed!r}")
    if index < 0:
        raise ValueError(f"stream index must be nonnegative, got {index}")
    return Generator(Philox(key=(int(seed) << 32) + int(index)))
