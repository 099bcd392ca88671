"""Deterministic random-number streams.

Every stochastic component draws from a named stream so that runs are
reproducible from (seed, stream id) alone and adding draws to one
component never perturbs another.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream", "symbol_fate"]


def _stream_key(stream_id: str) -> int:
    # Stable across processes; Python's hash() is salted per run.
    digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RngStream:
    """A named, seeded random stream backed by PCG64.

    Identical (seed, stream_id) pairs produce identical draw sequences.
    Child streams are derived from the parent's name, so independent
    components can be given independent substreams deterministically.
    """

    seed: int
    stream_id: str = "root"
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, _stream_key(self.stream_id)])
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, name: str) -> "RngStream":
        return RngStream(self.seed, f"{self.stream_id}/{name}")

    # Convenience passthroughs used throughout the simulator.
    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)

    def choice(self, a, size=None, p=None):
        return self._gen.choice(a, size=size, p=p)

    def bytes(self, n: int) -> bytes:
        return self._gen.bytes(n)


def symbol_fate(seed: int, *coords: int) -> float:
    """Counter-based uniform in [0, 1) keyed by integer coordinates.

    Used where per-item outcomes must not depend on how many other items
    exist (e.g. per-symbol loss draws), so sweeps over stream length or
    overhead stay comparable draw-for-draw.
    """
    h = hashlib.sha256()
    h.update(seed.to_bytes(8, "big", signed=True))
    for c in coords:
        h.update(int(c).to_bytes(8, "big", signed=True))
    return int.from_bytes(h.digest()[:8], "big") / 2**64
