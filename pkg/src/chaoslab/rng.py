"""Deterministic, hierarchical random number streams.

Every stochastic routine in the library receives an :class:`RngStream`
rather than a bare generator.  A stream is identified by the triple
``(master_seed, stream_label, replication_index)``; identical triples
always reproduce identical variate sequences, and distinct labels or
indices give statistically independent streams.  This makes replication
loops embarrassingly parallel: worker k derives its substream from the
replication index alone, so results are independent of how replications
are scheduled across workers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1


def _label_key(label: str) -> int:
    # Stable 64-bit digest; python's hash() is salted per process.
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """Descriptor of one reproducible random stream."""

    master_seed: int
    stream_label: str = "root"
    replication_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _U64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.replication_index < 0:
            raise ValueError("replication_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Fresh counter-based generator for this (seed, label, index) triple."""
        ss = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(_label_key(self.stream_label), int(self.replication_index)),
        )
        return np.random.Generator(np.random.Philox(ss))

    def child(self, label: str) -> "RngStream":
        """Independent stream scoped under this one's label."""
        return RngStream(self.master_seed, f"{self.stream_label}/{label}", self.replication_index)

    def replication(self, index: int) -> "RngStream":
        """Stream for replication ``index`` of this label."""
        return RngStream(self.master_seed, self.stream_label, index)

    def descriptor(self) -> dict:
        """JSON-serializable identity of the stream."""
        return {
            "master_seed": int(self.master_seed),
            "stream_label": self.stream_label,
            "replication_index": int(self.replication_index),
        }

    @staticmethod
    def from_descriptor(d: dict) -> "RngStream":
        return RngStream(int(d["master_seed"]), str(d["stream_label"]), int(d["replication_index"]))
