"""Chunked code semantics: chunk layout, packet generation, decodability.

Only packet headers are simulated. A packet carries its chunk index and the
coefficient block of that chunk; payloads never affect delivery time.
Chunk indices are 0-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Optional, Sequence

from .errors import NoInnovativePacketError, ValidationError
from .gf2 import GF2Basis, GF2Vector

REJECTION_ATTEMPTS = 64


@dataclass(frozen=True)
class CodeConfig:
    k: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValidationError("code.q", f"must be >= 1, got {self.q}")
        if self.k < 1:
            raise ValidationError("code.k", f"must be >= 1, got {self.k}")
        if self.k % self.q:
            raise ValidationError(
                "code.q", f"code.q={self.q} must divide code.k={self.k}"
            )

    @property
    def chunk_size(self) -> int:
        return self.k // self.q


_packet_ids = count()


@dataclass(eq=False)
class Packet:
    chunk: int
    vector: GF2Vector
    departure_time: int
    arrival_time: Optional[int] = None
    id: int = field(default_factory=lambda: next(_packet_ids))

    def __post_init__(self):
        if self.arrival_time is not None and self.arrival_time <= self.departure_time:
            raise ValueError("arrival_time must exceed departure_time")


def generate_source_packet(cfg: CodeConfig, chunk: int, rng) -> GF2Vector:
    """Uniformly random coefficient vector over the chunk's message packets."""
    if not 0 <= chunk < cfg.q:
        raise IndexError(f"chunk {chunk} outside 0..{cfg.q - 1}")
    return GF2Vector(rng.getrandbits(cfg.chunk_size), cfg.chunk_size)


def generate_innovative_packet(
    own_basis: GF2Basis, receiver_basis: GF2Basis, rng
) -> GF2Vector:
    """Random element of ``own_basis``'s span that the receiver does not hold.

    Rejection sampling succeeds with probability >= 1/2 per attempt whenever a
    solution exists; after REJECTION_ATTEMPTS misses we fall back to the first
    own-basis row outside the receiver span.
    """
    length = own_basis.length
    for _ in range(REJECTION_ATTEMPTS):
        v = own_basis.random_combination(rng)
        if v and receiver_basis.reduce(v):
            return GF2Vector(v, length)
    for v in own_basis.row_bits():
        if receiver_basis.reduce(v):
            return GF2Vector(v, length)
    raise NoInnovativePacketError(
        f"own span (rank {own_basis.rank}) is inside receiver span (rank {receiver_basis.rank})"
    )


def is_decodable(counts: Sequence[int], cfg: CodeConfig) -> bool:
    """True iff every chunk holds chunk_size innovative packets."""
    if len(counts) != cfg.q:
        raise ValueError(f"expected {cfg.q} counts, got {len(counts)}")
    return all(c == cfg.chunk_size for c in counts)
