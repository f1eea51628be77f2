"""Bit-packed GF(2) vectors and an incrementally reduced basis.

Vectors are packed into Python ints: coefficient ``i`` lives in bit ``i``.
The basis keeps its rows in fully reduced echelon form, so each row owns a
pivot bit that no other row has set. That makes reduction a single pass over
the pivot bits present in the probe vector.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

from .errors import DimensionError

__all__ = [
    "GF2Vector",
    "GF2Basis",
    "is_innovative",
    "insert",
    "rank_of",
]


class GF2Vector:
    """Fixed-length binary coefficient vector."""

    __slots__ = ("bits", "length")

    def __init__(self, bits: int, length: int):
        if length < 1:
            raise DimensionError(f"vector length must be >= 1, got {length}")
        if bits < 0 or bits >> length:
            raise DimensionError(f"bits {bits:#x} do not fit in length {length}")
        self.bits = bits
        self.length = length

    @classmethod
    def zeros(cls, length: int) -> "GF2Vector":
        return cls(0, length)

    @classmethod
    def unit(cls, index: int, length: int) -> "GF2Vector":
        return cls(1 << index, length)

    @classmethod
    def from_string(cls, s: str) -> "GF2Vector":
        """``"1100"`` -> coefficients (1, 1, 0, 0); character i is coefficient i."""
        s = s.strip()
        bits = 0
        for i, ch in enumerate(s):
            if ch == "1":
                bits |= 1 << i
            elif ch != "0":
                raise ValueError(f"not a binary string: {s!r}")
        return cls(bits, len(s))

    @classmethod
    def from_list(cls, coeffs: Sequence[int]) -> "GF2Vector":
        bits = 0
        for i, c in enumerate(coeffs):
            if c & 1:
                bits |= 1 << i
        return cls(bits, len(coeffs))

    def to_string(self) -> str:
        return "".join("1" if self.bits >> i & 1 else "0" for i in range(self.length))

    def to_list(self) -> list[int]:
        return [self.bits >> i & 1 for i in range(self.length)]

    def hex(self) -> str:
        return format(self.bits, "0{}x".format((self.length + 3) // 4))

    def is_zero(self) -> bool:
        return self.bits == 0

    def __add__(self, other: "GF2Vector") -> "GF2Vector":
        if other.length != self.length:
            raise DimensionError(f"length {self.length} vs {other.length}")
        return GF2Vector(self.bits ^ other.bits, self.length)

    __xor__ = __add__

    def __eq__(self, other):
        if not isinstance(other, GF2Vector):
            return NotImplemented
        return self.bits == other.bits and self.length == other.length

    def __hash__(self):
        return hash((self.bits, self.length))

    def __repr__(self):
        return f"GF2Vector('{self.to_string()}')"


VectorLike = Union[GF2Vector, int]


class GF2Basis:
    """Reduced echelon basis of a subspace of GF(2)^length.

    Methods accept either :class:`GF2Vector` (length-checked) or a raw packed
    int (trusted; used on hot paths).
    """

    __slots__ = ("length", "_rows", "_pivmask")

    def __init__(self, length: int, vectors: Iterable[VectorLike] = ()):
        if length < 1:
            raise DimensionError(f"basis length must be >= 1, got {length}")
        self.length = length
        self._rows: dict[int, int] = {}
        self._pivmask = 0
        for v in vectors:
            self.insert(v)

    @classmethod
    def full(cls, length: int) -> "GF2Basis":
        b = cls(length)
        b._rows = {i: 1 << i for i in range(length)}
        b._pivmask = (1 << length) - 1
        return b

    def _bits(self, v: VectorLike) -> int:
        if isinstance(v, GF2Vector):
            if v.length != self.length:
                raise DimensionError(
                    f"vector length {v.length} does not match basis length {self.length}"
                )
            return v.bits
        return v

    @property
    def rank(self) -> int:
        return len(self._rows)

    def is_full(self) -> bool:
        return len(self._rows) == self.length

    def reduce(self, v: VectorLike) -> int:
        """Residue of ``v`` after eliminating every pivot; zero iff ``v`` is in the span."""
        v = self._bits(v)
        rows = self._rows
        m = v & self._pivmask
        while m:
            low = m & -m
            v ^= rows[low.bit_length() - 1]
            m ^= low
        return v

    def is_innovative(self, v: VectorLike) -> bool:
        return self.reduce(v) != 0

    def contains(self, v: VectorLike) -> bool:
        return self.reduce(v) == 0

    def insert(self, v: VectorLike) -> bool:
        r = self.reduce(v)
        if not r:
            return False
        p = r.bit_length() - 1
        bit = 1 << p
        rows = self._rows
        for q, row in rows.items():
            if row & bit:
                rows[q] = row ^ r
        rows[p] = r
        self._pivmask |= bit
        return True

    def copy(self) -> "GF2Basis":
        b = GF2Basis.__new__(GF2Basis)
        b.length = self.length
        b._rows = dict(self._rows)
        b._pivmask = self._pivmask
        return b

    def rows(self) -> list[GF2Vector]:
        return [GF2Vector(self._rows[p], self.length) for p in sorted(self._rows)]

    def row_bits(self) -> list[int]:
        return [self._rows[p] for p in sorted(self._rows)]

    def random_combination(self, rng) -> int:
        """Uniform element of the span (each row kept with probability 1/2)."""
        rows = self._rows
        if not rows:
            return 0
        pick = rng.getrandbits(len(rows))
        v = 0
        for row in rows.values():
            if pick & 1:
                v ^= row
            pick >>= 1
        return v

    def check_invariants(self) -> None:
        for p, row in self._rows.items():
            assert row >> p & 1, "row lost its pivot"
            assert row.bit_length() - 1 == p, "pivot is not the leading bit"
            others = self._pivmask & ~(1 << p)
            assert not row & others, "row not reduced"
        assert self.rank <= self.length

    def __repr__(self):
        return f"GF2Basis(rank={self.rank}, rows={[r.to_string() for r in self.rows()]})"


def is_innovative(basis: GF2Basis, v: VectorLike) -> bool:
    return basis.is_innovative(v)


def insert(basis: GF2Basis, v: VectorLike) -> bool:
    return basis.insert(v)


def rank_of(matrix: Sequence[VectorLike], length: int | None = None) -> int:
    """Rank over GF(2) of the rows in ``matrix``."""
    if length is None:
        if not matrix:
            return 0
        first = matrix[0]
        if not isinstance(first, GF2Vector):
            raise DimensionError("length is required for packed-int rows")
        length = first.length
    basis = GF2Basis(length)
    for row in matrix:
        basis.insert(row)
    return basis.rank
