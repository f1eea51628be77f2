import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from chunksched.errors import DimensionError
from chunksched.gf2 import GF2Basis, GF2Vector, insert, is_innovative, rank_of


def V(s):
    return GF2Vector.from_string(s)


def span_size(rows, length):
    """Brute force: number of distinct XOR combinations of ``rows``."""
    seen = set()
    for mask in range(1 << len(rows)):
        acc = 0
        for i, r in enumerate(rows):
            if mask >> i & 1:
                acc ^= r
        seen.add(acc)
    return len(seen)


def test_vector_string_roundtrip():
    v = V("1101")
    assert v.to_string() == "1101"
    assert v.to_list() == [1, 1, 0, 1]
    assert GF2Vector.from_list([1, 1, 0, 1]) == v


def test_vector_addition_and_length_check():
    assert V("1100") + V("1010") == V("0110")
    with pytest.raises(DimensionError):
        V("110") + V("1100")


def test_full_basis_rejects_everything():
    b = GF2Basis(2, [V("10"), V("01")])
    assert b.rank == 2
    assert not is_innovative(b, V("11"))


def test_zero_vector_never_innovative():
    assert not is_innovative(GF2Basis(4), V("0000"))


def test_span_membership():
    b = GF2Basis(4, [V("1100"), V("0011")])
    assert not is_innovative(b, V("1111"))
    assert is_innovative(b, V("1000"))


def test_insert_and_duplicates():
    b = GF2Basis(4)
    assert insert(b, V("1000"))
    assert b.rank == 1
    b = GF2Basis(4)
    assert insert(b, V("1100"))
    assert not insert(b, V("1100"))
    assert b.rank == 1


def test_insert_all_vectors_gives_full_rank():
    vecs = list(range(16))
    random.Random(3).shuffle(vecs)
    b = GF2Basis(4)
    for v in vecs:
        b.insert(v)
    assert b.rank == 4 and b.is_full()


def test_length_mismatch_raises():
    with pytest.raises(DimensionError):
        GF2Basis(4).insert(V("101"))


def test_rank_of_small_cases():
    assert rank_of([GF2Vector.from_list([1, 0]), GF2Vector.from_list([0, 1])]) == 2
    assert rank_of([GF2Vector.from_list([1, 1]), GF2Vector.from_list([1, 1])]) == 1
    assert rank_of([]) == 0


def test_rank_of_random_5x8_matches_span_enumeration():
    rng = random.Random(11)
    rows = [rng.getrandbits(8) for _ in range(5)]
    r = rank_of([GF2Vector(x, 8) for x in rows])
    assert 2 ** r == span_size(rows, 8)


def test_random_combination_stays_in_span():
    rng = random.Random(5)
    b = GF2Basis(6, [V("110000"), V("001100")])
    for _ in range(50):
        assert not b.is_innovative(b.random_combination(rng))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), st.data())
def test_insert_keeps_invariants(length, data):
    rows = data.draw(st.lists(st.integers(0, (1 << length) - 1), max_size=12))
    b = GF2Basis(length)
    for r in rows:
        before = b.rank
        grew = b.insert(r)
        assert b.rank == before + int(grew)
        b.check_invariants()
    assert 2 ** b.rank == span_size(rows, length)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.data())
def test_innovative_iff_rank_grows(length, data):
    rows = data.draw(st.lists(st.integers(0, (1 << length) - 1), max_size=8))
    v = data.draw(st.integers(0, (1 << length) - 1))
    b = GF2Basis(length, rows)
    assert b.is_innovative(v) == (rank_of(rows + [v], length) > rank_of(rows, length))
