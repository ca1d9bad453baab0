from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bvtrunc.gf2core import (AffineSolutionSet, BitWord, Echelon, LinearSystem, MalformedSystemError,
                             dot, enumerate_set, member, rank_of, solve_affine, solve_pair)


def brute_solutions(rows, rhs, n):
    return {x for x in range(1 << n) if all(dot(x, u) == rhs for u in rows)}


def brute_rank(rows):
    span = {0}
    for r in rows:
        span |= {s ^ r for s in span}
    return len(span).bit_length() - 1


systems = st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, (1 << n) - 1), max_size=12),
                        st.sampled_from([0, 1])))


def test_dot():
    assert dot(0b1011, 0b0011) == 0
    assert dot(0b1011, 0b0010) == 1
    assert dot(0, 0xFF) == 0


def test_bitword_msb_first():
    w = BitWord(0b1000_0001, 8)
    assert w.bit(1) == 1 and w.bit(2) == 0 and w.bit(8) == 1
    assert str(w) == "10000001"
    assert w.hex() == "81"
    assert BitWord(0b10, 2).concat(BitWord(0b011, 3)) == BitWord(0b10011, 5)
    with pytest.raises(ValueError):
        BitWord(0x100, 8)
    with pytest.raises(MalformedSystemError):
        BitWord(1, 4) ^ BitWord(1, 5)


@given(systems)
def test_solution_set_matches_brute_force(sys_):
    n, rows, rhs = sys_
    s = solve_affine(LinearSystem.of(rows, rhs, n))
    want = brute_solutions(rows, rhs, n)
    members, truncated = enumerate_set(s)
    assert not truncated
    assert set(members) == want
    assert len(members) == len(want) == len(s)
    for x in range(1 << n):
        assert member(s, x) == (x in want)


@given(systems)
def test_rank_matches_span_size(sys_):
    n, rows, _ = sys_
    assert rank_of(rows, n) == brute_rank(rows)
    pair, rank = solve_pair(rows, n)
    assert rank == brute_rank(rows)
    assert pair.zero.dimension == n - rank


@given(systems)
def test_coset_pair_lookup(sys_):
    n, rows, _ = sys_
    pair, _ = solve_pair(rows, n)
    z0, z1 = brute_solutions(rows, 0, n), brute_solutions(rows, 1, n)
    for x in range(1 << n):
        want = 0 if x in z0 else 1 if x in z1 else None
        assert pair.lookup(x) == want


def test_inconsistent_system_is_empty():
    # zero row with rhs 1 reads 0 = 1
    s = solve_affine(LinearSystem.of([0b01, 0], 1, 2))
    assert s.empty and len(s) == 0 and s.dimension == -1
    assert not s.nontrivial()
    assert enumerate_set(s) == ([], False)


def test_no_equations_gives_full_space():
    s = solve_affine(LinearSystem.of([], 0, 5))
    assert s.is_full and len(s) == 32


def test_enumeration_cap_and_truncation():
    s = solve_affine(LinearSystem.of([], 0, 10))
    members, truncated = s.enumerate(cap=100)
    assert truncated and len(members) == 100 and len(set(members)) == 100
    with pytest.raises(ValueError):
        s.enumerate(cap=0)


def test_malformed_inputs():
    with pytest.raises(MalformedSystemError):
        LinearSystem.of([0b100], 0, 2)
    with pytest.raises(MalformedSystemError):
        LinearSystem.of([1], 2, 2)
    with pytest.raises(MalformedSystemError):
        LinearSystem.of([BitWord(1, 3)], 0, 4)
    with pytest.raises(MalformedSystemError):
        LinearSystem.of([1], 0, 0)


def test_echelon_keeps_at_most_n_pivots():
    ech = Echelon(4)
    for u in itertools.product(range(16), repeat=2):
        ech.add(u[0] ^ u[1], 0)
    assert ech.rank == 4 and len(ech.pivots) == 4


def test_particular_solution_satisfies_system():
    rows = [0b1100, 0b0110, 0b0011]
    s = solve_affine(LinearSystem.of(rows, 1, 4))
    assert isinstance(s, AffineSolutionSet)
    assert LinearSystem.of(rows, 1, 4).satisfied_by(s.particular)
