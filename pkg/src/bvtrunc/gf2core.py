"""Linear algebra over GF(2) on bit-packed integers.

Vectors are Python ints; bit ``i`` (LSB = 0) is coordinate ``i``. The dot
product is the parity of the bitwise AND, so any consistent bit ordering
works as long as rows and unknowns share it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

DEFAULT_CAP = 1 << 16
MAX_UNKNOWNS = 64


class MalformedSystemError(ValueError):
    """A row or probe does not fit the declared number of unknowns."""


def dot(a: int, b: int) -> int:
    return (a & b).bit_count() & 1


@dataclass(frozen=True)
class BitWord:
    """Fixed-width bit string. Bits above ``width`` must be zero."""

    bits: int
    width: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_UNKNOWNS:
            raise ValueError(f"width must be in 1..{MAX_UNKNOWNS}, got {self.width}")
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError(f"0x{self.bits:x} does not fit in {self.width} bits")

    def _check(self, other: BitWord) -> None:
        if other.width != self.width:
            raise MalformedSystemError(f"width mismatch: {self.width} vs {other.width}")

    def __xor__(self, other: BitWord) -> BitWord:
        self._check(other)
        return BitWord(self.bits ^ other.bits, self.width)

    def dot(self, other: BitWord) -> int:
        self._check(other)
        return dot(self.bits, other.bits)

    def __int__(self) -> int:
        return self.bits

    def __index__(self) -> int:
        return self.bits

    def bit(self, j: int) -> int:
        """Bit ``j`` in 1-based MSB-first numbering (bit 1 is the top bit)."""
        if not 1 <= j <= self.width:
            raise IndexError(j)
        return (self.bits >> (self.width - j)) & 1

    def hex(self) -> str:
        return f"{self.bits:0{(self.width + 3) // 4}x}"

    def __str__(self) -> str:
        return format(self.bits, f"0{self.width}b")

    def concat(self, low: BitWord) -> BitWord:
        """``self || low`` with ``self`` in the high bits."""
        return BitWord((self.bits << low.width) | low.bits, self.width + low.width)


def _as_int(v: int | BitWord, unknowns: int) -> int:
    if isinstance(v, BitWord):
        if v.width != unknowns:
            raise MalformedSystemError(f"width {v.width} does not match {unknowns} unknowns")
        return v.bits
    v = int(v)
    if v < 0 or v >> unknowns:
        raise MalformedSystemError(f"0x{v:x} has bits above width {unknowns}")
    return v


@dataclass(frozen=True)
class LinearSystem:
    """The equations ``x . u = rhs`` for every ``u`` in ``rows``."""

    rows: tuple[int, ...]
    rhs: int
    unknowns: int

    def __post_init__(self) -> None:
        if not 1 <= self.unknowns <= MAX_UNKNOWNS:
            raise MalformedSystemError(f"unknowns must be in 1..{MAX_UNKNOWNS}")
        if self.rhs not in (0, 1):
            raise MalformedSystemError("rhs must be 0 or 1")
        object.__setattr__(self, "rows", tuple(_as_int(r, self.unknowns) for r in self.rows))

    @classmethod
    def of(cls, rows: Iterable[int | BitWord], rhs: int, unknowns: int) -> LinearSystem:
        return cls(tuple(rows), rhs, unknowns)

    def satisfied_by(self, x: int) -> bool:
        return all(dot(x, u) == self.rhs for u in self.rows)


class Echelon:
    """Incremental row reduction of augmented rows ``(u, rhs)``.

    Pivots are kept fully reduced, so at most ``unknowns`` rows are ever
    stored no matter how many equations are added.
    """

    def __init__(self, unknowns: int) -> None:
        self.unknowns = unknowns
        self.pivots: dict[int, tuple[int, int]] = {}
        self.inconsistent = False

    def add(self, u: int, rhs: int) -> None:
        for p, (row, b) in self.pivots.items():
            if (u >> p) & 1:
                u ^= row
                rhs ^= b
        if u == 0:
            if rhs:
                self.inconsistent = True
            return
        p = u.bit_length() - 1
        for q, (row, b) in list(self.pivots.items()):
            if (row >> p) & 1:
                self.pivots[q] = (row ^ u, b ^ rhs)
        self.pivots[p] = (u, rhs)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def solution_set(self) -> AffineSolutionSet:
        n = self.unknowns
        if self.inconsistent:
            return AffineSolutionSet(True, 0, (), n)
        particular = 0
        for p, (_, b) in self.pivots.items():
            if b:
                particular |= 1 << p
        basis = []
        for f in range(n):
            if f in self.pivots:
                continue
            v = 1 << f
            for p, (row, _) in self.pivots.items():
                if (row >> f) & 1:
                    v |= 1 << p
            basis.append(v)
        return AffineSolutionSet(False, particular, tuple(basis), n)


def rank_of(vectors: Iterable[int], unknowns: int) -> int:
    ech = Echelon(unknowns)
    for v in vectors:
        ech.add(v, 0)
    return ech.rank


@dataclass(frozen=True)
class AffineSolutionSet:
    """``particular + span(basis)``, or the empty set."""

    empty: bool
    particular: int
    basis: tuple[int, ...]
    unknowns: int

    @property
    def dimension(self) -> int:
        return -1 if self.empty else len(self.basis)

    def __len__(self) -> int:
        return 0 if self.empty else 1 << len(self.basis)

    @property
    def is_full(self) -> bool:
        return not self.empty and len(self.basis) == self.unknowns

    def nontrivial(self) -> bool:
        """True when the set holds some vector other than zero."""
        if self.empty:
            return False
        return bool(self.basis) or self.particular != 0

    @cached_property
    def _reduced_basis(self) -> list[tuple[int, int]]:
        ech = Echelon(self.unknowns)
        for b in self.basis:
            ech.add(b, 0)
        return [(p, row) for p, (row, _) in ech.pivots.items()]

    def contains(self, v: int | BitWord) -> bool:
        v = _as_int(v, self.unknowns)
        if self.empty:
            return False
        # v is a member iff v ^ particular reduces to zero against the basis
        w = v ^ self.particular
        for p, row in self._reduced_basis:
            if (w >> p) & 1:
                w ^= row
        return w == 0

    __contains__ = contains

    def enumerate(self, cap: int = DEFAULT_CAP) -> tuple[list[int], bool]:
        """Members in Gray-code order over basis combinations.

        Returns ``(members, truncated)`` where ``truncated`` is set when the
        set holds more than ``cap`` members.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        if self.empty:
            return [], False
        k = len(self.basis)
        total = 1 << k
        count = min(total, cap)
        out = [self.particular]
        cur = self.particular
        for i in range(1, count):
            # bit that flips between gray(i-1) and gray(i)
            cur ^= self.basis[(i & -i).bit_length() - 1]
            out.append(cur)
        return out, total > cap


def solve_affine(system: LinearSystem) -> AffineSolutionSet:
    """Exact solution set of ``{x . u = rhs | u in rows}``."""
    ech = Echelon(system.unknowns)
    for u in system.rows:
        ech.add(u, system.rhs)
    return ech.solution_set()


def member(s: AffineSolutionSet, v: int | BitWord) -> bool:
    return s.contains(v)


def enumerate_set(s: AffineSolutionSet, cap: int = DEFAULT_CAP) -> tuple[list[int], bool]:
    return s.enumerate(cap)


@dataclass(frozen=True)
class CosetPair:
    """``Z^0 u Z^1`` kept as two affine pieces; the union is not affine."""

    zero: AffineSolutionSet
    one: AffineSolutionSet

    def lookup(self, v: int) -> int | None:
        """The bit ``i`` with ``v`` in ``Z^i``, or None if ``v`` is in neither."""
        if self.zero.contains(v):
            return 0
        if self.one.contains(v):
            return 1
        return None

    def __contains__(self, v: int) -> bool:
        return self.lookup(v) is not None

    def nontrivial(self) -> bool:
        return self.zero.nontrivial() or self.one.nontrivial()

    def members(self, cap: int = DEFAULT_CAP) -> tuple[list[int], bool]:
        a, ta = self.zero.enumerate(cap)
        b, tb = self.one.enumerate(cap)
        return a + b, ta or tb


def solve_pair(rows: Sequence[int], unknowns: int) -> tuple[CosetPair, int]:
    """Solve the rhs=0 and rhs=1 systems over the same rows; also return the rank."""
    rows = tuple(rows)
    zero = solve_affine(LinearSystem(rows, 0, unknowns))
    one = solve_affine(LinearSystem(rows, 1, unknowns))
    return CosetPair(zero, one), unknowns - zero.dimension
