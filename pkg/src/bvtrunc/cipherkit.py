"""Toy block ciphers with vectorised reduced-round access.

Conventions used everywhere in the package:

* a block is an ``n``-bit int, a master key an ``m``-bit int;
* component ``j`` (1-based) is bit ``n - j`` of the LSB-indexed word, i.e.
  component 1 is the most significant bit;
* the joint input of a component function is ``(x << m) | k``, so ``x``
  occupies the high ``n`` bits of the ``n + m``-bit index.

``encrypt(x, k, t)`` runs rounds ``1..t``. ``decrypt_suffix(y, k, t1)``
inverts rounds ``r, r-1, ..., t1+1``. When a cipher has final whitening,
the whitening key is part of round ``r`` for both directions.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

MAX_JOINT_BITS = 28

TOY_SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)
IDENTITY_SBOX = tuple(range(16))

FORWARD = "forward"
INVERSE = "inverse"
DIRECTIONS = (FORWARD, INVERSE)


class ResourceGuardError(RuntimeError):
    """Raised instead of silently attempting an infeasible exhaustive computation."""


def check_joint_size(n: int, m: int, limit: int = MAX_JOINT_BITS) -> None:
    if n + m > limit:
        raise ResourceGuardError(
            f"n + m = {n + m} exceeds the {limit}-bit truth-table guard; "
            "shrink the cipher or use sampled mode"
        )


def rotl(v, s: int, width: int):
    s %= width
    mask = (1 << width) - 1
    if s == 0:
        return v & mask
    return ((v << s) | (v >> (width - s))) & mask


def _words(v) -> np.ndarray:
    return np.asarray(v, dtype=np.int64)


def _invert_table(table: np.ndarray) -> np.ndarray:
    inv = np.empty_like(table)
    inv[table] = np.arange(table.size, dtype=table.dtype)
    return inv


@dataclass(frozen=True)
class KeySchedule:
    """``k_i = rotl_m(k, rotate * i) ^ (i if xor_index)``, truncated to ``out_bits``."""

    rotate: int = 1
    xor_index: bool = True

    def round_key(self, k, i: int, m: int, out_bits: int):
        v = rotl(k, self.rotate * i, m)
        if self.xor_index:
            v = v ^ i
        return v & ((1 << out_bits) - 1)

    def describe(self) -> dict[str, Any]:
        return {"rotate": self.rotate, "xor_index": self.xor_index}


class BlockCipher:
    """Base class: subclasses provide the vectorised round primitives."""

    name: str
    n: int
    m: int
    rounds: int
    whitening: bool = False

    def __init__(self) -> None:
        self._cache: dict[tuple[int, str], np.ndarray] = {}
        self._lock = threading.Lock()

    # -- round structure, overridden by subclasses --------------------------
    def _round(self, x: np.ndarray, rk: np.ndarray, i: int) -> np.ndarray:
        raise NotImplementedError

    def _inv_round(self, y: np.ndarray, rk: np.ndarray, i: int) -> np.ndarray:
        raise NotImplementedError

    def round_key(self, k, i: int):
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        return {"name": self.name, "n": self.n, "m": self.m, "rounds": self.rounds}

    # -- public API ----------------------------------------------------------
    def key_schedule(self, k: int) -> list[int]:
        """Round keys ``k_1..k_r`` (plus ``k_{r+1}`` when whitening)."""
        self._check_key(k)
        count = self.rounds + (1 if self.whitening else 0)
        return [int(self.round_key(int(k), i)) for i in range(1, count + 1)]

    def encrypt(self, x, k, t: int | None = None):
        """Rounds ``1..t`` (default all ``r``). Accepts ints or arrays."""
        t = self.rounds if t is None else t
        if not 1 <= t <= self.rounds:
            raise ValueError(f"t must be in 1..{self.rounds}, got {t}")
        scalar = np.isscalar(x) and np.isscalar(k)
        x, k = np.broadcast_arrays(_words(x), _words(k))
        y = x.copy()
        for i in range(1, t + 1):
            y = self._round(y, self.round_key(k, i), i)
        if t == self.rounds and self.whitening:
            y = y ^ self.round_key(k, self.rounds + 1)
        return int(y) if scalar else y

    def decrypt_suffix(self, y, k, t1: int):
        """Invert rounds ``r..t1+1``; ``t1 = 0`` is full decryption."""
        if not 0 <= t1 < self.rounds:
            raise ValueError(f"t1 must be in 0..{self.rounds - 1}, got {t1}")
        scalar = np.isscalar(y) and np.isscalar(k)
        y, k = np.broadcast_arrays(_words(y), _words(k))
        x = y.copy()
        if self.whitening:
            x = x ^ self.round_key(k, self.rounds + 1)
        for i in range(self.rounds, t1, -1):
            x = self._inv_round(x, self.round_key(k, i), i)
        return int(x) if scalar else x

    def reduced(self, x, k, t: int, direction: str = FORWARD):
        """``Enc^t`` forward, or the inverse of the last ``t`` rounds."""
        if direction == FORWARD:
            return self.encrypt(x, k, t)
        if direction == INVERSE:
            if not 1 <= t <= self.rounds:
                raise ValueError(f"t must be in 1..{self.rounds}, got {t}")
            return self.decrypt_suffix(x, k, self.rounds - t)
        raise ValueError(f"unknown direction {direction!r}")

    # -- last-round key recovery hooks ----------------------------------------
    @property
    def last_key_bits(self) -> int:
        return self.n

    def last_round_key(self, k: int) -> int:
        """The subkey a one-round suffix attack targets."""
        if self.whitening:
            return int(self.round_key(k, self.rounds + 1))
        return int(self.round_key(k, self.rounds))

    def peel_last_round(self, y: np.ndarray, candidate: np.ndarray) -> np.ndarray:
        """Undo round ``r`` with a guessed last-round subkey, up to a key-independent XOR."""
        if self.whitening:
            # k_r is XORed before the S-layer; it cancels in differences
            return self._inv_round(y ^ candidate, np.zeros_like(candidate), self.rounds)
        return self._inv_round(y, candidate, self.rounds)

    # -- truth tables ----------------------------------------------------------
    def _check_key(self, k) -> None:
        k = int(k)
        if k < 0 or k >> self.m:
            raise ValueError(f"key 0x{k:x} does not fit in {self.m} bits")

    def outputs(self, t: int, direction: str = FORWARD) -> np.ndarray:
        """Reduced-cipher output for every joint input ``(x << m) | k``, cached."""
        check_joint_size(self.n, self.m)
        key = (t, direction)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        z = np.arange(1 << (self.n + self.m), dtype=np.int64)
        out = self.reduced(z >> self.m, z & ((1 << self.m) - 1), t, direction)
        out.setflags(write=False)
        with self._lock:
            return self._cache.setdefault(key, out)

    def table(self, t: int, direction: str = FORWARD) -> np.ndarray:
        """Per-key permutation table, shape ``(2^m, 2^n)``: ``[k, x] -> Enc``."""
        return self.outputs(t, direction).reshape(1 << self.n, 1 << self.m).T

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, n={self.n}, m={self.m}, r={self.rounds})"


class SPNCipher(BlockCipher):
    """Key XOR, nibble S-layer, bit permutation.

    ``perm[i]`` is the destination of source bit ``i`` (LSB = 0).
    ``skip`` maps a 1-based round to a mask of S-box positions that are
    passed through unchanged in that round (bit ``c`` = S-box ``c``,
    counted from the least significant nibble).
    """

    def __init__(
        self,
        name: str,
        n: int,
        m: int,
        rounds: int,
        sbox: Sequence[int] = TOY_SBOX,
        perm: Sequence[int] | None = None,
        schedule: KeySchedule = KeySchedule(),
        skip: Mapping[int, int] | None = None,
        whitening: bool = False,
    ) -> None:
        super().__init__()
        s = (len(sbox) - 1).bit_length()
        if len(sbox) != 1 << s or sorted(sbox) != list(range(len(sbox))):
            raise ValueError("S-box must be a permutation of 0..2^s-1")
        if n % s:
            raise ValueError(f"block size {n} is not a multiple of the S-box width {s}")
        perm = list(perm) if perm is not None else [(i + 2) % n for i in range(n)]
        if sorted(perm) != list(range(n)):
            raise ValueError("perm must be a permutation of bit positions 0..n-1")
        if rounds < 1:
            raise ValueError("rounds must be >= 1")
        self.name, self.n, self.m, self.rounds = name, n, m, rounds
        self.sbox = tuple(sbox)
        self.sbox_bits = s
        self.perm = tuple(perm)
        self.schedule = schedule
        self.skip = {int(r): int(mask) for r, mask in (skip or {}).items()}
        self.whitening = whitening
        if n > 20:
            raise ResourceGuardError("SPN tables are built for n <= 20")
        self._tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for i in range(1, rounds + 1):
            fwd = self._perm_table()[self._slayer_table(self.skip.get(i, 0))]
            self._tables[i] = (fwd, _invert_table(fwd))

    def _slayer_table(self, skip_mask: int) -> np.ndarray:
        v = np.arange(1 << self.n, dtype=np.int64)
        sbox = np.array(self.sbox, dtype=np.int64)
        mask = (1 << self.sbox_bits) - 1
        out = np.zeros_like(v)
        for c in range(self.n // self.sbox_bits):
            nib = (v >> (c * self.sbox_bits)) & mask
            if not (skip_mask >> c) & 1:
                nib = sbox[nib]
            out |= nib << (c * self.sbox_bits)
        return out

    def _perm_table(self) -> np.ndarray:
        v = np.arange(1 << self.n, dtype=np.int64)
        out = np.zeros_like(v)
        for src, dst in enumerate(self.perm):
            out |= ((v >> src) & 1) << dst
        return out

    def round_key(self, k, i: int):
        return self.schedule.round_key(k, i, self.m, self.n)

    def _round(self, x, rk, i):
        return self._tables[i][0][x ^ rk]

    def _inv_round(self, y, rk, i):
        return self._tables[i][1][y] ^ rk

    def describe(self) -> dict[str, Any]:
        d = super().describe()
        d.update(
            kind="spn",
            sbox=list(self.sbox),
            perm=list(self.perm),
            schedule=self.schedule.describe(),
            skip={str(r): mask for r, mask in sorted(self.skip.items())},
            whitening=self.whitening,
        )
        return d


class FeistelCipher(BlockCipher):
    """Balanced Feistel: ``(L, R) -> (R, L ^ S(R ^ rk))`` with ``n/2``-bit branches."""

    def __init__(
        self,
        name: str,
        n: int,
        m: int,
        rounds: int,
        sbox: Sequence[int] = TOY_SBOX,
        schedule: KeySchedule = KeySchedule(),
    ) -> None:
        super().__init__()
        if n % 2 or len(sbox) != 1 << (n // 2):
            raise ValueError("Feistel S-box must map n/2 bits")
        self.name, self.n, self.m, self.rounds = name, n, m, rounds
        self.half = n // 2
        self.sbox = tuple(sbox)
        self._s = np.array(sbox, dtype=np.int64)
        self.schedule = schedule

    def round_key(self, k, i: int):
        return self.schedule.round_key(k, i, self.m, self.half)

    def _round(self, x, rk, i):
        h = self.half
        left, right = x >> h, x & ((1 << h) - 1)
        return (right << h) | (left ^ self._s[right ^ rk])

    def _inv_round(self, y, rk, i):
        h = self.half
        left, right = y >> h, y & ((1 << h) - 1)
        return ((right ^ self._s[left ^ rk]) << h) | left

    @property
    def last_key_bits(self) -> int:
        return self.half

    def peel_last_round(self, y, candidate):
        return self._inv_round(y, candidate, self.rounds)

    def describe(self) -> dict[str, Any]:
        d = super().describe()
        d.update(kind="feistel", sbox=list(self.sbox), schedule=self.schedule.describe())
        return d


class RandomPermutationCipher(BlockCipher):
    """One seeded Fisher-Yates permutation per key; a single 'round'."""

    def __init__(self, name: str, n: int, m: int, seed: int = 0) -> None:
        super().__init__()
        check_joint_size(n, m)
        self.name, self.n, self.m, self.rounds = name, n, m, 1
        self.seed = seed
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        self._fwd = np.stack([rng.permutation(1 << n) for _ in range(1 << m)]).astype(np.int64)
        self._inv = np.empty_like(self._fwd)
        rows = np.arange(1 << m)[:, None]
        self._inv[rows, self._fwd] = np.arange(1 << n, dtype=np.int64)[None, :]

    def round_key(self, k, i: int):
        return k

    def _round(self, x, rk, i):
        return self._fwd[rk, x]

    def _inv_round(self, y, rk, i):
        return self._inv[rk, y]

    def describe(self) -> dict[str, Any]:
        d = super().describe()
        d.update(kind="randomperm", seed=self.seed)
        return d


# -- built-ins -----------------------------------------------------------------

def toy8(rounds: int = 4, *, sbox: Sequence[int] = TOY_SBOX, rotation: int = 2,
         whitening: bool = False, name: str = "TOY8") -> SPNCipher:
    """8-bit SPN, round ``x -> rotl(S(x ^ k_i), rotation)``."""
    if not 1 <= rounds <= 8:
        raise ValueError("TOY8 supports 1..8 rounds")
    perm = [(i + rotation) % 8 for i in range(8)]
    return SPNCipher(name, 8, 8, rounds, sbox=sbox, perm=perm, whitening=whitening)


def toy8_identity(rounds: int = 1, *, rotation: int = 0) -> SPNCipher:
    """TOY8 with the identity S-box: every round is affine."""
    return toy8(rounds, sbox=IDENTITY_SBOX, rotation=rotation, name="TOY8-IDENTITY")


def toy_feistel(rounds: int = 4) -> FeistelCipher:
    return FeistelCipher("TOYFEISTEL", 8, 8, rounds)


HIGH_NIBBLE = 0b10


def planted(rounds: int = 3, t_star: int = 2, *, weak_rounds: Sequence[int] | None = None,
            skip_mask: int = HIGH_NIBBLE, whitening: bool = True) -> SPNCipher:
    """TOY8 whose S-layer passes the high nibble through in the weak rounds.

    Weak rounds default to ``1..t_star``. Final whitening is on so that a
    one-round suffix attack has a subkey to recover.
    """
    weak = range(1, t_star + 1) if weak_rounds is None else weak_rounds
    c = SPNCipher("PLANTED", 8, 8, rounds, sbox=TOY_SBOX,
                  perm=[(i + 2) % 8 for i in range(8)],
                  skip={r: skip_mask for r in weak}, whitening=whitening)
    c.t_star = t_star
    return c


def random_perm(n: int = 8, m: int = 8, seed: int = 0) -> RandomPermutationCipher:
    return RandomPermutationCipher("RANDOMPERM", n, m, seed)


def deterministic_differences(cipher: SPNCipher, t: int) -> dict[int, int]:
    """Input differences that cross rounds ``1..t`` with probability one.

    Only tracks differences that never touch an active S-box, so the map is
    ``a -> P(...P(a))`` restricted to those ``a``.
    """
    out = {}
    s = cipher.sbox_bits
    boxes = cipher.n // s
    ptab = cipher._perm_table()
    for a in range(1, 1 << cipher.n):
        delta = a
        for i in range(1, t + 1):
            skip = cipher.skip.get(i, 0)
            if any((delta >> (c * s)) & ((1 << s) - 1) and not (skip >> c) & 1
                   for c in range(boxes)):
                break
            delta = int(ptab[delta])
        else:
            out[a] = delta
    return out


def suffix_key_ambiguity(cipher: BlockCipher, a: int, delta: int, k: int = 0) -> int:
    """Last-round subkey guesses consistent with ``a -> delta`` on every plaintext pair.

    1 means a one-round suffix attack can single out the subkey; larger
    values count guesses no amount of data separates from the true one.
    """
    x = np.arange(1 << cipher.n, dtype=np.int64)
    c0, c1 = cipher.encrypt(x, k), cipher.encrypt(x ^ a, k)
    cand = np.arange(1 << cipher.last_key_bits, dtype=np.int64)[:, None]
    diff = cipher.peel_last_round(c0[None, :], cand) ^ cipher.peel_last_round(c1[None, :], cand)
    return int(np.count_nonzero((diff == delta).all(axis=1)))


def planted_differential(cipher: SPNCipher, t: int | None = None) -> tuple[int, int]:
    """The planted probability-one differential ``(a, delta)`` of ``Enc^t``.

    When one suffix round remains, prefers differences that pin down the
    last-round subkey; then the most active S-boxes in ``delta``; then the
    smallest ``a``.
    """
    t = getattr(cipher, "t_star", None) if t is None else t
    if t is None:
        raise ValueError("cipher carries no planted round count")
    det = deterministic_differences(cipher, t)
    if not det:
        raise ValueError(f"{cipher.name} has no probability-one differential over {t} rounds")
    s = cipher.sbox_bits

    def active(d: int) -> int:
        return sum(1 for c in range(cipher.n // s) if (d >> (c * s)) & ((1 << s) - 1))

    def ambiguity(v: int) -> int:
        return suffix_key_ambiguity(cipher, v, det[v]) if cipher.rounds == t + 1 else 0

    a = min(det, key=lambda v: (ambiguity(v), -active(det[v]), v))
    return a, det[a]


# -- construction from a config entry ----------------------------------------

BUILTINS = ("TOY8", "TOY8-IDENTITY", "TOYFEISTEL", "PLANTED", "RANDOMPERM")


def make_cipher(spec: Mapping[str, Any] | str) -> BlockCipher:
    """Build a cipher from a name or a declarative mapping.

    Custom entries use ``kind = "spn"`` or ``"feistel"`` with explicit
    ``sbox``, ``perm`` (destination bit per source bit), ``schedule``
    (``rotate``/``xor_index``) and round count.
    """
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = str(spec.get("name", "")).upper()
    kind = spec.get("kind")
    rounds = int(spec.get("rounds", 4))
    if kind is None:
        if name == "TOY8":
            return toy8(rounds, whitening=bool(spec.get("whitening", False)))
        if name == "TOY8-IDENTITY":
            return toy8_identity(rounds, rotation=int(spec.get("rotation", 0)))
        if name == "TOYFEISTEL":
            return toy_feistel(rounds)
        if name == "PLANTED":
            return planted(int(spec.get("rounds", 3)), int(spec.get("t_star", 2)),
                           weak_rounds=spec.get("weak_rounds"),
                           skip_mask=int(spec.get("skip_mask", HIGH_NIBBLE)),
                           whitening=bool(spec.get("whitening", True)))
        if name == "RANDOMPERM":
            return random_perm(int(spec.get("n", 8)), int(spec.get("m", 8)), int(spec.get("seed", 0)))
        raise ValueError(f"unknown cipher {spec.get('name')!r}; built-ins are {', '.join(BUILTINS)}")
    sched = KeySchedule(**spec.get("schedule", {}))
    if kind == "spn":
        skip = {int(r): int(v) for r, v in spec.get("skip", {}).items()}
        return SPNCipher(spec.get("name", "CUSTOM"), int(spec["n"]), int(spec["m"]), rounds,
                         sbox=spec["sbox"], perm=spec.get("perm"), schedule=sched,
                         skip=skip, whitening=bool(spec.get("whitening", False)))
    if kind == "feistel":
        return FeistelCipher(spec.get("name", "CUSTOM"), int(spec["n"]), int(spec["m"]),
                             rounds, sbox=spec["sbox"], schedule=sched)
    raise ValueError(f"unknown cipher kind {kind!r}")


# -- component functions ---------------------------------------------------------

@dataclass(frozen=True)
class ComponentFunction:
    """Bit ``j`` of the reduced cipher as a Boolean function of ``x || k``."""

    cipher: BlockCipher = field(compare=False)
    j: int
    t: int
    direction: str = FORWARD

    def __post_init__(self) -> None:
        if not 1 <= self.j <= self.cipher.n:
            raise ValueError(f"component index {self.j} outside 1..{self.cipher.n}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if not 1 <= self.t <= self.cipher.rounds:
            raise ValueError(f"t must be in 1..{self.cipher.rounds}")

    @property
    def input_bits(self) -> int:
        return self.cipher.n + self.cipher.m

    def __call__(self, x: int, k: int) -> int:
        y = self.cipher.reduced(x, k, self.t, self.direction)
        return (int(y) >> (self.cipher.n - self.j)) & 1


def component_truth_table(cf: ComponentFunction) -> np.ndarray:
    """``uint8`` table of length ``2^(n+m)``, indexed by ``(x << m) | k``."""
    c = cf.cipher
    out = c.outputs(cf.t, cf.direction)
    return ((out >> (c.n - cf.j)) & 1).astype(np.uint8)


def key_schedule(cipher: BlockCipher, k: int) -> list[int]:
    return cipher.key_schedule(k)


def encrypt_reduced(cipher: BlockCipher, x: int, k: int, t: int) -> int:
    return cipher.encrypt(int(x), int(k), t)


def decrypt_suffix(cipher: BlockCipher, y: int, k: int, t1: int) -> int:
    return cipher.decrypt_suffix(int(y), int(k), t1)
