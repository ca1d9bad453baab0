"""Truncated differential search over all component functions of ``Enc^t``.

Each component ``Enc^t[j]`` is treated as a Boolean function of the joint
input ``x || k``. BV samples of it are projected onto their first ``n``
coordinates (the plaintext part), and the systems ``a.u = 0`` and
``a.u = 1`` over those projections give ``Z_j^0`` and ``Z_j^1``. A common
nonzero ``a`` shared by ``d`` components yields a truncated differential
predicting those ``d`` output bits.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import streams
from .cipherkit import FORWARD, BlockCipher, ComponentFunction, check_joint_size, component_truth_table
from .gf2core import DEFAULT_CAP, CosetPair, solve_pair
from .walshsim import BVSampler, walsh_spectrum

ASCENDING = "ascending"
PREFER_MAX_D = "prefer-max-d"
MODES = (ASCENDING, PREFER_MAX_D)


def exact(v) -> Fraction:
    """Decimal-faithful rational: 0.9 means 9/10, not the nearest double."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


class TruncatedDifference:
    """A length-``n`` trit vector over ``{0, 1, *}``.

    Position 1 is the most significant bit. ``mask`` marks predicted bits,
    ``value`` holds their predicted values (zero elsewhere).
    """

    __slots__ = ("n", "mask", "value")

    def __init__(self, n: int, mask: int, value: int) -> None:
        full = (1 << n) - 1
        if mask & ~full or value & ~mask:
            raise ValueError("value bits must lie inside the predicted mask")
        self.n, self.mask, self.value = n, mask, value

    @classmethod
    def parse(cls, trits: str) -> TruncatedDifference:
        trits = trits.strip()
        mask = value = 0
        for ch in trits:
            mask <<= 1
            value <<= 1
            if ch in "01":
                mask |= 1
                value |= int(ch)
            elif ch != "*":
                raise ValueError(f"bad trit {ch!r} in {trits!r}")
        return cls(len(trits), mask, value)

    @classmethod
    def exact(cls, n: int, delta: int) -> TruncatedDifference:
        return cls(n, (1 << n) - 1, delta)

    @property
    def d(self) -> int:
        return self.mask.bit_count()

    def __str__(self) -> str:
        out = []
        for pos in range(self.n - 1, -1, -1):
            out.append(str((self.value >> pos) & 1) if (self.mask >> pos) & 1 else "*")
        return "".join(out)

    def __repr__(self) -> str:
        return f"TruncatedDifference({str(self)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, TruncatedDifference) and (self.n, self.mask, self.value) == (
            other.n, other.mask, other.value)

    def __hash__(self) -> int:
        return hash((self.n, self.mask, self.value))

    def matches(self, delta):
        """``delta ~ self``; works elementwise on arrays."""
        if isinstance(delta, np.ndarray):
            return (delta & self.mask) == self.value
        return (int(delta) & self.mask) == self.value

    def concretize(self, rng: np.random.Generator | None = None) -> int:
        """A member of the Omega-set: unpredicted bits zero, or random if ``rng`` given."""
        if rng is None:
            return self.value
        free = ((1 << self.n) - 1) & ~self.mask
        return self.value | (int(rng.integers(0, 1 << self.n)) & free)

    def omega(self) -> np.ndarray:
        """All members of the Omega-set (``2^(n-d)`` words)."""
        free = [p for p in range(self.n) if not (self.mask >> p) & 1]
        out = np.full(1 << len(free), self.value, dtype=np.int64)
        idx = np.arange(out.size, dtype=np.int64)
        for i, p in enumerate(free):
            out |= ((idx >> i) & 1) << p
        return out


@dataclass(frozen=True)
class SNParams:
    L: int
    p: float
    d: int
    lam: float = 1.0

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.L, 1 << self.d)


def signal_to_noise(params: SNParams) -> float:
    """``L * p / (alpha * lambda)``."""
    if params.L < 1 or not 0 <= params.p <= 1:
        raise ValueError("need L >= 1 and 0 <= p <= 1")
    denom = params.alpha * exact(params.lam)
    if denom == 0:
        raise ZeroDivisionError("alpha * lambda is zero")
    return float(params.L * exact(params.p) / denom)


def sn_gate(d: int, sigma) -> bool:
    """The emission condition ``2^d * sigma > 1``."""
    return (1 << d) * exact(sigma) > 1


def _check_sigma_tau(sigma, tau) -> tuple[Fraction, Fraction]:
    s, t = exact(sigma), exact(tau)
    if not 0 < s < 1:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if t < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    return s, t


def sample_budget_exact(n: int, sigma, tau) -> Fraction:
    s, t = _check_sigma_tau(sigma, tau)
    return t * t * n ** 3 / (2 * (1 - s) ** 2)


def sample_budget(n: int, sigma, tau) -> int:
    """``q(n) = ceil(tau^2 n^3 / (2 (1 - sigma)^2))``."""
    return math.ceil(sample_budget_exact(n, sigma, tau))


@dataclass
class TruncatedDifferential:
    a: int
    b: TruncatedDifference
    sigma: float
    tau: float
    q_used: int
    cipher: str
    t: int
    direction: str = FORWARD
    mode: str = ASCENDING
    subscripts: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.a == 0:
            raise ValueError("input difference must be nonzero")
        if not sn_gate(self.d, self.sigma):
            raise ValueError(f"2^d * sigma = {(1 << self.d) * self.sigma} does not exceed 1")

    @property
    def n(self) -> int:
        return self.b.n

    @property
    def d(self) -> int:
        return self.b.d

    def to_dict(self) -> dict[str, Any]:
        return {
            "cipher": self.cipher,
            "t": self.t,
            "direction": self.direction,
            "sigma": self.sigma,
            "tau": self.tau,
            "q": self.q_used,
            "mode": self.mode,
            "a": f"{self.a:0{(self.n + 3) // 4}x}",
            "b": str(self.b),
            "d": self.d,
            "subscripts": list(self.subscripts),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TruncatedDifferential:
        return cls(
            a=int(d["a"], 16),
            b=TruncatedDifference.parse(d["b"]),
            sigma=d["sigma"],
            tau=d["tau"],
            q_used=int(d["q"]),
            cipher=d["cipher"],
            t=int(d["t"]),
            direction=d.get("direction", FORWARD),
            mode=d.get("mode", ASCENDING),
            subscripts=tuple(d.get("subscripts", ())),
        )


@dataclass
class ComponentSamples:
    j: int
    pair: CosetPair
    rank: int
    projected: dict[int, int]  # first-n-bit projection -> multiplicity
    full: dict[int, int] | None  # full-width sample -> multiplicity, when N <= 20

    @property
    def degenerate(self) -> bool:
        return self.pair.zero.is_full


@dataclass
class Alg2Result:
    differential: TruncatedDifferential | None
    q: int
    q_overridden: bool
    mode: str
    direction: str
    t: int
    components: list[ComponentSamples] = field(repr=False)
    excluded: list[int]
    enumeration_truncated: bool
    candidates: int
    max_cover: int

    @property
    def found(self) -> bool:
        return self.differential is not None

    def ranks(self) -> list[int]:
        return [c.rank for c in self.components]


FULL_AUDIT_BITS = 20


def sample_component(cf: ComponentFunction, q: int, rng: np.random.Generator) -> ComponentSamples:
    c = cf.cipher
    N = c.n + c.m
    spec = walsh_spectrum(component_truth_table(cf), N)
    sampler = BVSampler(spec, rng)
    keep_full = N <= FULL_AUDIT_BITS
    full = np.zeros(1 << N, dtype=np.int64) if keep_full else None
    proj = np.zeros(1 << c.n, dtype=np.int64)
    for chunk in sampler.sample_chunks(q):
        if keep_full:
            full += np.bincount(chunk, minlength=1 << N)
        else:
            proj += np.bincount(chunk >> c.m, minlength=1 << c.n)
    if keep_full:
        proj = full.reshape(1 << c.n, 1 << c.m).sum(axis=1)
        full_map = {int(u): int(full[u]) for u in np.flatnonzero(full)}
    else:
        full_map = None
    projected = {int(u): int(proj[u]) for u in np.flatnonzero(proj)}
    pair, rank = solve_pair(sorted(projected), c.n)
    return ComponentSamples(cf.j, pair, rank, projected, full_map)


def collect_components(cipher: BlockCipher, t: int, q: int, seed: int, direction: str = FORWARD,
                       workers: int = 1) -> list[ComponentSamples]:
    check_joint_size(cipher.n, cipher.m)
    cipher.outputs(t, direction)  # build the shared table once before fanning out

    def one(j: int) -> ComponentSamples:
        rng = streams.derive(seed, "alg2", cipher.name, direction, t, j)
        return sample_component(ComponentFunction(cipher, j, t, direction), q, rng)

    js = range(1, cipher.n + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, js))
    return [one(j) for j in js]


def cover_map(components: list[ComponentSamples], cap: int = DEFAULT_CAP):
    """``a -> {j: i_j}`` for every nonzero ``a`` in some non-degenerate ``Z_j``."""
    truncated = False
    cands: set[int] = set()
    live = [c for c in components if not c.degenerate]
    for c in live:
        members, tr = c.pair.members(cap)
        truncated |= tr
        cands.update(members)
    cands.discard(0)
    cover: dict[int, dict[int, int]] = {}
    for a in sorted(cands):
        hits = {}
        for c in live:
            i = c.pair.lookup(a)
            if i is not None:
                hits[c.j] = i
        if not hits:
            raise AssertionError(f"candidate {a:#x} found in no Z_j")
        cover[a] = hits
    return cover, truncated


def select(components: list[ComponentSamples], n: int, sigma, mode: str,
           rng: np.random.Generator, cap: int = DEFAULT_CAP):
    """Steps 13-20: pick ``(a, d, {j: i_j})`` or None."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    cover, truncated = cover_map(components, cap)
    best = max((len(h) for h in cover.values()), default=0)
    ds = range(1, n + 1) if mode == ASCENDING else range(n, 0, -1)
    for d in ds:
        if not sn_gate(d, sigma) or best < d:
            continue
        top = [a for a, h in cover.items() if len(h) == best]
        a = top[int(rng.integers(len(top)))]
        js = sorted(cover[a])
        chosen = sorted(int(j) for j in rng.choice(js, size=d, replace=False))
        return (a, d, {j: cover[a][j] for j in chosen}), cover, truncated, best
    return None, cover, truncated, best


def algorithm2(cipher: BlockCipher, t: int, sigma, tau, seed: int = 0, *,
               direction: str = FORWARD, q: int | None = None, mode: str = ASCENDING,
               workers: int = 1, cap: int = DEFAULT_CAP) -> Alg2Result:
    """Search a truncated differential of ``Enc^t`` (or the inverse of the last ``t`` rounds).

    ``q`` overrides the sample budget; the override is reported.
    """
    budget = sample_budget(cipher.n, sigma, tau)
    q_used = budget if q is None else int(q)
    if q_used < 1:
        raise ValueError("q must be >= 1")
    comps = collect_components(cipher, t, q_used, seed, direction, workers)
    rng = streams.derive(seed, "alg2-select", cipher.name, direction, t)
    pick, cover, truncated, best = select(comps, cipher.n, sigma, mode, rng, cap)
    diff = None
    if pick is not None:
        a, d, bits = pick
        mask = value = 0
        for j, i in bits.items():
            pos = cipher.n - j
            mask |= 1 << pos
            value |= i << pos
        diff = TruncatedDifferential(
            a=a, b=TruncatedDifference(cipher.n, mask, value), sigma=float(sigma),
            tau=float(tau), q_used=q_used, cipher=cipher.name, t=t, direction=direction,
            mode=mode, subscripts=tuple(sorted(bits)))
    return Alg2Result(
        differential=diff, q=q_used, q_overridden=q is not None, mode=mode,
        direction=direction, t=t, components=comps,
        excluded=[c.j for c in comps if c.degenerate],
        enumeration_truncated=truncated, candidates=len(cover), max_cover=best)
