"""End-to-end experiments: last-round key counting and boomerang quadruples."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from scipy import stats

from .boomfind import BoomerangDistinguisher
from .cipherkit import BlockCipher
from .truncfind import TruncatedDifference, TruncatedDifferential

SHIFT_FIELDS = ("a2", "b2")
CONCRETIZE = ("zero", "random")


@dataclass
class RecoveryResult:
    ranking: list[tuple[int, int]]  # (candidate, count), best first
    counts: np.ndarray  # indexed by candidate
    true_subkey: int
    true_rank: int  # 1-based, ties broken at random
    pairs: int

    @property
    def wrong_counts(self) -> np.ndarray:
        return np.delete(self.counts, self.true_subkey)

    def to_dict(self, top: int = 8) -> dict[str, Any]:
        return {
            "pairs": self.pairs,
            "true_subkey": self.true_subkey,
            "true_rank": self.true_rank,
            "true_count": int(self.counts[self.true_subkey]),
            "wrong_mean": float(self.wrong_counts.mean()),
            "top": [[c, n] for c, n in self.ranking[:top]],
        }


def recover_suffix_key(cipher: BlockCipher, td: TruncatedDifferential, t: int, pairs: int,
                       true_key: int, rng: np.random.Generator) -> RecoveryResult:
    """Count, for each last-round subkey guess, pairs whose peeled difference matches ``b``."""
    if pairs <= 0:
        raise ValueError("pairs must be positive")
    if cipher.rounds - t != 1:
        raise ValueError("desk-scale recovery needs exactly one suffix round (r - t = 1)")
    x = rng.integers(0, 1 << cipher.n, size=pairs, dtype=np.int64)
    c0 = cipher.encrypt(x, true_key)
    c1 = cipher.encrypt(x ^ td.a, true_key)
    cand = np.arange(1 << cipher.last_key_bits, dtype=np.int64)[:, None]
    diff = cipher.peel_last_round(c0[None, :], cand) ^ cipher.peel_last_round(c1[None, :], cand)
    counts = np.count_nonzero(td.b.matches(diff), axis=1)
    # random tie-break: shuffle, then stable sort by count
    order = rng.permutation(counts.size)
    order = order[np.argsort(-counts[order], kind="stable")]
    true_sub = cipher.last_round_key(true_key)
    rank = int(np.flatnonzero(order == true_sub)[0]) + 1
    ranking = [(int(c), int(counts[c])) for c in order]
    return RecoveryResult(ranking, counts, true_sub, rank, pairs)


def expected_wrong_count(pairs: int, d: int) -> float:
    """Noise model: a wrong guess matches a ``d``-bit prediction with rate ``2^-d``."""
    return pairs / (1 << d)


# -- boomerang quadruples ------------------------------------------------------------

@dataclass
class Quadruple:
    P: int
    P2: int
    Q: int
    Q2: int
    C: int
    C2: int
    D: int
    D2: int


def _shift(dist: BoomerangDistinguisher, size, rng, field: str, concretize: str) -> np.ndarray:
    if field not in SHIFT_FIELDS:
        raise ValueError(f"shift field must be one of {SHIFT_FIELDS}")
    if concretize not in CONCRETIZE:
        raise ValueError(f"concretize must be one of {CONCRETIZE}")
    if field == "a2":
        # ciphertext-side input difference of the inverse half: already concrete
        return np.full(size, dist.bwd.a, dtype=np.int64)
    b = dist.bwd.b
    if concretize == "zero":
        return np.full(size, b.concretize(), dtype=np.int64)
    free = ((1 << b.n) - 1) & ~b.mask
    return b.value | (rng.integers(0, 1 << b.n, size=size, dtype=np.int64) & free)


def quadruples(cipher: BlockCipher, keys, dist: BoomerangDistinguisher, rng: np.random.Generator,
               *, shift_field: str = "a2", concretize: str = "zero") -> dict[str, np.ndarray]:
    """One quadruple per entry of ``keys``, built by the three-step boomerang procedure."""
    keys = np.asarray(keys, dtype=np.int64)
    P = rng.integers(0, 1 << cipher.n, size=keys.shape, dtype=np.int64)
    P2 = P ^ dist.fwd.a
    C = cipher.encrypt(P, keys)
    C2 = cipher.encrypt(P2, keys)
    delta = _shift(dist, keys.shape, rng, shift_field, concretize)
    D, D2 = C ^ delta, C2 ^ delta
    Q = cipher.decrypt_suffix(D, keys, 0)
    Q2 = cipher.decrypt_suffix(D2, keys, 0)
    ret = TruncatedDifference.exact(cipher.n, dist.fwd.a)
    return {"P": P, "P2": P2, "Q": Q, "Q2": Q2, "C": C, "C2": C2, "D": D, "D2": D2,
            "key": keys, "right": ret.matches(Q ^ Q2)}


def generate_quadruple(cipher: BlockCipher, k: int, dist: BoomerangDistinguisher,
                       rng: np.random.Generator, **kw) -> tuple[Quadruple, bool]:
    q = quadruples(cipher, [k], dist, rng, **kw)
    quad = Quadruple(*(int(q[f][0]) for f in ("P", "P2", "Q", "Q2", "C", "C2", "D", "D2")))
    return quad, bool(q["right"][0])


def right_rate_per_key(cipher: BlockCipher, dist: BoomerangDistinguisher, trials: int,
                       rng: np.random.Generator, **kw) -> np.ndarray:
    """Empirical right-quadruple rate for every key, ``trials`` quadruples each."""
    keys = np.repeat(np.arange(1 << cipher.m, dtype=np.int64), trials)
    right = quadruples(cipher, keys, dist, rng, **kw)["right"]
    return right.reshape(1 << cipher.m, trials).mean(axis=1)


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> tuple[float, float]:
    """Pooled two-proportion z statistic and its two-sided p-value."""
    p = (k1 + k2) / (n1 + n2)
    se = math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0, 1.0
    z = (k1 / n1 - k2 / n2) / se
    return z, float(2 * stats.norm.sf(abs(z)))


def boomerang_distinguish(cipher_a: BlockCipher, cipher_b: BlockCipher,
                          dist: BoomerangDistinguisher, trials: int, rng: np.random.Generator,
                          *, alpha: float = 1e-3, shift_field: str = "a2",
                          concretize: str = "zero") -> dict[str, Any]:
    """Quadruple rates on two targets (fresh random key per quadruple) and a z-test."""
    out: dict[str, Any] = {"trials": trials, "alpha": alpha, "shift_field": shift_field,
                           "concretize": concretize, "baseline": 2.0 ** -dist.d}
    hits = []
    for label, c in (("a", cipher_a), ("b", cipher_b)):
        keys = rng.integers(0, 1 << c.m, size=trials, dtype=np.int64)
        right = quadruples(c, keys, dist, rng, shift_field=shift_field, concretize=concretize)["right"]
        k = int(np.count_nonzero(right))
        hits.append(k)
        out[f"{label}_name"] = c.name
        out[f"{label}_right"] = k
        out[f"{label}_rate"] = k / trials
    z, p = two_proportion_z(hits[0], trials, hits[1], trials)
    out.update(z=z, p_value=p, distinguished=bool(p < alpha and hits[0] > hits[1]))
    return out


def write_trial_log(path: str | Path, rows: Iterable[dict[str, Any]], fields: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
