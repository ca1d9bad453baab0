"""Exhaustive ground truth for every probability the searches rely on.

Probabilities are exact :class:`fractions.Fraction` values over ``2^n``
inputs. Functions refuse (``ResourceGuardError``) rather than silently
sampling when a domain is too large; sampled estimates exist separately
and are labelled as such.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .cipherkit import FORWARD, BlockCipher, ResourceGuardError, check_joint_size
from .truncfind import TruncatedDifference, exact, sample_budget, sample_budget_exact

MAX_EXHAUSTIVE_BITS = 20
SAMPLED_INPUTS = 1 << 12
ALL_COMPLETE = "all-complete"


def _guard(bits: int, what: str) -> None:
    if bits > MAX_EXHAUSTIVE_BITS:
        raise ResourceGuardError(
            f"{what} has {bits} bits; exhaustive mode is limited to {MAX_EXHAUSTIVE_BITS}. "
            "Use sampled mode for an estimate.")


def _pair_outputs(cipher: BlockCipher, t: int, k: int, dx: int, direction: str):
    _guard(cipher.n, "block")
    x = np.arange(1 << cipher.n, dtype=np.int64)
    y0 = cipher.reduced(x, k, t, direction)
    y1 = cipher.reduced(x ^ dx, k, t, direction)
    return y0 ^ y1


def differential_probability(cipher: BlockCipher, t: int, k: int, dx: int, dy: int,
                             direction: str = FORWARD) -> Fraction:
    diff = _pair_outputs(cipher, t, k, dx, direction)
    return Fraction(int(np.count_nonzero(diff == dy)), 1 << cipher.n)


def output_distribution(cipher: BlockCipher, t: int, k: int, dx: int,
                        direction: str = FORWARD) -> np.ndarray:
    """Counts of every output difference for input difference ``dx`` (a DDT row)."""
    return np.bincount(_pair_outputs(cipher, t, k, dx, direction), minlength=1 << cipher.n)


def truncated_probability(cipher: BlockCipher, t: int, k: int, a: int, b: TruncatedDifference,
                          direction: str = FORWARD) -> Fraction:
    """``Z(k)``: fraction of ``x`` with ``Enc(x ^ a) ^ Enc(x) ~ b``."""
    if a == 0:
        raise ValueError("a must be nonzero")
    diff = _pair_outputs(cipher, t, k, a, direction)
    return Fraction(int(np.count_nonzero(b.matches(diff))), 1 << cipher.n)


def omega_truncated_probability(cipher: BlockCipher, t: int, k: int, abar: TruncatedDifference,
                                b: TruncatedDifference, direction: str = FORWARD) -> Fraction:
    """Conditional probability averaged over every nonzero ``dx`` matching ``abar``."""
    members = [int(v) for v in abar.omega() if v]
    if not members:
        raise ValueError("input truncated difference admits only zero")
    hits = sum(int(np.count_nonzero(b.matches(_pair_outputs(cipher, t, k, dx, direction))))
               for dx in members)
    return Fraction(hits, len(members) << cipher.n)


@dataclass
class KeyProfile:
    cipher: str
    t: int
    a: int
    b: TruncatedDifference
    direction: str
    counts: np.ndarray  # per key, numerator of Z(k)
    denominator: int
    sampled: bool = False

    @property
    def Z(self) -> np.ndarray:
        return self.counts / self.denominator

    def fraction_above(self, sigma) -> Fraction:
        # count / denom > sigma  <=>  count > sigma * denom, compared exactly
        s = exact(sigma)
        above = sum(1 for c in self.counts.tolist() if Fraction(c, self.denominator) > s)
        return Fraction(above, self.counts.size)

    def to_csv(self, path: str | Path) -> None:
        width = (int(self.counts.size - 1).bit_length() + 3) // 4 or 1
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "numerator", "denominator"])
            for k, c in enumerate(self.counts.tolist()):
                w.writerow([f"{k:0{width}x}", c, self.denominator])

    def summary(self, sigma, tau) -> dict[str, Any]:
        frac = self.fraction_above(sigma)
        need = 1 - 1 / exact(tau)
        return {
            "mode": "sampled" if self.sampled else "exhaustive",
            "keys": int(self.counts.size),
            "fraction_above_sigma": str(frac),
            "fraction_above_sigma_float": float(frac),
            "required": str(need),
            "min_Z": float(self.Z.min()),
            "mean_Z": float(self.Z.mean()),
            "pass": frac > need,
        }


def key_profile(cipher: BlockCipher, t: int, a: int, b: TruncatedDifference,
                direction: str = FORWARD, *, sampled: bool = False,
                rng: np.random.Generator | None = None) -> KeyProfile:
    """``Z(k)`` for every key. Exhaustive unless ``sampled`` is requested."""
    if a == 0:
        raise ValueError("a must be nonzero")
    _guard(cipher.m, "key space")
    keys = np.arange(1 << cipher.m, dtype=np.int64)
    if sampled:
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        x = rng.integers(0, 1 << cipher.n, size=(1, SAMPLED_INPUTS), dtype=np.int64)
        kk = keys[:, None]
        diff = cipher.reduced(x, kk, t, direction) ^ cipher.reduced(x ^ a, kk, t, direction)
        counts = np.count_nonzero(b.matches(diff), axis=1)
        return KeyProfile(cipher.name, t, a, b, direction, counts, SAMPLED_INPUTS, True)
    _guard(cipher.n, "block")
    try:
        check_joint_size(cipher.n, cipher.m)
        table = cipher.table(t, direction)  # [k, x]
        x = np.arange(1 << cipher.n)
        diff = table[:, x] ^ table[:, x ^ a]
        counts = np.count_nonzero(b.matches(diff), axis=1)
    except ResourceGuardError:
        counts = np.array([
            int(np.count_nonzero(b.matches(_pair_outputs(cipher, t, int(k), a, direction))))
            for k in keys])
    return KeyProfile(cipher.name, t, a, b, direction, counts, 1 << cipher.n)


def key_fraction_above(cipher: BlockCipher, t: int, a: int, b: TruncatedDifference, sigma,
                       direction: str = FORWARD) -> Fraction:
    return key_profile(cipher, t, a, b, direction).fraction_above(sigma)


# -- single Boolean functions ------------------------------------------------------

def _autocorrelation_counts(table: np.ndarray) -> np.ndarray:
    """``count[dx] = |{x : f(x) != f(x ^ dx)}|`` by direct scan."""
    f = np.asarray(table, dtype=np.uint8)
    size = f.size
    _guard(size.bit_length() - 1, "function domain")
    x = np.arange(size)
    return np.array([int(np.count_nonzero(f ^ f[x ^ dx])) for dx in range(size)])


def complete_differentials(table) -> tuple[np.ndarray, np.ndarray]:
    """``(D^0, D^1)``: differences whose output difference is constant 0 / 1."""
    flips = _autocorrelation_counts(table)
    size = flips.size
    return np.flatnonzero(flips == 0), np.flatnonzero(flips == size)


def gamma(table):
    """Largest probability of a differential that is not complete.

    Returns :data:`ALL_COMPLETE` when every difference is complete (affine ``f``).
    """
    flips = _autocorrelation_counts(table)
    size = flips.size
    noncomplete = (flips != 0) & (flips != size)
    if not noncomplete.any():
        return ALL_COMPLETE
    best = np.maximum(flips, size - flips)[noncomplete].max()
    g = Fraction(int(best), size)
    assert g < 1
    return g


def ddt(sbox) -> np.ndarray:
    sbox = np.asarray(sbox, dtype=np.int64)
    size = sbox.size
    x = np.arange(size)
    out = np.zeros((size, size), dtype=np.int64)
    for dx in range(size):
        out[dx] = np.bincount(sbox ^ sbox[x ^ dx], minlength=size)
    return out


# -- closed-form resource counts --------------------------------------------------

def complexity_report(n: int, m: int, sigma, tau, r: int, enc_gate_count: int,
                      enc_r_gate_count: int | None = None) -> dict[str, Any]:
    """Gate, qubit and classical-cost counts for the two searches.

    ``enc_gate_count`` stands for the gate count of the reduced-cipher
    circuit; ``enc_r_gate_count`` (default: the same) for the full cipher.
    """
    s = exact(sigma)
    if s >= 1:
        raise ValueError("sigma >= 1 makes the sample budget diverge")
    q_exact = sample_budget_exact(n, sigma, tau)
    q = sample_budget(n, sigma, tau)
    enc_r = enc_gate_count if enc_r_gate_count is None else enc_r_gate_count
    per_call = 2 * (m + n) + 1
    return {
        "n": n,
        "m": m,
        "sigma": float(s),
        "tau": float(exact(tau)),
        "rounds": r,
        "enc_gate_count": enc_gate_count,
        "enc_r_gate_count": enc_r,
        "q_exact": str(q_exact),
        "q": q,
        "bv_gates_per_call": f"{per_call} + |Enc^t[j]|",
        "alg2_gates": q * (2 * n * n + (2 * m + 1) * n + enc_gate_count),
        "alg3_gates": r * q * (4 * n * n + (4 * m + 2) * n + enc_r),
        "classical_solve_cost": 2 * q * n ** 3,
        "qubits": n + m + 1,
    }
