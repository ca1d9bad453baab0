"""Boomerang distinguisher search: one truncated differential per half."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .cipherkit import FORWARD, INVERSE, BlockCipher
from .truncfind import ASCENDING, Alg2Result, TruncatedDifferential, algorithm2, exact


@dataclass
class BoomerangDistinguisher:
    fwd: TruncatedDifferential  # (a1, b1) of Enc^t1
    bwd: TruncatedDifferential  # (a2, b2) of the inverse of the last t2 rounds
    t1: int
    t2: int
    sigma: float
    tau: float

    def __post_init__(self) -> None:
        if self.fwd.direction != FORWARD or self.bwd.direction != INVERSE:
            raise ValueError("fwd must be a forward and bwd an inverse differential")
        if (self.fwd.t, self.bwd.t) != (self.t1, self.t2):
            raise ValueError("round counts disagree with the halves")

    @property
    def d(self) -> int:
        """Predicted bits of the input-side difference checked on return (``a1``, all bits)."""
        return self.fwd.n

    def to_dict(self) -> dict[str, Any]:
        right, base, ok = quadruple_probability(self.sigma, self.sigma, self.d)
        return {
            "t1": self.t1,
            "t2": self.t2,
            "sigma": self.sigma,
            "tau": self.tau,
            "fwd": self.fwd.to_dict(),
            "bwd": self.bwd.to_dict(),
            "return_difference_d": self.d,
            "right_rate_formula": float(right),
            "baseline": float(base),
            "distinguishable": ok,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> BoomerangDistinguisher:
        return cls(TruncatedDifferential.from_dict(d["fwd"]), TruncatedDifferential.from_dict(d["bwd"]),
                   int(d["t1"]), int(d["t2"]), d["sigma"], d["tau"])


def quadruple_probability(p1, p2, d: int) -> tuple[Fraction, Fraction, bool]:
    """``((p1 p2)^2, 2^-d, (p1 p2)^2 > 2^-d)``."""
    p1, p2 = exact(p1), exact(p2)
    if not (0 <= p1 <= 1 and 0 <= p2 <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    right = (p1 * p2) ** 2
    base = Fraction(1, 1 << d)
    return right, base, right > base


@dataclass
class Alg3Result:
    distinguisher: BoomerangDistinguisher | None
    attempts: list[dict[str, Any]] = field(default_factory=list)
    runs: dict[int, tuple[Alg2Result, Alg2Result]] = field(default_factory=dict, repr=False)

    @property
    def found(self) -> bool:
        return self.distinguisher is not None


def algorithm3(cipher: BlockCipher, sigma, tau, seed: int = 0, *, q: int | None = None,
               mode: str = ASCENDING, workers: int = 1,
               splits: Sequence[int] | None = None) -> Alg3Result:
    """Scan ``t1 = 1..r-1``; return the first split where both halves are found.

    ``splits`` restricts the scan to the given ``t1`` values (still ascending).
    """
    r = cipher.rounds
    if r < 2:
        raise ValueError("a boomerang needs at least two rounds")
    scan = range(1, r) if splits is None else sorted(set(int(t) for t in splits))
    if any(not 1 <= t < r for t in scan):
        raise ValueError(f"split points must lie in 1..{r - 1}")
    out = Alg3Result(None)
    for t1 in scan:
        t2 = r - t1
        kw = dict(q=q, mode=mode, workers=1 if workers > 1 else workers)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=2) as pool:
                f1 = pool.submit(algorithm2, cipher, t1, sigma, tau, seed, direction=FORWARD, **kw)
                f2 = pool.submit(algorithm2, cipher, t2, sigma, tau, seed, direction=INVERSE, **kw)
                fwd, bwd = f1.result(), f2.result()
        else:
            fwd = algorithm2(cipher, t1, sigma, tau, seed, direction=FORWARD, **kw)
            bwd = algorithm2(cipher, t2, sigma, tau, seed, direction=INVERSE, **kw)
        out.runs[t1] = (fwd, bwd)
        out.attempts.append({"t1": t1, "t2": t2, "forward_found": fwd.found,
                             "inverse_found": bwd.found})
        if fwd.found and bwd.found:
            out.distinguisher = BoomerangDistinguisher(
                fwd.differential, bwd.differential, t1, t2, float(sigma), float(tau))
            break
    return out
