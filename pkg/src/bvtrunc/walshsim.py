"""Exact Walsh spectra and the Bernstein-Vazirani output distribution.

Running BV on ``f`` and measuring yields ``u`` with probability
``S_f(u)^2``. Here the unnormalised coefficient
``w(u) = sum_x (-1)^(f(x) + u.x)`` is kept as an exact integer, so the
weight of ``u`` is ``w(u)^2 / 2^(2N)`` and, by Parseval, the weights sum
to exactly ``2^(2N)``. Sampling draws a uniform ``2N``-bit integer and
locates it in the integer prefix sums, which makes the sampled
distribution exact rather than a floating-point approximation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cipherkit import MAX_JOINT_BITS, ResourceGuardError

WHS_MAGIC = b"WHS1"


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform of an int64 vector."""
    a = np.array(a, dtype=np.int64)
    size = a.size
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        v = a.reshape(-1, 2, h)
        lo = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = lo - v[:, 1, :]
        h *= 2
    return a


@dataclass(frozen=True)
class WalshSpectrum:
    N: int
    coeffs: np.ndarray  # int64, length 2^N

    def parseval_ok(self) -> bool:
        # squares stay below 2^56 for N <= 28
        return int(np.sum(self.coeffs.astype(object) ** 2)) == 1 << (2 * self.N)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coeffs)

    def weights(self) -> np.ndarray:
        """Integer sampling weights ``w(u)^2`` (denominator ``2^(2N)``)."""
        return self.coeffs * self.coeffs

    def probability(self, u: int) -> float:
        c = int(self.coeffs[u])
        return c * c / float(1 << (2 * self.N))


def walsh_spectrum(table, N: int | None = None) -> WalshSpectrum:
    """Spectrum of a 0/1 truth table of length ``2^N``."""
    table = np.asarray(table)
    if N is None:
        N = table.size.bit_length() - 1
    if N > MAX_JOINT_BITS:
        raise ResourceGuardError(f"N = {N} exceeds the {MAX_JOINT_BITS}-bit spectrum guard")
    if table.size != 1 << N:
        raise ValueError(f"table has {table.size} entries, expected 2^{N}")
    signs = 1 - 2 * table.astype(np.int64)
    coeffs = fwht(signs)
    coeffs.setflags(write=False)
    return WalshSpectrum(N, coeffs)


def walsh_by_definition(table) -> np.ndarray:
    """The O(4^N) double sum, for cross-checking ``fwht``."""
    table = np.asarray(table, dtype=np.int64)
    size = table.size
    idx = np.arange(size, dtype=np.int64)
    signs = 1 - 2 * table
    out = np.empty(size, dtype=np.int64)
    for u in range(size):
        par = np.bitwise_count(idx & u) & 1
        out[u] = int(np.sum(signs * (1 - 2 * par.astype(np.int64))))
    return out


class BVSampler:
    """Draws ``u`` with probability exactly ``w(u)^2 / 2^(2N)``."""

    def __init__(self, spectrum: WalshSpectrum, rng: np.random.Generator) -> None:
        self.spectrum = spectrum
        self.rng = rng
        self.support = spectrum.support
        w = spectrum.coeffs[self.support]
        self.cumulative = np.cumsum(w * w)
        self.total = 1 << (2 * spectrum.N)
        if int(self.cumulative[-1]) != self.total:
            raise AssertionError("Parseval violated; spectrum is not a Boolean function's")

    def sample(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be non-negative")
        # total is a power of two, so integers() needs no rejection step
        r = self.rng.integers(0, self.total, size=count, dtype=np.int64)
        return self.support[np.searchsorted(self.cumulative, r, side="right")]

    def sample_chunks(self, count: int, chunk: int = 1 << 20):
        done = 0
        while done < count:
            step = min(chunk, count - done)
            yield self.sample(step)
            done += step


def bv_sample(sampler: BVSampler, count: int) -> list[int]:
    return [int(u) for u in sampler.sample(count)]


def dump_spectrum(path: str | Path, spectrum: WalshSpectrum, cipher: str = "",
                  j: int = 0, t: int = 0, direction: str = "") -> None:
    """Binary dump: header then ``2^N`` little-endian int64 coefficients.

    Header: ``b"WHS1"``, then little-endian u32 fields N, j, t, followed by
    u16-length-prefixed UTF-8 strings for the cipher name and direction.
    """
    name = cipher.encode()
    dirn = direction.encode()
    with open(path, "wb") as fh:
        fh.write(WHS_MAGIC)
        fh.write(struct.pack("<III", spectrum.N, j, t))
        fh.write(struct.pack("<H", len(name)) + name)
        fh.write(struct.pack("<H", len(dirn)) + dirn)
        fh.write(spectrum.coeffs.astype("<i8").tobytes())


def load_spectrum(path: str | Path) -> tuple[WalshSpectrum, dict]:
    with open(path, "rb") as fh:
        if fh.read(4) != WHS_MAGIC:
            raise ValueError(f"{path} is not a WHS1 spectrum file")
        N, j, t = struct.unpack("<III", fh.read(12))
        (ln,) = struct.unpack("<H", fh.read(2))
        name = fh.read(ln).decode()
        (ld,) = struct.unpack("<H", fh.read(2))
        direction = fh.read(ld).decode()
        coeffs = np.frombuffer(fh.read(8 << N), dtype="<i8").astype(np.int64)
    if coeffs.size != 1 << N:
        raise ValueError(f"{path} is truncated")
    return WalshSpectrum(N, coeffs), {"cipher": name, "j": j, "t": t, "direction": direction}
