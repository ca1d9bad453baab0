"""Named, derivable RNG streams.

Every consumer gets its own generator derived from the master seed and a
label path such as ``("alg2", "forward", t, j)``. Labels are mapped to
integers (strings through CRC-32) and become the SeedSequence spawn key,
so streams are independent of scheduling order and of each other.
"""

from __future__ import annotations

import zlib

import numpy as np

RNG_IDENTITY = "numpy.random.PCG64 via SeedSequence(seed, spawn_key=crc32/int labels)"


def _label(v) -> int:
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        if v < 0:
            raise ValueError("integer labels must be non-negative")
        return int(v)
    return zlib.crc32(str(v).encode())


def derive(seed: int, *labels) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_label(v) for v in labels))
    return np.random.Generator(np.random.PCG64(ss))
