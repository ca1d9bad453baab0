from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bvtrunc.bvalgo import algorithm1, count_samples
from bvtrunc.cipherkit import ComponentFunction, toy8_identity
from bvtrunc.gf2core import dot
from bvtrunc.oracle import complete_differentials
from bvtrunc.walshsim import BVSampler, walsh_spectrum


def structured_function(rng, N):
    """``g(x & mask) ^ c.x``: every difference outside ``mask`` is complete."""
    mask = int(rng.integers(0, 1 << N))
    c = int(rng.integers(0, 1 << N))
    g = rng.integers(0, 2, 1 << N)
    return np.array([g[x & mask] ^ dot(c, x) for x in range(1 << N)], dtype=np.uint8)


def test_linear_function_recovers_complete_sets(rng):
    N, u0 = 6, 0b101101
    f = np.array([dot(u0, x) for x in range(1 << N)], dtype=np.uint8)
    res = algorithm1(f, N, rng)
    assert res.found and res.outcome == "Found"
    assert set(res.W) == {u0}
    d0, d1 = complete_differentials(f)
    assert set(res.zero.enumerate()[0]) == set(d0.tolist())
    assert set(res.one.enumerate()[0]) == set(d1.tolist())


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_complete_differentials_always_survive(seed, N):
    rng = np.random.default_rng(seed)
    f = structured_function(rng, N)
    res = algorithm1(f, 3 * N, rng)
    d0, d1 = complete_differentials(f)
    assert all(res.zero.contains(int(v)) for v in d0)
    assert all(res.one.contains(int(v)) for v in d1)


def test_component_function_input(rng):
    c = toy8_identity(1, rotation=0)
    res = algorithm1(ComponentFunction(c, 8, 1), 64, rng)
    # lowest bit of x ^ rotl(k, 1) ^ 1 reads x bit 0 and k bit 7
    assert set(res.W) == {(1 << 8) | (1 << 7)}
    assert res.rank == 1


def test_count_samples_total(rng):
    spec = walsh_spectrum(rng.integers(0, 2, 64), 6)
    W = count_samples(BVSampler(spec, rng), 1000)
    assert sum(W.values()) == 1000
    Wp = count_samples(BVSampler(spec, rng), 1000, project_shift=3)
    assert max(Wp) < 8


def test_rejects_bad_q(rng):
    with pytest.raises(ValueError):
        algorithm1(np.zeros(4, dtype=np.uint8), 0, rng)


def test_seed_determinism():
    f = np.random.default_rng(4).integers(0, 2, 256)
    a = algorithm1(f, 8, np.random.default_rng(9))
    b = algorithm1(f, 8, np.random.default_rng(9))
    assert a.W == b.W and a.zero == b.zero and a.one == b.one
