from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bvtrunc.cipherkit import ResourceGuardError
from bvtrunc.gf2core import dot
from bvtrunc.walshsim import (BVSampler, bv_sample, dump_spectrum, fwht, load_spectrum, walsh_by_definition,
                              walsh_spectrum)

tables = st.integers(1, 6).flatmap(
    lambda N: st.lists(st.integers(0, 1), min_size=1 << N, max_size=1 << N))


def naive(table):
    # independent double loop in pure Python
    size = len(table)
    return [sum((-1) ** (table[x] ^ dot(u, x)) for x in range(size)) for u in range(size)]


@given(tables)
def test_fwht_equals_double_sum(table):
    spec = walsh_spectrum(np.array(table))
    assert spec.coeffs.tolist() == naive(table)
    assert walsh_by_definition(table).tolist() == naive(table)


@given(tables)
def test_parseval_exact(table):
    spec = walsh_spectrum(np.array(table))
    assert spec.parseval_ok()
    assert int(np.sum(spec.weights())) == 1 << (2 * spec.N)


def test_constant_and_linear_functions():
    N = 5
    zero = walsh_spectrum(np.zeros(1 << N, dtype=np.uint8))
    assert zero.coeffs[0] == 1 << N and np.count_nonzero(zero.coeffs) == 1
    u0 = 0b10110
    lin = np.array([dot(u0, x) for x in range(1 << N)], dtype=np.uint8)
    spec = walsh_spectrum(lin)
    assert spec.coeffs[u0] == 1 << N
    assert spec.support.tolist() == [u0]
    # complement flips the sign only
    assert walsh_spectrum(1 - lin).coeffs[u0] == -(1 << N)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fwht(np.ones(6))


def test_table_length_and_guard():
    with pytest.raises(ValueError):
        walsh_spectrum(np.zeros(8), N=4)
    with pytest.raises(ResourceGuardError):
        walsh_spectrum(np.zeros(2), N=29)


def test_sampler_stays_in_support_and_fits(rng):
    # AND of two bits plus a linear term: four equally likely outputs
    N = 4
    f = np.array([((x >> 3) & (x >> 2) & 1) ^ (x & 1) for x in range(1 << N)], dtype=np.uint8)
    spec = walsh_spectrum(f, N)
    sampler = BVSampler(spec, rng)
    draws = sampler.sample(40_000)
    assert set(np.unique(draws).tolist()) <= set(spec.support.tolist())
    counts = np.bincount(draws, minlength=1 << N)[spec.support]
    expected = spec.weights()[spec.support] / (1 << 2 * N) * draws.size
    assert stats.chisquare(counts, expected).pvalue > 1e-3


def test_sampler_is_seed_deterministic():
    spec = walsh_spectrum(np.random.default_rng(1).integers(0, 2, 256), 8)
    a = BVSampler(spec, np.random.default_rng(7)).sample(100)
    b = BVSampler(spec, np.random.default_rng(7)).sample(100)
    assert np.array_equal(a, b)
    assert len(bv_sample(BVSampler(spec, np.random.default_rng(7)), 5)) == 5
    chunks = list(BVSampler(spec, np.random.default_rng(7)).sample_chunks(250, chunk=100))
    assert [c.size for c in chunks] == [100, 100, 50]


def test_sampler_rejects_non_boolean_spectrum(rng):
    spec = walsh_spectrum(np.zeros(4, dtype=np.uint8))
    bad = type(spec)(spec.N, np.array([1, 1, 1, 1]))
    with pytest.raises(AssertionError):
        BVSampler(bad, rng)


def test_spectrum_dump_roundtrip(tmp_path):
    spec = walsh_spectrum(np.random.default_rng(3).integers(0, 2, 1 << 10), 10)
    path = tmp_path / "s.whs"
    dump_spectrum(path, spec, "TOY8", 3, 2, "forward")
    raw = path.read_bytes()
    assert raw[:4] == b"WHS1"
    back, meta = load_spectrum(path)
    assert np.array_equal(back.coeffs, spec.coeffs)
    assert meta == {"cipher": "TOY8", "j": 3, "t": 2, "direction": "forward"}
    (tmp_path / "bad").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        load_spectrum(tmp_path / "bad")
    (tmp_path / "short").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load_spectrum(tmp_path / "short")
