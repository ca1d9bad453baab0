from __future__ import annotations

import csv
import math
from types import SimpleNamespace

import numpy as np
import pytest

from bvtrunc.attackbench import (boomerang_distinguish, expected_wrong_count, generate_quadruple, quadruples,
                                 recover_suffix_key, right_rate_per_key, two_proportion_z, write_trial_log)
from bvtrunc.boomfind import algorithm3
from bvtrunc.cipherkit import planted, planted_differential, random_perm, toy8_identity
from bvtrunc.truncfind import PREFER_MAX_D, TruncatedDifference, TruncatedDifferential


def planted_td():
    c = planted(2, 1)
    a, delta = planted_differential(c)
    return c, TruncatedDifferential(a, TruncatedDifference.exact(8, delta), 0.9, 4.0, 0, c.name, 1)


def test_recovery_ranks_true_subkey_first():
    c, td = planted_td()
    rng = np.random.default_rng(0)
    res = recover_suffix_key(c, td, 1, 45, 0x6E, rng)
    assert res.true_subkey == c.last_round_key(0x6E)
    assert res.counts[res.true_subkey] == 45  # probability-one differential
    assert res.true_rank == 1 and res.ranking[0][0] == res.true_subkey
    assert res.wrong_counts.size == 255
    assert res.to_dict()["true_count"] == 45


def test_no_predicted_bits_means_no_signal():
    c, td = planted_td()
    blank = SimpleNamespace(a=td.a, b=TruncatedDifference.parse("********"))
    ranks = [recover_suffix_key(c, blank, 1, 20, 7, np.random.default_rng(s)).true_rank
             for s in range(40)]
    res = recover_suffix_key(c, blank, 1, 20, 7, np.random.default_rng(0))
    assert np.all(res.counts == 20)
    assert len(set(ranks)) > 10  # random tie-break spreads the rank


def test_recovery_preconditions():
    c, td = planted_td()
    with pytest.raises(ValueError):
        recover_suffix_key(c, td, 1, 0, 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        recover_suffix_key(planted(3, 1), td, 1, 10, 0, np.random.default_rng(0))


def test_expected_wrong_count():
    assert expected_wrong_count(45, 8) == 45 / 256
    assert expected_wrong_count(32, 1) == 16


def identity_distinguisher():
    c = toy8_identity(2, rotation=2)
    return c, algorithm3(c, 0.9, 4, seed=0, q=64, mode=PREFER_MAX_D).distinguisher


def test_identity_quadruples_always_return():
    c, d = identity_distinguisher()
    rng = np.random.default_rng(1)
    for k in (0, 17, 255):
        quad, right = generate_quadruple(c, k, d, rng)
        assert right and quad.Q ^ quad.Q2 == d.fwd.a
        assert quad.D == quad.C ^ d.bwd.a
    rates = right_rate_per_key(c, d, 20, rng)
    assert rates.shape == (256,) and np.all(rates == 1)


def test_shift_options():
    c, d = identity_distinguisher()
    rng = np.random.default_rng(2)
    q = quadruples(c, np.zeros(50, dtype=np.int64), d, rng, shift_field="b2", concretize="random")
    assert np.all(d.bwd.b.matches(q["D"] ^ q["C"]))
    with pytest.raises(ValueError):
        quadruples(c, [0], d, rng, shift_field="c")
    with pytest.raises(ValueError):
        quadruples(c, [0], d, rng, concretize="max")


def random_perm_return_rate(n_bits: int) -> float:
    """Exact return rate of a full-width boomerang on a uniform random permutation.

    With probability 1/(N-1) the ciphertext pair already differs by the
    shift, the shifted texts swap, and the quadruple returns for sure.
    Otherwise Q, Q' are a uniform ordered pair among the N-2 texts left,
    of which N-2 pairs have the right difference.
    """
    N = 1 << n_bits
    return 1 / (N - 1) + (N - 2) / (N - 1) / (N - 3)


def test_random_permutation_return_rate():
    _, d = identity_distinguisher()
    rp = random_perm(seed=11)
    n = 100_000
    keys = np.random.default_rng(3).integers(0, 256, n)
    right = quadruples(rp, keys, d, np.random.default_rng(4))["right"]
    p = random_perm_return_rate(8)
    se = math.sqrt(p * (1 - p) / n)
    assert abs(right.mean() - p) < 3 * se
    # about twice the naive 2^-d
    assert p == pytest.approx(2 * 2.0 ** -8, rel=0.01)


def exact_wrong_mean(cipher, td, k: int, pairs: int) -> float:
    """Expected mean count over wrong subkeys, from all 2^n plaintexts."""
    x = np.arange(1 << cipher.n)
    c0, c1 = cipher.encrypt(x, k), cipher.encrypt(x ^ td.a, k)
    cand = np.arange(1 << cipher.last_key_bits)[:, None]
    diff = cipher.peel_last_round(c0[None, :], cand) ^ cipher.peel_last_round(c1[None, :], cand)
    rate = td.b.matches(diff).mean(axis=1)
    return pairs * float(np.delete(rate, cipher.last_round_key(k)).mean())


def test_wrong_key_counts_match_exhaustive_expectation():
    c, td = planted_td()
    k, pairs, trials = 0x2B, 45, 300
    means = [recover_suffix_key(c, td, 1, pairs, k, np.random.default_rng(s)).wrong_counts.mean()
             for s in range(trials)]
    se = np.std(means, ddof=1) / math.sqrt(trials)
    assert abs(np.mean(means) - exact_wrong_mean(c, td, k, pairs)) < 3 * se


def test_two_proportion_z_matches_formula():
    z, pval = two_proportion_z(60, 100, 40, 100)
    pooled = 0.5
    want = 0.2 / math.sqrt(pooled * pooled * 2 / 100)
    assert z == pytest.approx(want)
    assert 0 < pval < 0.01
    assert two_proportion_z(0, 10, 0, 10) == (0.0, 1.0)


def test_distinguisher_report():
    c, d = identity_distinguisher()
    rep = boomerang_distinguish(c, random_perm(), d, 2000, np.random.default_rng(5))
    assert rep["a_rate"] == 1.0 and rep["distinguished"] and rep["baseline"] == 2 ** -8


def test_trial_log(tmp_path):
    write_trial_log(tmp_path / "t.csv", [{"a": 1, "b": 2, "c": 3}], ["a", "b"])
    assert list(csv.reader(open(tmp_path / "t.csv"))) == [["a", "b"], ["1", "2"]]
