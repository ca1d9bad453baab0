"""Differential search on a single Boolean function from BV samples."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .cipherkit import ComponentFunction, component_truth_table
from .gf2core import AffineSolutionSet, solve_pair
from .walshsim import BVSampler, walsh_spectrum


@dataclass
class Alg1Result:
    found: bool
    zero: AffineSolutionSet
    one: AffineSolutionSet
    samples_used: int
    W: Counter = field(repr=False)
    rank: int

    @property
    def outcome(self) -> str:
        return "Found" if self.found else "No"


def count_samples(sampler: BVSampler, q: int, project_shift: int = 0) -> Counter:
    """Multiset of ``u >> project_shift`` over ``q`` draws."""
    counts: Counter = Counter()
    for chunk in sampler.sample_chunks(q):
        if project_shift:
            chunk = chunk >> project_shift
        vals, cnt = np.unique(chunk, return_counts=True)
        counts.update(dict(zip(vals.tolist(), cnt.tolist())))
    return counts


def algorithm1(f, q: int, rng: np.random.Generator) -> Alg1Result:
    """Sample BV ``q`` times and solve ``x.u = i`` over the samples for ``i = 0, 1``.

    ``f`` is a 0/1 truth table or a :class:`ComponentFunction`.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    table = component_truth_table(f) if isinstance(f, ComponentFunction) else np.asarray(f)
    spec = walsh_spectrum(table)
    W = count_samples(BVSampler(spec, rng), q)
    pair, rank = solve_pair(sorted(W), spec.N)
    found = pair.zero.nontrivial() or pair.one.nontrivial()
    return Alg1Result(found, pair.zero, pair.one, q, W, rank)
