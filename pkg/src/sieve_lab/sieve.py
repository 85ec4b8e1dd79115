"""Finite-n Monte Carlo of the Bernoulli sieve.

Balls are never materialized.  Given ``P_{j-1}``, the ``m`` balls not yet
placed are iid uniform on ``[0, P_{j-1}]`` and each falls into
``]P_j, P_{j-1}[`` with probability ``1 - W_j``, so box ``j`` receives a
``Binomial(m, 1 - W_j)`` count.  The chain stops when every ball is placed,
after ``I_n`` steps.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _core, streams
from .exact import Pattern
from .stats import mean_se


@dataclass(frozen=True)
class SieveOutcome:
    """Box counts of one sieve realization, from the box adjacent to 1 leftwards."""

    box_counts_right_to_left: tuple
    n: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.box_counts_right_to_left)
        object.__setattr__(self, "box_counts_right_to_left", counts)
        if sum(counts) != self.n:
            raise ValueError(f"box counts {counts} do not add up to n={self.n}")
        if not counts or counts[-1] <= 0:
            raise ValueError("the last box of the chain must be occupied")

    @property
    def pattern(self):
        return Pattern.from_right_to_left(self.box_counts_right_to_left)

    @property
    def depth(self):
        """``I_n``."""
        return len(self.box_counts_right_to_left)

    def z(self, i):
        k = self.depth
        return self.box_counts_right_to_left[k - i] if 1 <= i <= k else 0

    @property
    def occupied(self):
        """``K_n``."""
        return sum(1 for c in self.box_counts_right_to_left if c > 0)

    def r_count(self, r):
        """``K_{n,r}``; ``r = 0`` counts empty boxes right of the leftmost ball."""
        return sum(1 for c in self.box_counts_right_to_left if c == r)


def simulate_outcome(law, n, rng):
    """One sieve outcome with ``n`` balls."""
    if n < 1:
        raise ValueError("n must be positive")
    flat, _ = _core.kernels.sieve_chains(law.kernel_law(grid=False), int(n), 1, rng)
    return SieveOutcome(tuple(int(c) for c in flat), int(n))


def simulate_outcome_direct(law, n, rng):
    """Reference sampler that throws ``n`` explicit uniforms into the boxes.

    O(n log n) and slow; used only to validate the binomial chain.
    """
    u = np.sort(rng.random(n))
    lowest = u[0]
    cuts = [1.0]
    while cuts[-1] >= lowest:
        cuts.append(cuts[-1] * law.sample(rng))
    edges = np.array(cuts[::-1])
    # box j (from 1) is ]P_j, P_{j-1}[ ; searchsorted on ascending edges
    idx = np.searchsorted(edges, u, side="right")
    per_box = np.bincount(idx, minlength=len(edges))
    right_to_left = per_box[1:][::-1]
    return SieveOutcome(tuple(int(c) for c in right_to_left), int(n))


@dataclass
class EmpiricalPmf:
    """Occurrence counts of a discrete statistic over replicates."""

    counts: dict
    replicates: int

    def freq(self, key):
        return self.counts.get(key, 0) / self.replicates

    def se(self, key):
        p = self.freq(key)
        return math.sqrt(p * (1.0 - p) / self.replicates)

    def frequencies(self):
        return {k: c / self.replicates for k, c in self.counts.items()}

    def merge(self, other):
        merged = Counter(self.counts)
        merged.update(other.counts)
        return EmpiricalPmf(dict(merged), self.replicates + other.replicates)

    def to_dict(self):
        rows = sorted(self.counts.items(), key=lambda kv: (-kv[1], _sort_key(kv[0])))
        return {
            "replicates": self.replicates,
            "cells": [
                {"key": key_str(k), "count": c, "frequency": c / self.replicates,
                 "se": self.se(k)}
                for k, c in rows
            ],
        }

    def csv_rows(self):
        rows = sorted(self.counts.items(), key=lambda kv: (-kv[1], _sort_key(kv[0])))
        out = ["key,count,frequency,se"]
        out += [f"{key_str(k)},{c},{c / self.replicates!r},{self.se(k)!r}" for k, c in rows]
        return out


def key_str(key):
    if isinstance(key, tuple):
        return "-".join(map(str, key))
    return str(key)


def _sort_key(key):
    return key if isinstance(key, tuple) else (key,)


STATISTICS = ("pattern", "z", "I", "K", "kr")
FULL_PATTERN_MAX_N = 12


def _z_matrix(flat, lengths, depth):
    ends = np.cumsum(lengths) - 1
    offs = np.arange(depth)
    idx = ends[:, None] - offs[None, :]
    valid = offs[None, :] < lengths[:, None]
    return np.where(valid, flat[np.where(valid, idx, 0)], 0)


def _count_rows(mat):
    rows, counts = np.unique(mat, axis=0, return_counts=True)
    return rows, counts


def _sieve_block(rng, size, klaw, n, stat, depth, r_max):
    flat, lengths = _core.kernels.sieve_chains(klaw, n, size, rng)
    rep = np.repeat(np.arange(size), lengths)
    table = {}
    if stat == "pattern" and n <= FULL_PATTERN_MAX_N:
        width = int(lengths.max())
        mat = np.column_stack([lengths, _z_matrix(flat, lengths, width)])
        rows, counts = _count_rows(mat)
        for row, c in zip(rows, counts):
            table[tuple(int(v) for v in row[1 : 1 + row[0]])] = int(c)
    elif stat in ("pattern", "z"):
        rows, counts = _count_rows(_z_matrix(flat, lengths, depth))
        for row, c in zip(rows, counts):
            table[tuple(int(v) for v in row)] = int(c)
    zeros = np.bincount(rep[flat == 0], minlength=size)
    occupied = lengths - zeros
    if stat in ("I", "K"):
        values, counts = np.unique(lengths if stat == "I" else occupied, return_counts=True)
        table = {int(v): int(c) for v, c in zip(values, counts)}
    kr = np.empty((size, r_max + 1))
    kr[:, 0] = zeros
    for r in range(1, r_max + 1):
        kr[:, r] = np.bincount(rep[flat == r], minlength=size)
    extra = np.column_stack([lengths, occupied]).astype(float)
    return table, kr.sum(axis=0), (kr * kr).sum(axis=0), extra.sum(axis=0), (extra**2).sum(axis=0)


@dataclass
class SieveReplicates:
    """Aggregated output of :func:`replicate`."""

    law: str
    n: int
    stat: str
    pmf: EmpiricalPmf
    kr_means: list
    kr_se: list
    depth_mean: float
    depth_se: float
    occupied_mean: float
    occupied_se: float
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "law": self.law,
            "n": self.n,
            "stat": self.stat,
            "pmf": self.pmf.to_dict() if self.pmf.counts else None,
            "K_nr_mean": self.kr_means,
            "K_nr_se": self.kr_se,
            "I_n_mean": self.depth_mean,
            "I_n_se": self.depth_se,
            "K_n_mean": self.occupied_mean,
            "K_n_se": self.occupied_se,
        }


def replicate(law, n, replicates, seed=None, stat="pattern", depth=8, r_max=None, workers=1):
    """Run ``replicates`` independent sieves with ``n`` balls and aggregate.

    ``stat`` picks the tabulated statistic: ``'pattern'`` (full pattern for
    ``n <= 12``, else the ``Z`` prefix of length ``depth``), ``'z'``,
    ``'I'`` (``I_n``), ``'K'`` (``K_n``) or ``'kr'`` (means only).  Means
    and standard errors of ``K_{n,r}`` for ``r <= r_max`` are always
    reported.
    """
    if stat not in STATISTICS:
        raise ValueError(f"unknown statistic {stat!r}; choose from {STATISTICS}")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if r_max is None:
        r_max = min(int(n), 8)
    klaw = law.kernel_law(grid=False)
    parts = streams.run_blocks(
        _sieve_block, replicates, seed, f"sieve-{n}", workers,
        args=(klaw, int(n), stat, int(depth), int(r_max)),
    )
    table = Counter()
    s1 = np.zeros(r_max + 1)
    s2 = np.zeros(r_max + 1)
    e1 = np.zeros(2)
    e2 = np.zeros(2)
    for t, a, b, c, d in parts:
        table.update(t)
        s1 += a
        s2 += b
        e1 += c
        e2 += d
    kr_means, kr_se = mean_se(s1, s2, replicates)
    (dm, km), (ds, ks) = mean_se(e1, e2, replicates)
    return SieveReplicates(
        law.spec, int(n), stat, EmpiricalPmf(dict(table), replicates),
        kr_means, kr_se, dm, ds, km, ks,
    )

