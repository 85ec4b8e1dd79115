"""Comparison of empirical frequencies against exact probability tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

P_FLOOR = 1e-300


def mean_se(s1, s2, n):
    """Means and standard errors from running sums of values and squares."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    mean = s1 / n
    if n > 1:
        var = np.maximum(s2 - n * mean * mean, 0.0) / (n - 1)
        se = np.sqrt(var / n)
    else:
        se = np.full_like(mean, math.nan)
    return mean.tolist(), se.tolist()


def _as_probs(pmf):
    if hasattr(pmf, "frequencies"):
        return pmf.frequencies()
    if hasattr(pmf, "entries"):
        return dict(pmf.entries)
    return dict(pmf)


def tv_components(p, q, support=None):
    """Total variation split into the part on ``support`` and the excluded part.

    Returns ``(within, excluded)`` where ``within = 1/2 sum_support |p - q|``
    and ``excluded = 1/2 |p(outside) - q(outside)|``, the outside masses
    being ``1 - p(support)`` and ``1 - q(support)``.
    """
    p = _as_probs(p)
    q = _as_probs(q)
    keys = set(p) | set(q) if support is None else set(support)
    if not keys:
        raise ValueError("empty common support")
    diffs = [abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys]
    pin = math.fsum(p.get(k, 0.0) for k in keys)
    qin = math.fsum(q.get(k, 0.0) for k in keys)
    within = 0.5 * math.fsum(diffs)
    excluded = 0.5 * abs((1.0 - pin) - (1.0 - qin)) if support is not None else 0.0
    return within, excluded


def tv_distance(p, q, support=None):
    """Total variation distance between two PMFs (dicts or PMF objects)."""
    within, excluded = tv_components(p, q, support)
    return min(1.0, within + excluded)


@dataclass
class Cell:
    key: object
    expected: float
    observed: int
    se: float


@dataclass
class ComparisonReport:
    """Empirical-versus-exact comparison of one discrete law."""

    tv_distance: float
    chi_square: tuple
    cells: list = field(default_factory=list)
    excluded_expected: float = 0.0
    excluded_observed: float = 0.0
    tail_bound: float = 0.0
    replicates: int = 0

    @property
    def statistic(self):
        return self.chi_square[0]

    @property
    def df(self):
        return self.chi_square[1]

    @property
    def p_value(self):
        return self.chi_square[2]

    @property
    def tv_upper(self):
        """TV distance plus the truncation bound of the exact table."""
        return min(1.0, self.tv_distance + self.tail_bound)

    def to_dict(self):
        from .sieve import key_str

        return {
            "tv_distance": self.tv_distance,
            "tv_upper": self.tv_upper,
            "chi_square": {"statistic": self.statistic, "df": self.df, "p_value": self.p_value},
            "replicates": self.replicates,
            "excluded_mass": {
                "expected": self.excluded_expected,
                "observed": self.excluded_observed,
            },
            "tail_bound": self.tail_bound,
            "cells": [
                {"key": key_str(c.key), "expected": c.expected, "observed": c.observed, "se": c.se}
                for c in self.cells
            ],
        }


def chi_square_gof(observed, expected, min_expected=5.0, support=None, tail_bound=0.0):
    """Pearson goodness of fit of an EmpiricalPmf against exact probabilities.

    ``expected`` maps keys to probabilities; only keys in ``support`` (all of
    ``expected`` by default) get their own cell.  Cells whose expected count
    is below ``min_expected`` are pooled with everything outside the support
    into one tail cell whose expected mass is ``1 - sum(compared)``.
    """
    expected = _as_probs(expected)
    keys = list(expected) if support is None else [k for k in support]
    n = observed.replicates
    counts = observed.counts
    compared = sorted(keys, key=lambda k: k if isinstance(k, tuple) else (k,))
    cells = []
    pooled_e = 0.0
    pooled_o = 0
    for k in compared:
        e = expected.get(k, 0.0)
        o = counts.get(k, 0)
        if e * n < min_expected:
            pooled_e += e
            pooled_o += o
        else:
            cells.append(Cell(k, e, o, math.sqrt(e * (1.0 - e) / n)))
    inside_e = math.fsum(expected.get(k, 0.0) for k in compared)
    inside_o = sum(counts.get(k, 0) for k in compared)
    outside_e = max(0.0, 1.0 - inside_e)
    outside_o = n - inside_o
    tail_e = pooled_e + outside_e
    tail_o = pooled_o + outside_o
    if tail_e * n > 0 or tail_o > 0:
        cells.append(Cell("<tail>", tail_e, tail_o, math.sqrt(max(tail_e * (1 - tail_e), 0) / n)))
    if len(cells) < 2:
        raise ValueError("fewer than two cells left after pooling")
    stat = 0.0
    for c in cells:
        e = c.expected * n
        if e > 0:
            stat += (c.observed - e) ** 2 / e
        elif c.observed > 0:
            stat = math.inf
    df = len(cells) - 1
    p = chi2_sf(stat, df)
    obs_freq = {k: v / n for k, v in counts.items()}
    within, excluded = tv_components(obs_freq, expected, compared)
    return ComparisonReport(
        tv_distance=min(1.0, within + excluded),
        chi_square=(stat, df, p),
        cells=cells,
        excluded_expected=outside_e,
        excluded_observed=outside_o / n,
        tail_bound=tail_bound,
        replicates=n,
    )


def chi2_sf(stat, df):
    """Upper tail of the chi-square law, floored at 1e-300."""
    if math.isinf(stat):
        return P_FLOOR
    return max(P_FLOOR, float(gammaincc(df / 2.0, stat / 2.0)))


@dataclass
class ConvergenceRow:
    n: int
    estimate: float
    se: float
    gap: float


@dataclass
class ConvergenceTable:
    target: float
    rows: list
    monotone: bool

    def to_dict(self):
        return {
            "target": "inf" if math.isinf(self.target) else self.target,
            "monotone": self.monotone,
            "rows": [
                {"n": r.n, "estimate": r.estimate, "se": r.se, "gap": r.gap} for r in self.rows
            ],
        }

    def csv_rows(self):
        return ["n,estimate,se,gap"] + [f"{r.n},{r.estimate!r},{r.se!r},{r.gap!r}" for r in self.rows]


def convergence_table(series, target):
    """Gaps ``|estimate - target|`` along increasing ``n`` with a monotone flag.

    ``series`` holds ``(n, estimate, se)`` rows.  For ``target = inf`` the
    raw estimates replace the gaps and the flag asks for strict increase,
    the divergence-mode reading.
    """
    rows = sorted(series, key=lambda r: r[0])
    if len(rows) < 2:
        raise ValueError("need at least two rows")
    diverging = math.isinf(target)
    out = []
    for n, est, se in rows:
        gap = est if diverging else abs(est - target)
        out.append(ConvergenceRow(int(n), float(est), float(se), float(gap)))
    gaps = [r.gap for r in out]
    if diverging:
        monotone = all(b > a for a, b in zip(gaps, gaps[1:]))
    else:
        monotone = all(b <= a for a, b in zip(gaps, gaps[1:]))
    return ConvergenceTable(float(target), out, monotone)
