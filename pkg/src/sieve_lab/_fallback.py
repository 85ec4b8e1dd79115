"""Pure-Python simulation kernels.

Every function here mirrors ``_kernels.pyx`` draw for draw: both call the
same numpy distribution routines on the same bit generator in the same
order, so for a given ``Generator`` state the two backends return identical
arrays.  Keep them in lockstep when editing either one.
"""

import math
from bisect import bisect_right

import numpy as np
from scipy.special import betainc, betaincc, betainccinv, betaincinv

from ._params import HEAVY

BACKEND = "python"
LN2 = math.log(2.0)


def _pick(cumw, rng):
    if len(cumw) == 1:
        return 0
    u = rng.random()
    last = len(cumw) - 1
    for c in range(last):
        if u < cumw[c]:
            return c
    return last


def draw_w(law, rng):
    """One draw of W as the triple ``(w, 1 - w, -log w)``."""
    if law.kind == HEAVY:
        z = math.exp(rng.standard_exponential() / law.tail_index)
        q = math.exp(-z)
        return -math.expm1(-z), q, -math.log1p(-q)
    c = _pick(law.cumw, rng)
    a = law.alpha[c]
    b = law.beta[c]
    while True:
        x = rng.standard_gamma(a)
        y = rng.standard_gamma(b)
        if x > 0.0 and y > 0.0:
            break
    s = x + y
    return x / s, y / s, math.log1p(y / x)


def _heavy_survival(tail_index, r):
    # P{-log W > r} for W = 1 - exp(-Z), Z Pareto(tail_index) on [1, inf)
    z = -math.log(-math.expm1(-r))
    if z <= 1.0:
        return 0.0
    return 1.0 - math.pow(z, -tail_index)


def draw_tail(law, r, rng):
    """Draw ``-log W`` conditioned on exceeding ``r`` by inversion."""
    if law.kind == HEAVY:
        t = rng.random() * _heavy_survival(law.tail_index, r)
        z = math.pow(1.0 - t, -1.0 / law.tail_index)
        out = -math.log1p(-math.exp(-z))
    else:
        q0 = -math.expm1(-r)
        ncomp = len(law.cumw)
        surv = []
        total = 0.0
        prev = 0.0
        for c in range(ncomp):
            weight = law.cumw[c] - prev
            prev = law.cumw[c]
            if r > LN2:
                s = float(betainc(law.alpha[c], law.beta[c], math.exp(-r)))
            else:
                s = float(betaincc(law.beta[c], law.alpha[c], q0))
            surv.append(s)
            total += weight * s
        c = 0
        if ncomp > 1:
            v = rng.random() * total
            acc = 0.0
            prev = 0.0
            c = ncomp - 1
            for j in range(ncomp - 1):
                acc += (law.cumw[j] - prev) * surv[j]
                prev = law.cumw[j]
                if v < acc:
                    c = j
                    break
        t = rng.random() * surv[c]
        if t < 0.5:
            out = -math.log(float(betaincinv(law.alpha[c], law.beta[c], t)))
        else:
            out = -math.log1p(-float(betainccinv(law.beta[c], law.alpha[c], t)))
    if not out > r:
        out = math.nextafter(r, math.inf)
    return out


def draw_straddle(law, r, attempts, rng):
    """Length of the renewal spacing straddling a point with forward part ``r``."""
    for _ in range(attempts):
        spacing = draw_w(law, rng)[2]
        if spacing > r:
            return spacing
    return draw_tail(law, r, rng)


def draw_forward(grid_u, grid_r, rng):
    """Stationary forward recurrence time on the log scale (``-log W0``)."""
    u = rng.random()
    i = bisect_right(grid_u, u) - 1
    if i >= len(grid_u) - 1:
        return grid_r[-1]
    return grid_r[i] + (u - grid_u[i]) * (grid_r[i + 1] - grid_r[i]) / (
        grid_u[i + 1] - grid_u[i]
    )


def sieve_chains(law, n, reps, rng):
    """Right-to-left box counts of ``reps`` independent sieve outcomes.

    Returns the concatenated counts and the per-replicate chain lengths.
    """
    counts = []
    lengths = np.empty(reps, dtype=np.int64)
    for i in range(reps):
        m = n
        k = 0
        while m > 0:
            q = draw_w(law, rng)[1]
            c = int(rng.binomial(m, q))
            counts.append(c)
            m -= c
            k += 1
        lengths[i] = k
    return np.array(counts, dtype=np.int64), lengths


def limit_z(law, depth, reps, attempts, rng):
    """Occupancy counts of the first ``depth`` gaps from the leftmost ball."""
    gu = law.grid_u.tolist()
    gr = law.grid_r.tolist()
    out = np.zeros((reps, depth), dtype=np.int64)
    for i in range(reps):
        y = rng.standard_exponential()
        r = draw_forward(gu, gr, rng)
        spacing = draw_straddle(law, r, attempts, rng)
        out[i, 0] = 1 + rng.poisson(y * math.expm1(spacing - r))
        left = y * math.exp(spacing - r)
        for j in range(1, depth):
            spacing = draw_w(law, rng)[2]
            length = left * math.expm1(spacing)
            out[i, j] = rng.poisson(length)
            left += length
    return out


def limit_kr(law, r_max, reps, consecutive, factor, gap_budget, attempts, rng):
    """Small-count gap tallies right of the leftmost ball.

    Returns ``(counts, gaps, status)``; ``counts[i, r]`` is the number of
    gaps holding exactly ``r`` balls, ``gaps[i]`` the number of gaps scanned
    and ``status`` the index of the first replicate that hit the gap budget,
    or -1.
    """
    gu = law.grid_u.tolist()
    gr = law.grid_r.tolist()
    counts = np.zeros((reps, r_max + 1), dtype=np.int64)
    gaps = np.zeros(reps, dtype=np.int64)
    big = factor * r_max
    for i in range(reps):
        y = rng.standard_exponential()
        r = draw_forward(gu, gr, rng)
        spacing = draw_straddle(law, r, attempts, rng)
        c = 1 + rng.poisson(y * math.expm1(spacing - r))
        left = y * math.exp(spacing - r)
        if c <= r_max:
            counts[i, c] += 1
        run = 1 if c > big else 0
        scanned = 1
        while run < consecutive:
            if scanned >= gap_budget:
                gaps[i] = scanned
                return counts, gaps, i
            spacing = draw_w(law, rng)[2]
            length = left * math.expm1(spacing)
            c = rng.poisson(length)
            left += length
            scanned += 1
            if c <= r_max:
                counts[i, c] += 1
            run = run + 1 if c > big else 0
        gaps[i] = scanned
    return counts, gaps, -1
