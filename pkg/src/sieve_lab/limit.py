"""The limit model: a self-similar renewal set and a unit Poisson process.

On the log scale ``s = -log x`` the limit set is a stationary renewal
process whose spacings are distributed as ``-log W``.  A window of it over
``[x_lo, x_hi]`` starts from the stationary forward recurrence time at
``-log x_hi`` (that is, the largest point below ``x_hi`` is ``x_hi * W0``),
continues towards 0 with independent spacings, and grows past ``x_hi`` by
drawing the straddling spacing conditioned to exceed the realized forward
part.

Balls are the points of a unit-rate Poisson process on the half line.  The
occupancy counts ``Z^(i)`` are the numbers of balls in consecutive gaps of
the renewal set, starting with the gap that holds the leftmost ball ``Y``.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from . import _core, _fallback, streams
from ._params import DEFAULT_ATTEMPTS
from .errors import DataError, IncompleteScan, NumericalFailure
from .stats import mean_se


@dataclass(frozen=True)
class StopParams:
    """Stopping rule of the small-count scan.

    The scan ends once ``consecutive`` gaps in a row each hold more than
    ``factor * r_max`` balls.
    """

    consecutive: int = 12
    factor: float = 4.0
    gap_budget: int = 10_000_000

    def __post_init__(self):
        if self.consecutive < 1 or self.factor <= 0 or self.gap_budget < 1:
            raise ValueError(f"invalid stop parameters {self}")


class RenewalWindow:
    """A realization of the limit renewal set on ``[x_lo, x_hi]``.

    Realized points just outside the window are kept so that the window
    can be extended in either direction without conditioning errors.
    """

    def __init__(self, law, rng, x_lo, x_hi, attempts=DEFAULT_ATTEMPTS, rejection_budget=10**6):
        if not 0 < x_lo < x_hi:
            raise ValueError(f"need 0 < x_lo < x_hi, got [{x_lo}, {x_hi}]")
        self.law = law
        self._klaw = law.kernel_law()
        self._rng = rng
        self.attempts = attempts
        self.rejection_budget = rejection_budget
        self.x_lo = float(x_lo)
        self.x_hi = float(x_hi)
        forward = float(_fallback.draw_forward(self._klaw.grid_u, self._klaw.grid_r, rng))
        first = self.x_hi * math.exp(-forward)
        self._pts = [first]
        # the spacing above `first` is conditioned on exceeding `forward`
        self._pending_forward = forward
        self._extend_down(self.x_lo)

    def _spacing(self):
        return _fallback.draw_w(self._klaw, self._rng)[2]

    def _extend_down(self, x_lo):
        while self._pts[0] >= x_lo:
            self._pts.insert(0, self._pts[0] * math.exp(-self._spacing()))

    def _straddle(self, r):
        if self.attempts is None:
            for _ in range(self.rejection_budget):
                spacing = self._spacing()
                if spacing > r:
                    return spacing
            raise NumericalFailure(
                f"straddling spacing above {r:.4g} not found in {self.rejection_budget} draws",
                estimate=r,
            )
        return _fallback.draw_straddle(self._klaw, r, self.attempts, self._rng)

    def _extend_up(self, x_hi):
        if self._pending_forward is not None and self._pts[-1] <= x_hi:
            r = self._pending_forward
            self._pending_forward = None
            top = self._pts[-1]
            self._pts.append(top * math.exp(self._straddle(r)))
        while self._pts[-1] <= x_hi:
            self._pts.append(self._pts[-1] * math.exp(self._spacing()))

    def extend(self, x_lo=None, x_hi=None):
        """Grow the window; points already realized are kept."""
        if x_lo is not None and x_lo < self.x_lo:
            if x_lo <= 0:
                raise ValueError("x_lo must stay positive")
            self.x_lo = float(x_lo)
            self._extend_down(self.x_lo)
        if x_hi is not None and x_hi > self.x_hi:
            self.x_hi = float(x_hi)
            self._extend_up(self.x_hi)
        return self

    def predecessor(self, x):
        """Largest point of the set at or below ``x``, realizing more if needed."""
        if x > self.x_hi:
            self.extend(x_hi=x)
        while self._pts[0] > x:
            self._pts.insert(0, self._pts[0] * math.exp(-self._spacing()))
        return self._pts[bisect_right(self._pts, x) - 1]

    @property
    def points(self):
        lo = bisect_left(self._pts, self.x_lo)
        hi = bisect_right(self._pts, self.x_hi)
        return np.array(self._pts[lo:hi])

    def __len__(self):
        return len(self.points)


def build_window(law, rng, x_lo, x_hi, attempts=DEFAULT_ATTEMPTS):
    """Realize the limit renewal set on ``[x_lo, x_hi]``.

    ``attempts=None`` draws the straddling spacing by pure rejection.
    """
    return RenewalWindow(law, rng, x_lo, x_hi, attempts=attempts)


class PoissonStream:
    """Unit-rate Poisson points on the half line, generated left to right."""

    def __init__(self, rng):
        self._rng = rng
        self._pts = [rng.standard_exponential()]

    @property
    def first(self):
        return self._pts[0]

    @property
    def rightmost(self):
        return self._pts[-1]

    def extend_to(self, x):
        while self._pts[-1] <= x:
            self._pts.append(self._pts[-1] + self._rng.standard_exponential())
        return self

    @property
    def points(self):
        return np.array(self._pts)


@dataclass
class GapOccupancy:
    """Ball counts of consecutive gaps, left to right."""

    gaps: list

    @property
    def counts(self):
        return [c for _, _, c in self.gaps]

    def __len__(self):
        return len(self.gaps)


def gap_counts(boxes, balls):
    """Count the balls inside each gap between consecutive box points.

    ``boxes`` and ``balls`` are RenewalWindow/PoissonStream objects or sorted
    sequences.  Balls left of the first or right of the last box point are
    not assigned.  A ball that coincides with a box point raises DataError.
    Box points may repeat: spacings below float resolution (heavy laws)
    give zero-width gaps, which hold no balls.
    """
    b = np.asarray(boxes.points if hasattr(boxes, "points") else boxes, dtype=float)
    u = np.asarray(balls.points if hasattr(balls, "points") else balls, dtype=float)
    if isinstance(balls, PoissonStream) and len(b) and balls.rightmost < b[-1]:
        raise ValueError("the Poisson stream must be realized past the window")
    if np.any(np.diff(b) < 0) or np.any(np.diff(u) < 0):
        raise DataError("box points and balls must be sorted")
    gaps = []
    j = int(np.searchsorted(u, b[0], side="left")) if len(b) else 0
    for left, right in zip(b[:-1], b[1:]):
        if j < len(u) and u[j] == left:
            raise DataError(f"ball coincides with box point {left!r}")
        count = 0
        while j < len(u) and u[j] < right:
            count += 1
            j += 1
        if j < len(u) and u[j] == right:
            raise DataError(f"ball coincides with box point {right!r}")
        gaps.append((float(left), float(right), count))
    return GapOccupancy(gaps)


# ---------------------------------------------------------------------------
# occupancy counts of the limit model


def sample_limit_Z(law, rng, depth):
    """One draw of ``(Z^(1), ..., Z^(depth))``.

    Exact: ball counts in disjoint gaps are independent Poisson variables,
    so only the renewal set needs to be realized gap by gap.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    row = _core.kernels.limit_z(law.kernel_law(), int(depth), 1, DEFAULT_ATTEMPTS, rng)
    return tuple(int(v) for v in row[0])


def sample_limit_Z_windowed(law, rng, depth, attempts=DEFAULT_ATTEMPTS, max_points=10**7):
    """Reference draw of the ``Z`` prefix from explicit point sets.

    Realizes the renewal window and the Poisson stream as point sets and
    pairs them with :func:`gap_counts`.  Slow, and its cost grows with the
    realized counts; used to cross-check :func:`sample_limit_Z`.  Raises
    NumericalFailure when more than ``max_points`` balls would be needed.
    """
    stream = PoissonStream(rng)
    y = stream.first
    window = build_window(law, rng, y * 0.5, y, attempts=attempts)
    while len(window) == 0:
        window.extend(x_lo=window.x_lo * 0.5)
    hi = y
    while True:
        hi *= 2.0
        window.extend(x_hi=hi)
        pts = window.points
        start = int(np.searchsorted(pts, y, side="right")) - 1
        if len(pts) - start - 1 >= depth:
            break
    right = float(pts[start + depth])
    if right > max_points:
        raise NumericalFailure(
            f"reference sampler would need about {right:.3g} Poisson points", estimate=right
        )
    stream.extend_to(right)
    occ = gap_counts(pts[: start + depth + 1], stream)
    return tuple(occ.counts[start : start + depth])


def _z_block(rng, size, klaw, depth, attempts):
    return _core.kernels.limit_z(klaw, depth, size, attempts, rng)


def simulate_limit_Z(law, depth, replicates, seed=None, workers=1, attempts=DEFAULT_ATTEMPTS):
    """``replicates`` independent draws of the ``Z`` prefix as an int array."""
    klaw = law.kernel_law()
    parts = streams.run_blocks(
        _z_block, replicates, seed, "limit-z", workers, args=(klaw, int(depth), attempts)
    )
    return np.concatenate(parts, axis=0)


@dataclass
class KrSample:
    """Small-part counts of one limit realization.

    ``counts[r]`` is ``K_r*``; ``counts[0]`` is ``math.inf`` when
    ``nu = inf``.  ``gaps_scanned`` records where the stopping rule fired.
    """

    counts: tuple
    gaps_scanned: int
    stop: StopParams


def sample_limit_Kr(law, rng, r_max, stop=None):
    stop = stop or StopParams()
    counts, gaps = _kr_run(law.kernel_law(), rng, 1, int(r_max), stop, DEFAULT_ATTEMPTS)
    row = [int(v) for v in counts[0]]
    if math.isinf(law.nu()):
        row[0] = math.inf
    return KrSample(tuple(row), int(gaps[0]), stop)


def _kr_run(klaw, rng, size, r_max, stop, attempts):
    counts, gaps, failed = _core.kernels.limit_kr(
        klaw, r_max, size, stop.consecutive, float(stop.factor), stop.gap_budget, attempts, rng
    )
    if failed >= 0:
        raise IncompleteScan(
            f"stopping rule not met within {stop.gap_budget} gaps "
            f"(replicate {failed} of block, {int(gaps[failed])} gaps scanned)"
        )
    return counts, gaps


def _kr_block(rng, size, klaw, r_max, stop, attempts):
    counts, gaps = _kr_run(klaw, rng, size, r_max, stop, attempts)
    c = counts.astype(float)
    return c.sum(axis=0), (c * c).sum(axis=0), int(gaps.sum()), int(gaps.max())


@dataclass
class KrSummary:
    """Replicated estimates of ``E[K_r*]`` for ``r = 0..r_max``."""

    means: list
    ses: list
    replicates: int
    stop: StopParams
    gaps_mean: float
    gaps_max: int

    def to_dict(self):
        return {
            "replicates": self.replicates,
            "means": self.means,
            "se": self.ses,
            "stop": {
                "consecutive": self.stop.consecutive,
                "factor": self.stop.factor,
                "gap_budget": self.stop.gap_budget,
            },
            "gaps_mean": self.gaps_mean,
            "gaps_max": self.gaps_max,
        }


def simulate_limit_Kr(law, r_max, replicates, seed=None, stop=None, workers=1,
                      attempts=DEFAULT_ATTEMPTS):
    """Monte Carlo means and standard errors of ``K_r*``, ``r <= r_max``.

    For laws with ``nu = inf`` the ``r = 0`` entry is ``math.inf`` with no
    standard error; ``K_0* = inf`` holds almost surely but cannot be
    certified by a finite scan.
    """
    stop = stop or StopParams()
    klaw = law.kernel_law()
    parts = streams.run_blocks(
        _kr_block, replicates, seed, "limit-kr", workers, args=(klaw, int(r_max), stop, attempts)
    )
    s1 = np.zeros(r_max + 1)
    s2 = np.zeros(r_max + 1)
    gap_total = 0
    gap_max = 0
    for a, b, g, gm in parts:
        s1 += a
        s2 += b
        gap_total += g
        gap_max = max(gap_max, gm)
    means, ses = mean_se(s1, s2, replicates)
    if math.isinf(law.nu()):
        means[0] = math.inf
        ses[0] = math.nan
    return KrSummary(means, ses, replicates, stop, gap_total / replicates, gap_max)

