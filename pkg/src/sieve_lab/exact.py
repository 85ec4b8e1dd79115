"""Exact occupancy probabilities for the Bernoulli sieve and its limit.

Patterns are read left to right: ``parts[0]`` is the number of balls in the
leftmost occupied box and ``parts[-1]`` the number in the box adjacent to 1.
With left cumulative sums ``S_j = parts[0] + ... + parts[j-1]`` the
probability of a pattern with ``n`` balls is

    prod_j p(S_j : parts[j-1]),   p(s : m) = C(s, m) E[W^(s-m) (1-W)^m],

and the limit law of the first ``l`` occupancy counts is the same product
divided by ``mu * S_l``.  The multinomial coefficient of the pattern is the
product of the binomials already inside the ``p`` factors and is not
applied a second time.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from .errors import BudgetExceeded, TruncationError
from .laws import Beta, BetaMixture

TINY = 1e-300


@dataclass(frozen=True, order=True)
class Pattern:
    """A weak composition with a positive first part, read left to right."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts:
            raise ValueError("a pattern needs at least one part")
        if parts[0] <= 0:
            raise ValueError(f"the leftmost occupied box must be nonempty, got {parts}")
        if any(p < 0 for p in parts):
            raise ValueError(f"parts must be nonnegative, got {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_right_to_left(cls, counts):
        """Pattern from box counts ordered from the box adjacent to 1."""
        return cls(tuple(reversed(tuple(counts))))

    @classmethod
    def parse(cls, text):
        return cls(tuple(int(p) for p in text.split("-")))

    @property
    def key(self):
        return "-".join(map(str, self.parts))

    @property
    def total(self):
        return sum(self.parts)

    @property
    def depth(self):
        """Index of the leftmost occupied interval (``I_n``)."""
        return len(self.parts)

    @property
    def cumsums(self):
        out = []
        s = 0
        for p in self.parts:
            s += p
            out.append(s)
        return tuple(out)

    def z(self, i):
        """Occupancy of the ``i``-th box from the leftmost occupied one (1-based)."""
        return self.parts[i - 1] if i <= len(self.parts) else 0

    @property
    def occupied(self):
        """``K_n``."""
        return sum(1 for p in self.parts if p > 0)

    def r_count(self, r):
        """``K_{n,r}``; for ``r = 0`` the empty boxes right of the leftmost ball."""
        if r == 0:
            return sum(1 for p in self.parts[1:] if p == 0)
        return sum(1 for p in self.parts if p == r)

    def __len__(self):
        return len(self.parts)

    def __str__(self):
        return self.key


def _as_parts(pattern):
    if isinstance(pattern, Pattern):
        return pattern.parts
    return Pattern(tuple(pattern)).parts


def p_nm(law, n, m):
    """Probability ``p(n:m)`` that ``]P_1, 1[`` holds ``m`` of ``n`` balls.

    ``p(n:0) = E[W^n]`` and ``p(0:0) = 1``.
    """
    n = int(n)
    m = int(m)
    if n < 0 or not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    if n == 0:
        return 1.0
    if n <= 1000:
        return math.comb(n, m) * law.joint_moment(n - m, m)
    log_comb = math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
    return math.exp(log_comb + law.log_joint_moment(n - m, m))


def _product(factors):
    prob = 1.0
    for f in factors:
        if f < TINY:
            break
        prob *= f
    else:
        return prob
    if any(f <= 0 for f in factors):
        return 0.0
    return math.exp(math.fsum(math.log(f) for f in factors))


def _factors(law, parts):
    out = []
    s = 0
    for part in parts:
        s += part
        out.append(p_nm(law, s, part))
    return out


def pattern_prob(law, pattern):
    """Exact probability that the sieve with ``sum(pattern)`` balls shows ``pattern``."""
    return _product(_factors(law, _as_parts(pattern)))


def limit_pmf(law, parts):
    """``P{Z^(1) = n_1, ..., Z^(l) = n_l}`` in the ``n -> inf`` limit."""
    parts = _as_parts(parts)
    total = sum(parts)
    factors = _factors(law, parts)
    factors.append(1.0 / (law.mu() * total))
    return _product(factors)


def expected_kr(law, r):
    """Limit mean ``E[K_r*]``: ``1/(mu r)`` for ``r >= 1``, ``nu/mu`` for ``r = 0``."""
    r = int(r)
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    mu = law.mu()
    if r == 0:
        nu = law.nu()
        return math.inf if math.isinf(nu) else nu / mu
    return 1.0 / (mu * r)


# ---------------------------------------------------------------------------
# finite-n enumeration


@dataclass
class PatternPmf:
    """Probabilities of all enumerated patterns with a bound on what was left out."""

    entries: dict
    n: int
    k_max: int
    tail_bound: float
    pruned_mass: float = 0.0
    nodes: int = 0

    @property
    def covered_mass(self):
        return math.fsum(self.entries.values())

    def __getitem__(self, pattern):
        if not isinstance(pattern, Pattern):
            pattern = Pattern(tuple(pattern))
        return self.entries[pattern]

    def get(self, pattern, default=0.0):
        if not isinstance(pattern, Pattern):
            pattern = Pattern(tuple(pattern))
        return self.entries.get(pattern, default)

    def __len__(self):
        return len(self.entries)

    def by_key(self):
        """Probabilities keyed by the ``'2-1'`` string form."""
        return {p.key: v for p, v in self.entries.items()}

    def to_dict(self):
        rows = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0].parts))
        return {
            "n": self.n,
            "k_max": self.k_max,
            "covered_mass": self.covered_mass,
            "tail_bound": self.tail_bound,
            "pruned_mass": self.pruned_mass,
            "patterns": [{"key": p.key, "pattern": list(p.parts), "probability": v}
                         for p, v in rows],
        }

    def csv_rows(self):
        rows = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0].parts))
        return ["pattern,probability"] + [f"{p.key},{v!r}" for p, v in rows]


def _p_rows(law, n):
    return [[p_nm(law, s, m) for m in range(s + 1)] for s in range(n + 1)]


def enumerate_finite(law, n, k_max, floor=1e-16, budget=2_000_000):
    """All patterns of ``n`` balls with at most ``k_max`` parts.

    Subtrees whose prefix probability falls below ``floor`` are dropped and
    their mass bound ``prefix / (1 - E[W^S])`` is added to the tail bound,
    together with ``n E[W]^k_max >= P{I_n > k_max}``.  Raises
    BudgetExceeded when more than ``budget`` search nodes are needed.
    """
    n = int(n)
    k_max = int(k_max)
    if n < 1 or k_max < 1:
        raise ValueError(f"need n >= 1 and k_max >= 1, got n={n}, k_max={k_max}")
    p = _p_rows(law, n)
    stay = [1.0] + [1.0 / (1.0 - p[s][0]) for s in range(1, n + 1)]
    entries = {}
    pruned = []
    nodes = 0
    stack = [((m,), m, p[m][m]) for m in range(n, 0, -1)]
    while stack:
        parts, s, prob = stack.pop()
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(
                f"enumeration of n={n}, k_max={k_max} exceeded {budget} nodes", count=nodes
            )
        if prob < floor:
            pruned.append(prob * stay[s])
            continue
        if s == n:
            entries[Pattern(parts)] = prob
        if len(parts) >= k_max:
            continue
        for m in range(n - s, -1, -1):
            child = prob * p[s + m][m]
            stack.append((parts + (m,), s + m, child))
    pruned_mass = math.fsum(pruned)
    tail = min(1.0, n * law.mean() ** k_max + pruned_mass)
    return PatternPmf(entries, n, k_max, tail, pruned_mass, nodes)


@dataclass
class FiniteMarginals:
    """Marginal laws of the finite-n statistics, aggregated from a PatternPmf."""

    n: int
    tail_bound: float
    z: dict = field(default_factory=dict)
    depth: dict = field(default_factory=dict)
    occupied: dict = field(default_factory=dict)
    r_counts: dict = field(default_factory=dict)
    r_means: dict = field(default_factory=dict)

    def to_dict(self):
        def table(d):
            return {str(k): v for k, v in sorted(d.items())}

        return {
            "n": self.n,
            "tail_bound": self.tail_bound,
            "Z": {str(i): table(d) for i, d in sorted(self.z.items())},
            "I_n": table(self.depth),
            "K_n": table(self.occupied),
            "K_nr": {str(r): table(d) for r, d in sorted(self.r_counts.items())},
            "K_nr_mean": table(self.r_means),
        }


def _fsum_table(lists):
    return {k: math.fsum(v) for k, v in lists.items()}


def marginals_from_pmf(pmf, z_depth=8):
    z = defaultdict(lambda: defaultdict(list))
    depth = defaultdict(list)
    occupied = defaultdict(list)
    r_counts = defaultdict(lambda: defaultdict(list))
    r_means = defaultdict(list)
    n = pmf.n
    for pattern, prob in pmf.entries.items():
        for i in range(1, z_depth + 1):
            z[i][pattern.z(i)].append(prob)
        depth[pattern.depth].append(prob)
        occupied[pattern.occupied].append(prob)
        for r in range(n + 1):
            c = pattern.r_count(r)
            r_counts[r][c].append(prob)
            r_means[r].append(c * prob)
    return FiniteMarginals(
        n=n,
        tail_bound=pmf.tail_bound,
        z={i: _fsum_table(d) for i, d in z.items()},
        depth=_fsum_table(depth),
        occupied=_fsum_table(occupied),
        r_counts={r: _fsum_table(d) for r, d in r_counts.items()},
        r_means=_fsum_table(r_means),
    )


def finite_marginals(law, n, k_max, z_depth=8, **kwargs):
    """Marginals of ``Z_n^(i)`` (``i <= z_depth``), ``I_n``, ``K_n`` and ``K_{n,r}``."""
    return marginals_from_pmf(enumerate_finite(law, n, k_max, **kwargs), z_depth)


# ---------------------------------------------------------------------------
# limit marginals


def p_table(law, size):
    """Array ``P[s, m] = p(s:m)`` for ``0 <= m <= s <= size`` (zero above the diagonal)."""
    s = np.arange(size + 1)[:, None]
    m = np.arange(size + 1)[None, :]
    valid = m <= s
    if isinstance(law, (Beta, BetaMixture)):
        comps = [(1.0, law)] if isinstance(law, Beta) else list(zip(law.weights, law.components))
        mm = np.where(valid, m, 0)
        rest = np.where(valid, s - m, 0)
        log_comb = gammaln(s + 1) - gammaln(mm + 1) - gammaln(rest + 1)
        out = np.zeros((size + 1, size + 1))
        for w, c in comps:
            log_mom = betaln(c.alpha + rest, c.beta + mm) - betaln(c.alpha, c.beta)
            out += w * np.exp(np.where(valid, log_comb + log_mom, -np.inf))
        out[~valid] = 0.0
        out[0, 0] = 1.0
        return out
    out = np.zeros((size + 1, size + 1))
    for si in range(size + 1):
        for mi in range(si + 1):
            out[si, mi] = p_nm(law, si, mi)
    return out


@dataclass
class LimitMarginal:
    coordinate: int
    pmf: dict
    residual: float

    def to_dict(self):
        return {
            "coordinate": self.coordinate,
            "pmf": {str(k): v for k, v in sorted(self.pmf.items())},
            "residual": self.residual,
        }


def limit_marginal(law, coordinate, support_cap, lower_cap=400, tol=None):
    """Law of ``Z^(coordinate)`` on ``0..support_cap`` in the limit model.

    Lower coordinates are summed with their running total capped at
    ``lower_cap``.  Since the limit law is a probability distribution the
    unreported mass is exactly ``1 - sum(pmf)``; it is returned as
    ``residual`` and must not exceed ``tol`` when one is given.
    """
    ell = int(coordinate)
    cap = int(support_cap)
    if ell < 1 or cap < 1:
        raise ValueError("coordinate and support_cap must be positive")
    mu = law.mu()
    if ell == 1:
        pmf = {m: p_nm(law, m, m) / (mu * m) for m in range(1, cap + 1)}
        pmf[0] = 0.0
    else:
        size = lower_cap + cap
        P = p_table(law, size)
        # F[S] = total product weight of (n_1..n_j) with n_1 > 0 summing to S
        F = np.zeros(lower_cap + 1)
        F[1:] = np.diag(P)[1 : lower_cap + 1]
        for _ in range(ell - 2):
            G = np.zeros_like(F)
            for s_new in range(1, lower_cap + 1):
                prev = F[1 : s_new + 1]
                G[s_new] = prev @ P[s_new, s_new - np.arange(1, s_new + 1)]
            F = G
        S = np.arange(1, lower_cap + 1)
        pmf = {}
        for m in range(cap + 1):
            terms = F[1:] * P[S + m, m] / (mu * (S + m))
            pmf[m] = math.fsum(terms.tolist())
    residual = max(0.0, 1.0 - math.fsum(pmf.values()))
    if tol is not None and residual > tol:
        raise TruncationError(
            f"residual mass {residual:.3g} of Z^({ell}) exceeds tolerance {tol:.3g}",
            residual=residual,
        )
    return LimitMarginal(ell, pmf, residual)


# ---------------------------------------------------------------------------
# finite-n law of the first two occupancy counts


def p_row(law, s):
    """Array ``[p(s:0), ..., p(s:s)]``."""
    s = int(s)
    if isinstance(law, (Beta, BetaMixture)):
        m = np.arange(s + 1)
        comps = [(1.0, law)] if isinstance(law, Beta) else list(zip(law.weights, law.components))
        log_comb = gammaln(s + 1) - gammaln(m + 1) - gammaln(s - m + 1)
        out = np.zeros(s + 1)
        for w, c in comps:
            out += w * np.exp(log_comb + betaln(c.alpha + s - m, c.beta + m) - betaln(c.alpha, c.beta))
        return out
    return np.array([p_nm(law, s, m) for m in range(s + 1)])


def visit_probabilities(law, n):
    """``h[m]``: probability that exactly ``m`` of ``n`` balls lie left of some ``P_j``.

    The number of balls left of ``P_j`` is a Markov chain started at ``n``
    that moves from ``s`` to ``s - c`` with probability ``p(s:c)``.
    """
    n = int(n)
    h = np.zeros(n + 1)
    h[n] = 1.0
    for s in range(n, 0, -1):
        if h[s] == 0.0:
            continue
        row = p_row(law, s)
        move = 1.0 - row[0]
        # destination s - c for c = 1..s, i.e. h[s-1], ..., h[0]
        h[:s] += (h[s] / move) * row[1:][::-1]
    return h


def finite_z_pmf(law, n, max_sum):
    """Exact ``P{Z_n^(1) = a, Z_n^(2) = b}`` for ``a >= 1``, ``a + b <= max_sum``.

    Counts are read off the ball-count chain: it must reach ``a + b``, drop
    ``b`` balls into one box (after any number of empty ones) and then put
    all ``a`` remaining balls into the very next box.  ``Z_n^(2) = 0`` also
    covers ``I_n = 1``.
    """
    n = int(n)
    top = min(int(max_sum), n)
    h = visit_probabilities(law, n)
    rows = {s: p_row(law, s) for s in range(1, top + 1)}
    out = {}
    for a in range(1, top + 1):
        pa = rows[a]
        for b in range(0, top - a + 1):
            s = a + b
            ps = rows[s]
            if b > 0:
                prob = h[s] * ps[b] / (1.0 - ps[0]) * pa[a]
            else:
                prob = h[a] * pa[a] * pa[0] / (1.0 - pa[0])
                if a == n:
                    prob += pa[a]
            out[(a, b)] = float(prob)
    return out
