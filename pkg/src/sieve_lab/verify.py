"""Acceptance checks tying the exact formulas to the simulators.

Each criterion returns a :class:`CriterionResult` made of named numeric
checks.  The ``basic`` suite holds the criteria that finish in well under a
minute; ``full`` adds the large finite-n runs and the reproducibility check.
Payloads contain no timings, so two runs with the same seed serialize to
identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import stats as sps

from . import streams
from .exact import (
    Pattern,
    enumerate_finite,
    expected_kr,
    finite_z_pmf,
    limit_pmf,
    pattern_prob,
)
from .laws import (
    Beta,
    BetaMixture,
    BetaThetaOne,
    HeavyMeander,
    Uniform,
    beta_log_moment_quad,
    beta_moment_quad,
)
from .limit import build_window, simulate_limit_Kr, simulate_limit_Z
from .sieve import EmpiricalPmf, replicate
from .stats import chi_square_gof, convergence_table, tv_components

P_MIN = 1e-3


@dataclass
class Check:
    name: str
    value: object
    bound: object
    passed: bool

    def to_dict(self):
        return {"name": self.name, "value": self.value, "bound": self.bound, "passed": self.passed}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def check(self, name, value, bound, passed):
        self.checks.append(Check(name, value, bound, bool(passed)))

    def summary(self):
        failed = [c.name for c in self.checks if not c.passed]
        status = "PASS" if self.passed else "FAIL"
        tail = "" if not failed else " (failed: " + ", ".join(failed) + ")"
        return f"[{status}] criterion {self.number}: {self.title}{tail}"

    def to_dict(self):
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "reports": self.reports,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class Context:
    seed: int
    workers: int = 1


# ---------------------------------------------------------------------------
# independent oracle for pattern probabilities


def theta_moment(theta, a, b):
    """``E[W^a (1-W)^b]`` for density ``theta x^(theta-1)``, integer theta, exact."""
    num = theta * math.factorial(theta + a - 1) * math.factorial(b)
    return Fraction(num, math.factorial(theta + a + b))


def oracle_pattern_prob(theta, parts):
    """Pattern probability by conditioning box by box from 1 leftwards.

    Box ``j`` (counted from 1) receives ``c_j`` of the ``M_{j-1}`` balls left
    of ``P_{j-1}``; its factor is ``C(M_{j-1}, c_j) E[W^(M_j) (1-W)^(c_j)]``.
    """
    remaining = sum(parts)
    prob = Fraction(1)
    for c in reversed(parts):
        after = remaining - c
        prob *= math.comb(remaining, c) * theta_moment(theta, after, c)
        remaining = after
    return prob


def weak_compositions(n, k_max):
    """All ``(n_1, ..., n_k)``, ``n_1 > 0``, summing to ``n`` with ``k <= k_max``."""
    out = []
    for k in range(1, k_max + 1):
        for first in range(1, n + 1):
            rest = n - first
            for tail in _bounded(rest, k - 1):
                out.append((first,) + tail)
    return out


def _bounded(total, length):
    if length == 0:
        if total == 0:
            yield ()
        return
    for head in range(total + 1):
        for tail in _bounded(total - head, length - 1):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# criteria


def c1_pattern_oracle(ctx):
    res = CriterionResult(1, "pattern formula vs box-by-box integration oracle")
    for theta, law in ((1, Uniform()), (2, BetaThetaOne(2.0))):
        worst = 0.0
        count = 0
        for n in range(1, 5):
            for parts in weak_compositions(n, 10):
                exact = float(oracle_pattern_prob(theta, parts))
                worst = max(worst, abs(pattern_prob(law, Pattern(parts)) - exact))
                count += 1
        res.check(f"{law.spec}: max error over {count} patterns", worst, 1e-9, worst <= 1e-9)
    return res


def c2_normalization(ctx):
    res = CriterionResult(2, "normalization of the finite-n pattern law")
    law = Uniform()
    pmf = enumerate_finite(law, 3, 40)
    err = abs(pmf.covered_mass - 1.0)
    bound = 3 * 2.0**-40 + 1e-10
    res.check("|covered_mass - 1|, n=3, k_max=40", err, bound, err <= bound)
    for parts, value in (((3,), 1 / 4), ((1, 2), 1 / 8), ((2, 1), 1 / 12), ((3, 0), 1 / 16)):
        got = pmf.get(parts)
        res.check(f"pattern {Pattern(parts).key}", got, value, abs(got - value) <= 1e-12)
    res.notes["tail_bound"] = pmf.tail_bound
    return res


def c3_closed_marginal(ctx):
    res = CriterionResult(3, "limit law of Z^(1) for Uniform is 1/(k(k+1))")
    law = Uniform()
    worst = max(abs(limit_pmf(law, (k,)) - 1.0 / (k * (k + 1))) for k in range(1, 51))
    res.check("max error, k <= 50", worst, 1e-12, worst <= 1e-12)
    total = math.fsum(limit_pmf(law, (k,)) for k in range(1, 201))
    gap = abs(1.0 - total)
    res.check("|1 - sum_{k<=200}|", gap, 1 / 201 + 1e-10, gap <= 1 / 201 + 1e-10)
    return res


def c4_marginal_consistency(ctx):
    res = CriterionResult(4, "summing out the last coordinate of the limit law")
    for law in (Uniform(), BetaThetaOne(2.0)):
        worst = 0.0
        for n1 in range(1, 6):
            partial = math.fsum(limit_pmf(law, (n1, n2)) for n2 in range(201))
            worst = max(worst, abs(partial - limit_pmf(law, (n1,))))
        res.check(f"{law.spec}: max gap, n1 <= 5", worst, 1e-6, worst < 1e-6)
    # for Uniform the omitted terms telescope: sum_{n2 > C} = 1/((n1+1)(n1+C+1))
    res.notes["uniform_analytic_tail_n1=1"] = 1.0 / (2 * 202)
    return res


def pair_support(max_sum=6):
    return [(a, b) for a in range(1, max_sum + 1) for b in range(0, max_sum - a + 1)]


def _limit_pair_table(law, max_sum=6):
    return {k: limit_pmf(law, k) for k in pair_support(max_sum)}


def c5_sieve_convergence(ctx, reps=1_000_000, ns=(100, 1_000, 10_000)):
    res = CriterionResult(5, "finite-n (Z^(1), Z^(2)) approaches the limit law")
    law = Uniform()
    expected = _limit_pair_table(law)
    support = list(expected)
    tvs = []
    for n in ns:
        run = replicate(law, n, reps, seed=ctx.seed, stat="z", depth=2, workers=ctx.workers)
        report = chi_square_gof(run.pmf, expected, support=support)
        res.reports[f"n={n}"] = report.to_dict()
        tvs.append(report.tv_distance)
        exact = finite_z_pmf(law, n, 6)
        bias = sum(tv_components(exact, expected, support))
        res.notes[f"exact_tv_finite_vs_limit_n={n}"] = bias
    last = res.reports[f"n={ns[-1]}"]
    p = last["chi_square"]["p_value"]
    res.check(f"chi-square p at n={ns[-1]}", p, P_MIN, p > P_MIN)
    res.check(f"TV at n={ns[-1]}", tvs[-1], 0.01, tvs[-1] < 0.01)
    mono = all(b <= a for a, b in zip(tvs, tvs[1:]))
    res.check("TV nonincreasing in n", tvs, "nonincreasing", mono)
    return res


def c6_limit_sampler(ctx, reps=1_000_000):
    res = CriterionResult(6, "limit-model sampler vs limit law")
    law = Uniform()
    z = simulate_limit_Z(law, 2, reps, seed=ctx.seed, workers=ctx.workers)
    pairs, counts = np.unique(z, axis=0, return_counts=True)
    observed = EmpiricalPmf({(int(a), int(b)): int(c) for (a, b), c in zip(pairs, counts)}, reps)
    expected = _limit_pair_table(law)
    report = chi_square_gof(observed, expected, support=list(expected))
    res.reports["uniform"] = report.to_dict()
    res.check("chi-square p", report.p_value, P_MIN, report.p_value > P_MIN)
    return res


def c7_limit_expectations(ctx, reps=100_000):
    res = CriterionResult(7, "limit small-part counts match 1/(mu r) and nu/mu")
    law = Uniform()
    summary = simulate_limit_Kr(law, 2, reps, seed=ctx.seed, workers=ctx.workers)
    res.reports["kr"] = summary.to_dict()
    for r in (1, 2, 0):
        target = expected_kr(law, r)
        mean, se = summary.means[r], summary.ses[r]
        res.check(f"K_{r}* mean within 3 SE of {target:g}", mean, [target, 3 * se],
                  abs(mean - target) <= 3 * se)
    return res


def c8_expectation_convergence(ctx, reps=10_000, ns=(1_000, 10_000, 100_000)):
    res = CriterionResult(8, "finite-n means of K_{n,r} approach the limit means")
    law = Uniform()
    runs = {n: replicate(law, n, reps, seed=ctx.seed, stat="kr", r_max=2, workers=ctx.workers)
            for n in ns}
    big = runs[ns[-1]]
    for r in (1, 2, 0):
        target = expected_kr(law, r)
        mean = big.kr_means[r]
        rel = abs(mean - target) / target
        res.check(f"K_{{n,{r}}} within 10% of {target:g} at n={ns[-1]}", mean, [target, 0.1],
                  rel <= 0.1)
    for r in (1, 2, 0):
        table = convergence_table(
            [(n, runs[n].kr_means[r], runs[n].kr_se[r]) for n in ns], expected_kr(law, r)
        )
        res.reports[f"convergence_r={r}"] = table.to_dict()
        res.check(f"K_{{n,{r}}} gaps monotone", [row.gap for row in table.rows], "nonincreasing",
                  table.monotone)
    return res


def c9_dichotomy(ctx, reps=10_000, ns=(100, 1_000, 10_000, 100_000)):
    res = CriterionResult(9, "nu = inf makes K_{n,0} grow; nu < inf keeps it bounded")
    heavy = HeavyMeander(1.0)
    res.check("HeavyMeander(1).nu() is inf", heavy.nu(), "inf", math.isinf(heavy.nu()))
    rows = []
    for n in ns:
        run = replicate(heavy, n, reps, seed=ctx.seed, stat="kr", r_max=1, workers=ctx.workers)
        rows.append((n, run.kr_means[0], run.kr_se[0]))
    table = convergence_table(rows, math.inf)
    res.reports["heavy"] = table.to_dict()
    res.check("heavy: mean K_{n,0} strictly increasing", [r[1] for r in rows], "increasing",
              table.monotone)
    control = Uniform()
    target = expected_kr(control, 0)
    crows = []
    for n in ns:
        run = replicate(control, n, reps, seed=ctx.seed, stat="kr", r_max=1, workers=ctx.workers)
        crows.append((n, run.kr_means[0], run.kr_se[0]))
    res.reports["control_uniform"] = convergence_table(crows, target).to_dict()
    worst = max(abs(m - target) / target for _, m, _ in crows)
    res.check("control: every mean K_{n,0} within 10% of nu/mu", worst, 0.1, worst <= 0.1)
    return res


def c10_renewal(ctx, reps=100_000):
    res = CriterionResult(10, "renewal construction: intensity and largest point W0")
    for law in (Uniform(), BetaThetaOne(2.0)):
        mu = law.mu()
        for a, b in ((0.1, 1.0), (1.0, 10.0)):
            rng = streams.block_generator(ctx.seed, f"intensity-{law.spec}-{a}-{b}", 0)
            counts = np.empty(reps)
            for i in range(reps):
                counts[i] = len(build_window(law, rng, a, b).points)
            mean = counts.mean()
            se = counts.std(ddof=1) / math.sqrt(reps)
            target = math.log(b / a) / mu
            res.check(f"{law.spec}: mean count in [{a}, {b}]", mean, [target, 3 * se],
                      abs(mean - target) <= 3 * se)
        rng = streams.block_generator(ctx.seed, f"w0-{law.spec}", 0)
        tops = np.empty(reps)
        for i in range(reps):
            tops[i] = build_window(law, rng, 0.5, 1.0).predecessor(1.0)
        # W0 has density P{W < x}/(mu x); for Beta(theta, 1) that is W's own law
        theta = law.alpha
        ks = sps.kstest(tops, lambda x: np.clip(x, 0.0, 1.0) ** theta)
        res.check(f"{law.spec}: KS p of largest point below 1", float(ks.pvalue), P_MIN,
                  ks.pvalue > P_MIN)
    return res


MOMENT_LAWS = (
    Uniform(),
    BetaThetaOne(2.0),
    Beta(1.5, 2.5),
    Beta(0.5, 0.5),
    BetaMixture((0.3, 0.7), (Beta(1.0, 1.0), Beta(2.0, 1.0))),
    HeavyMeander(1.0),
    HeavyMeander(0.5),
)


def c11_moment_identities(ctx):
    res = CriterionResult(11, "moment recursion, binomial completeness, quadrature agreement")
    for law in MOMENT_LAWS:
        m = {(a, b): law.joint_moment(a, b) for a in range(32) for b in range(31)}
        rec = max(
            abs(m[a, b] - (m[a, b - 1] - m[a + 1, b - 1]))
            for a in range(31)
            for b in range(1, 31)
        )
        res.check(f"{law.spec}: recursion", rec, 1e-10, rec <= 1e-10)
        comp = max(
            abs(math.fsum(math.comb(n, j) * m[n - j, j] for j in range(n + 1)) - 1.0)
            for n in range(31)
        )
        res.check(f"{law.spec}: binomial completeness", comp, 1e-10, comp <= 1e-10)
    for law in MOMENT_LAWS:
        comps = _beta_components(law)
        if comps is None:
            continue
        worst = 0.0
        for a, b in product(range(10), range(10)):
            quad = math.fsum(w * beta_moment_quad(c.alpha, c.beta, a, b) for w, c in comps)
            worst = max(worst, abs(quad - law.joint_moment(a, b)))
        res.check(f"{law.spec}: quadrature vs closed form, 10x10", worst, 1e-8, worst <= 1e-8)
        for which, closed in (("mu", law.mu()), ("nu", law.nu())):
            quad = math.fsum(w * beta_log_moment_quad(c.alpha, c.beta, which) for w, c in comps)
            err = abs(quad - closed)
            res.check(f"{law.spec}: {which} quadrature vs digamma", err, 1e-8, err <= 1e-8)
    return res


def _beta_components(law):
    if isinstance(law, Beta):
        return [(1.0, law)]
    if isinstance(law, BetaMixture):
        return list(zip(law.weights, law.components))
    return None


def c12_reproducibility(ctx):
    from .output import dumps

    res = CriterionResult(12, "basic suite is byte-reproducible and worker-count invariant")
    first = dumps(run_suite("basic", Context(ctx.seed, 1)).payload())
    second = dumps(run_suite("basic", Context(ctx.seed, 1)).payload())
    res.check("two runs, same seed: identical bytes", len(first), len(second), first == second)
    other = dumps(run_suite("basic", Context(ctx.seed, 3)).payload())
    res.check("workers=3 vs workers=1: identical bytes", len(other), len(first), other == first)
    return res


CRITERIA = {
    1: c1_pattern_oracle,
    2: c2_normalization,
    3: c3_closed_marginal,
    4: c4_marginal_consistency,
    5: c5_sieve_convergence,
    6: c6_limit_sampler,
    7: c7_limit_expectations,
    8: c8_expectation_convergence,
    9: c9_dichotomy,
    10: c10_renewal,
    11: c11_moment_identities,
    12: c12_reproducibility,
}

SUITES = {
    "basic": (1, 2, 3, 4, 6, 7, 10, 11),
    "full": tuple(range(1, 13)),
}


# ---------------------------------------------------------------------------
# checks for an arbitrary law


def law_checks(law, ctx, reps=200_000):
    """Law-generic consistency checks used by ``verify --law``."""
    res = CriterionResult(0, f"law checks for {law.spec}")
    m = {(a, b): law.joint_moment(a, b) for a in range(22) for b in range(21)}
    rec = max(abs(m[a, b] - (m[a, b - 1] - m[a + 1, b - 1])) for a in range(21) for b in range(1, 21))
    res.check("moment recursion, a,b <= 20", rec, 1e-10, rec <= 1e-10)
    pmf = enumerate_finite(law, 3, 40)
    gap = 1.0 - pmf.covered_mass
    res.check("n=3 covered mass within tail bound", gap, pmf.tail_bound,
              -1e-12 <= gap <= pmf.tail_bound + 1e-12)
    expected = _limit_pair_table(law)
    z = simulate_limit_Z(law, 2, reps, seed=ctx.seed, workers=ctx.workers)
    pairs, counts = np.unique(z, axis=0, return_counts=True)
    observed = EmpiricalPmf({(int(a), int(b)): int(c) for (a, b), c in zip(pairs, counts)}, reps)
    report = chi_square_gof(observed, expected, support=list(expected))
    res.reports["limit_Z"] = report.to_dict()
    res.check("limit sampler chi-square p", report.p_value, P_MIN, report.p_value > P_MIN)
    run = replicate(law, 3, reps, seed=ctx.seed, stat="pattern", workers=ctx.workers)
    exact = dict(pmf.entries)
    exact = {p.parts: v for p, v in exact.items()}
    report = chi_square_gof(run.pmf, exact, tail_bound=pmf.tail_bound)
    res.reports["sieve_n=3"] = report.to_dict()
    res.check("n=3 sieve chi-square p", report.p_value, P_MIN, report.p_value > P_MIN)
    return res


@dataclass
class SuiteResult:
    suite: str
    seed: int
    workers: int
    results: list
    law: str = None

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def payload(self):
        """Result data without anything that depends on the worker count."""
        return {
            "suite": self.suite,
            "seed": self.seed,
            "law": self.law,
            "passed": self.passed,
            "results": [r.to_dict() for r in self.results],
        }


def run_criterion(number, seed=None, workers=1):
    seed = streams.default_seed() if seed is None else seed
    return CRITERIA[number](Context(seed, workers))


def run_suite(suite="basic", ctx=None, law=None, progress=None):
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    ctx = ctx or Context(streams.default_seed(), 1)
    results = []
    for number in SUITES[suite]:
        result = CRITERIA[number](ctx)
        if progress:
            progress(result)
        results.append(result)
    if law is not None:
        result = law_checks(law, ctx)
        if progress:
            progress(result)
        results.append(result)
    return SuiteResult(suite, ctx.seed, ctx.workers, results, law.spec if law else None)
