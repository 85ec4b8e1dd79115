import math
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from sieve_lab import (
    BudgetExceeded,
    Pattern,
    TruncationError,
    Uniform,
    enumerate_finite,
    expected_kr,
    finite_marginals,
    finite_z_pmf,
    limit_marginal,
    limit_pmf,
    p_nm,
    pattern_prob,
    parse_law,
)
from sieve_lab.verify import oracle_pattern_prob, weak_compositions


def test_p_nm_examples(uniform, theta2):
    assert p_nm(uniform, 3, 2) == pytest.approx(1 / 4, abs=1e-15)
    assert p_nm(theta2, 1, 1) == pytest.approx(1 - theta2.mean())
    assert p_nm(uniform, 0, 0) == 1.0
    assert math.fsum(p_nm(uniform, 5, m) for m in range(1, 6)) == pytest.approx(5 / 6)


def test_p_nm_rejects_bad_args(uniform):
    with pytest.raises(ValueError):
        p_nm(uniform, 3, 4)


def test_p_nm_large_n(uniform):
    assert p_nm(uniform, 5000, 1234) == pytest.approx(1 / 5001, rel=1e-10)


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "heavy:1", "beta:0.5,0.5"])
def test_p_nm_sum_identity(spec):
    law = parse_law(spec)
    for n in range(1, 31):
        total = math.fsum(p_nm(law, n, m) for m in range(1, n + 1))
        assert abs(total - (1 - law.joint_moment(n, 0))) <= 1e-10


def test_uniform_p_nm_flat(uniform):
    for n in range(31):
        for m in range(n + 1):
            assert abs(p_nm(uniform, n, m) - 1 / (n + 1)) <= 1e-13


def test_pattern_basics():
    p = Pattern.parse("2-1-0")
    assert p.parts == (2, 1, 0) and p.key == "2-1-0" and p.total == 3 and p.depth == 3
    assert p.cumsums == (2, 3, 3)
    assert p.z(1) == 2 and p.z(3) == 0 and p.z(7) == 0
    assert p.occupied == 2 and p.r_count(0) == 1 and p.r_count(1) == 1
    assert Pattern.from_right_to_left((0, 1, 2)) == p
    with pytest.raises(ValueError):
        Pattern((0, 1))
    with pytest.raises(ValueError):
        Pattern((1, -1))


@pytest.mark.parametrize(
    "parts, value",
    [((2, 1), 1 / 12), ((3,), 1 / 4), ((3, 0), 1 / 16), ((1, 2), 1 / 8), ((1, 1, 1), 1 / 24)],
)
def test_pattern_prob_uniform(uniform, parts, value):
    assert pattern_prob(uniform, parts) == pytest.approx(value, abs=1e-15)


def test_pattern_2_1_by_direct_integration(uniform):
    # box next to 1 gets one of three balls, the next box both remaining ones
    value, _ = integrate.nquad(
        lambda w1, w2: 3 * (1 - w1) * w1**2 * (1 - w2) ** 2, [[0, 1], [0, 1]],
        opts={"epsabs": 1e-14},
    )
    assert pattern_prob(uniform, (2, 1)) == pytest.approx(value, abs=1e-12)


def test_pattern_prob_beta_by_direct_integration():
    law = parse_law("beta:1.5,2.5")
    dens = lambda w: w**0.5 * (1 - w) ** 1.5 / math.exp(math.lgamma(1.5) + math.lgamma(2.5) - math.lgamma(4))  # noqa: E731
    # pattern (1, 2): box next to 1 gets 2 of 3 balls, the next box the last ball
    value, _ = integrate.nquad(
        lambda w1, w2: dens(w1) * dens(w2) * 3 * (1 - w1) ** 2 * w1 * (1 - w2),
        [[0, 1], [0, 1]], opts={"epsabs": 1e-13},
    )
    assert pattern_prob(law, (1, 2)) == pytest.approx(value, abs=1e-10)


@pytest.mark.parametrize("theta, spec", [(1, "uniform"), (2, "beta-theta:2"), (3, "beta-theta:3")])
def test_pattern_prob_matches_oracle(theta, spec):
    law = parse_law(spec)
    for n in range(1, 5):
        for parts in weak_compositions(n, 10):
            assert abs(pattern_prob(law, parts) - float(oracle_pattern_prob(theta, parts))) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=8), st.integers(1, 4),
       st.sampled_from([1, 2, 5]))
def test_pattern_prob_oracle_random(rest, first, theta):
    parts = (first,) + tuple(rest)
    law = parse_law("uniform" if theta == 1 else f"beta-theta:{theta}")
    exact = oracle_pattern_prob(theta, parts)
    assert pattern_prob(law, parts) == pytest.approx(float(exact), rel=1e-10, abs=1e-300)


def test_oracle_sums_to_one():
    for n in range(1, 4):
        total = sum(oracle_pattern_prob(1, p) for p in weak_compositions(n, 10))
        assert 1 - total < Fraction(n, 2**10) + Fraction(1, 10**12)


def test_limit_pmf_examples(uniform):
    assert limit_pmf(uniform, (1, 0)) == pytest.approx(1 / 4)
    assert limit_pmf(uniform, (1, 1)) == pytest.approx(1 / 12)
    for k in range(1, 51):
        assert limit_pmf(uniform, (k,)) == pytest.approx(1 / (k * (k + 1)), abs=1e-12)


def test_limit_marginal_consistency_theta(theta2):
    # for theta = 2, p(S:m) = 2(n1+1)/((S+1)(S+2)), so the terms decay like m^-3
    # and the gap like C^-2
    for n1 in range(1, 4):
        gaps = []
        for cap in (500, 1000, 2000):
            partial = math.fsum(limit_pmf(theta2, (n1, m)) for m in range(cap))
            gaps.append(limit_pmf(theta2, (n1,)) - partial)
        assert 0 < gaps[2] < 2.0 / 2000**2
        assert gaps[1] / gaps[2] == pytest.approx(4, rel=0.02)


def test_limit_marginal_uniform_tail(uniform):
    # summing n2 up to C leaves exactly 1/((n1+1)(n1+C+1))
    for n1 in range(1, 6):
        partial = math.fsum(limit_pmf(uniform, (n1, m)) for m in range(201))
        gap = limit_pmf(uniform, (n1,)) - partial
        assert gap == pytest.approx(1 / ((n1 + 1) * (n1 + 201)), rel=1e-9)


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "heavy:1", "beta:0.5,0.5",
                                  "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_limit_first_coordinate_normalized(spec):
    # sum_k E[(1-W)^k]/(mu k) = E[-log W]/mu = 1; the reported residual is the
    # tail beyond the cap, which for Beta(a, b) behaves like
    # Gamma(a+b)/Gamma(b) C^-a / (a mu), and is below e^-C for the heavy law
    law = parse_law(spec)
    cap = 4000
    marginal = limit_marginal(law, 1, cap)
    if spec.startswith("heavy"):
        assert marginal.residual < 1e-12
        return
    comps = [(1.0, law)] if not hasattr(law, "weights") else zip(law.weights, law.components)
    tail = sum(
        w * math.exp(math.lgamma(c.alpha + c.beta) - math.lgamma(c.beta)) * cap**-c.alpha / c.alpha
        for w, c in comps
    ) / law.mu()
    assert marginal.residual == pytest.approx(tail, rel=0.01)


def test_limit_marginal_uniform(uniform):
    marginal = limit_marginal(uniform, 1, 200)
    assert marginal.residual == pytest.approx(1 / 201, abs=1e-12)
    for k in range(1, 10):
        assert marginal.pmf[k] == pytest.approx(1 / (k * (k + 1)))


def test_limit_marginal_second_coordinate(uniform):
    marginal = limit_marginal(uniform, 2, 30)
    direct = math.fsum(limit_pmf(uniform, (n1, 0)) for n1 in range(1, 401))
    assert marginal.pmf[0] == pytest.approx(direct, abs=1e-12)
    assert marginal.pmf[3] == pytest.approx(
        math.fsum(limit_pmf(uniform, (n1, 3)) for n1 in range(1, 401)), abs=1e-12)
    # Z^(2) has a 1/m^2 tail, so about 3/cap of the mass lies beyond the cap
    assert 0 < marginal.residual < 0.15
    assert limit_marginal(uniform, 2, 60).residual < marginal.residual


def test_limit_marginal_tolerance(uniform):
    with pytest.raises(TruncationError) as info:
        limit_marginal(uniform, 1, 50, tol=1e-3)
    assert info.value.residual == pytest.approx(1 / 51)


def test_expected_kr(uniform, heavy, theta2):
    assert expected_kr(uniform, 1) == 1.0
    assert expected_kr(uniform, 0) == pytest.approx(1.0)
    assert expected_kr(uniform, 2) == 0.5
    assert expected_kr(theta2, 1) == 2.0
    assert expected_kr(heavy, 0) == math.inf
    with pytest.raises(ValueError):
        expected_kr(uniform, -1)


def test_enumerate_small(uniform):
    pmf = enumerate_finite(uniform, 3, 12)
    for parts, value in [((3,), 1 / 4), ((1, 2), 1 / 8), ((2, 1), 1 / 12), ((1, 1, 1), 1 / 24),
                         ((3, 0), 1 / 16)]:
        assert pmf[parts] == pytest.approx(value, abs=1e-15)
    assert pmf.covered_mass >= 1 - 3 * 2**-12
    assert pmf.by_key()["2-1"] == pytest.approx(1 / 12)


def test_enumerate_depth_one(uniform):
    pmf = enumerate_finite(uniform, 3, 1)
    assert len(pmf) == 1
    assert pmf.covered_mass == pytest.approx(uniform.joint_moment(0, 3))


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "heavy:1"])
def test_enumerate_single_ball(spec):
    law = parse_law(spec)
    pmf = enumerate_finite(law, 1, 30)
    for k in range(1, 31):
        expected = (1 - law.mean()) * law.mean() ** (k - 1)
        assert pmf[(1,) + (0,) * (k - 1)] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2"])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_enumerate_normalization(spec, n):
    law = parse_law(spec)
    pmf = enumerate_finite(law, n, 40)
    assert abs(1 - pmf.covered_mass) <= n * law.mean() ** 40 + 1e-10
    assert pmf.covered_mass + pmf.tail_bound >= 1 - 1e-12
    assert pmf.covered_mass <= 1 + 1e-12
    assert all(v > 0 for v in pmf.entries.values())


def test_enumerate_heavy_tail_bound(heavy):
    pmf = enumerate_finite(heavy, 3, 30)
    assert pmf.covered_mass + pmf.tail_bound >= 1 - 1e-12
    assert pmf.tail_bound > 1e-3


def test_enumerate_budget(uniform):
    with pytest.raises(BudgetExceeded) as info:
        enumerate_finite(uniform, 6, 40, budget=1000)
    assert info.value.count > 1000


def test_enumerate_serialization(uniform):
    pmf = enumerate_finite(uniform, 2, 5)
    data = pmf.to_dict()
    assert data["n"] == 2 and data["patterns"][0]["pattern"] == [2]
    rows = pmf.csv_rows()
    assert rows[0] == "pattern,probability" and rows[1].startswith("2,")


def test_finite_marginals(uniform):
    m = finite_marginals(uniform, 1, 40)
    for k in range(1, 20):
        assert m.depth[k] == pytest.approx(0.5**k)
    m3 = finite_marginals(uniform, 3, 40)
    conservation = math.fsum(r * m3.r_means[r] for r in range(1, 4))
    assert conservation == pytest.approx(3.0, abs=1e-9)
    pmf = enumerate_finite(uniform, 3, 40)
    one_box = math.fsum(v for p, v in pmf.entries.items() if p.occupied == 1)
    assert m3.occupied[1] == pytest.approx(one_box, abs=1e-15)
    # K_{n,r} means of the uniform sieve are 1/r for r <= n, and 1 for r = 0
    assert m3.r_means[1] == pytest.approx(1.0, abs=1e-9)
    assert m3.r_means[3] == pytest.approx(1 / 3, abs=1e-9)
    assert m3.r_means[0] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "heavy:1", "beta:0.5,0.5"])
def test_finite_z_pmf_matches_enumeration(spec):
    law = parse_law(spec)
    for n in (2, 3, 4):
        pmf = enumerate_finite(law, n, 40)
        agg = defaultdict(float)
        for p, v in pmf.entries.items():
            agg[(p.z(1), p.z(2))] += v
        exact = finite_z_pmf(law, n, n)
        for key, value in exact.items():
            assert abs(agg[key] - value) <= pmf.tail_bound + 1e-12


def test_finite_z_pmf_uniform_equals_limit(uniform):
    exact = finite_z_pmf(uniform, 500, 6)
    for key, value in exact.items():
        assert value == pytest.approx(limit_pmf(uniform, key), rel=1e-9)


def test_finite_z_pmf_approaches_limit():
    law = parse_law("beta:1.5,2.5")
    gaps = []
    for n in (20, 200, 2000):
        exact = finite_z_pmf(law, n, 4)
        gaps.append(max(abs(v - limit_pmf(law, k)) for k, v in exact.items()))
    assert gaps[0] > gaps[1] > gaps[2]
