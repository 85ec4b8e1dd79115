import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from sieve_lab import (
    Beta,
    BetaMixture,
    BetaThetaOne,
    HeavyMeander,
    LawSpecError,
    MomentCache,
    Uniform,
    cdf_w,
    joint_moment,
    mu,
    nu,
    parse_law,
    sample_w,
    sample_w0,
)
from sieve_lab.laws import beta_moment_quad, build_w0_grid, w0_cdf


def test_uniform_moments():
    law = Uniform()
    assert joint_moment(law, 0, 0) == 1.0
    assert joint_moment(law, 1, 1) == pytest.approx(1 / 6, abs=1e-15)
    assert mu(law) == pytest.approx(1.0, abs=1e-15)
    assert nu(law) == pytest.approx(1.0, abs=1e-15)


def test_theta_moments(theta2):
    assert joint_moment(theta2, 1, 0) == pytest.approx(2 / 3, abs=1e-15)
    assert mu(theta2) == 0.5


def test_beta_one_one_is_uniform():
    assert Beta(1, 1).mu() == Uniform().mu()
    assert Beta(1, 1) == Uniform()


def test_nu_beta_one_two():
    assert nu(Beta(1, 2)) == pytest.approx(0.5, abs=1e-14)


def test_heavy_nu_is_inf(heavy):
    assert nu(heavy) == math.inf
    assert 0 < mu(heavy) < math.log(1 / (1 - math.exp(-1))) + 1e-12


def test_heavy_mu_by_direct_quadrature(heavy):
    # -log W = -log(1 - e^-Z) with Z Pareto(1) on [1, inf): density z^-2
    direct, _ = integrate.quad(lambda z: -math.log1p(-math.exp(-z)) / z**2, 1, np.inf,
                               epsabs=1e-14, epsrel=1e-13)
    assert heavy.mu() == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("x, value", [(0.3, 0.3), (1.0, 1.0), (0.0, 0.0)])
def test_cdf_uniform(x, value):
    assert cdf_w(Uniform(), x) == pytest.approx(value)


def test_cdf_theta(theta2):
    assert cdf_w(theta2, 0.5) == pytest.approx(0.25)


def test_cdf_heavy(heavy):
    edge = 1 - math.exp(-1)
    assert cdf_w(heavy, edge * 0.999) == 0.0
    # P{W < x} = P{Z < -log(1-x)} = 1 - 1/(-log(1-x)) for tail index 1
    x = 1 - math.exp(-4)
    assert cdf_w(heavy, x) == pytest.approx(0.75)
    assert cdf_w(heavy, 1.0) == 1.0


def test_cdf_rejects_outside():
    with pytest.raises(ValueError):
        cdf_w(Uniform(), 1.5)


@pytest.mark.parametrize("spec", ["uniform", "beta:0.5,0.5", "heavy:1", "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_cdf_monotone(spec):
    law = parse_law(spec)
    xs = np.linspace(0, 1, 501)
    values = [cdf_w(law, float(x)) for x in xs]
    assert values[0] == 0.0 and values[-1] == 1.0
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_sample_support(rng, all_laws):
    for law in all_laws:
        draws = [sample_w(law, rng) for _ in range(2000)]
        assert all(0.0 < w < 1.0 for w in draws), law


def test_heavy_draws_above_edge(rng, heavy):
    draws = np.array([sample_w(heavy, rng) for _ in range(20000)])
    assert draws.min() >= 1 - math.exp(-1)


def test_theta_sample_mean(theta2):
    rng = np.random.default_rng(1)
    draws = np.array([sample_w(theta2, rng) for _ in range(10**6)])
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - 2 / 3) <= 3 * se


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "heavy:1", "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_empirical_moments(spec):
    law = parse_law(spec)
    rng = np.random.default_rng(2)
    draws = np.array([sample_w(law, rng) for _ in range(10**6)])
    for a, b in [(1, 0), (0, 1), (1, 1), (2, 2)]:
        values = draws**a * (1 - draws) ** b
        se = values.std(ddof=1) / math.sqrt(values.size)
        assert abs(values.mean() - law.joint_moment(a, b)) <= 4 * se, (a, b)


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "beta:1.5,2.5", "beta:0.5,0.5",
                                  "heavy:1", "heavy:0.5", "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_moment_identities(spec):
    law = parse_law(spec)
    m = {(a, b): law.joint_moment(a, b) for a in range(32) for b in range(31)}
    for a in range(31):
        for b in range(1, 31):
            assert abs(m[a, b] - (m[a, b - 1] - m[a + 1, b - 1])) <= 1e-10
            assert m[a, b] <= m[a, b - 1] and m[a + 1, b - 1] <= m[a, b - 1]
    for n in range(31):
        total = math.fsum(math.comb(n, j) * m[n - j, j] for j in range(n + 1))
        assert abs(total - 1.0) <= 1e-10
    assert all(0 < v < 1 for k, v in m.items() if k != (0, 0))


@pytest.mark.parametrize("law", [Uniform(), BetaThetaOne(2.0), Beta(1.5, 2.5), Beta(0.5, 0.5)])
def test_quadrature_matches_closed_form(law):
    for a in range(10):
        for b in range(10):
            assert abs(beta_moment_quad(law.alpha, law.beta, a, b) - law.joint_moment(a, b)) <= 1e-8
    assert abs(mu(law, method="quad") - mu(law)) <= 1e-8
    assert abs(nu(law, method="quad") - nu(law)) <= 1e-8


def test_moment_cache_memoizes():
    law = Beta(2.5, 3.5)
    assert (3, 4) not in law.moments
    value = law.joint_moment(3, 4)
    assert (3, 4) in law.moments
    assert law.joint_moment(3, 4) == value


def test_moment_cache_cap():
    cache = MomentCache(max_size=2)
    for i in range(5):
        cache.put((i, 0), float(i))
    assert len(cache) == 2
    assert cache.get((4, 0)) == 4.0
    clone = pickle.loads(pickle.dumps(cache))
    assert clone.get((4, 0)) == 4.0


def test_negative_orders_rejected():
    with pytest.raises(ValueError):
        Uniform().joint_moment(-1, 0)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("uniform", Uniform()),
        ("beta-theta:2.0", BetaThetaOne(2.0)),
        ("beta:1.5,2.5", Beta(1.5, 2.5)),
        ("heavy:1.0", HeavyMeander(1.0)),
        ("mixture:0.3*beta:1,1+0.7*beta:2,1", BetaMixture((0.3, 0.7), (Beta(1, 1), Beta(2, 1)))),
    ],
)
def test_parse_law(text, expected):
    law = parse_law(text)
    assert law == expected
    assert parse_law(law.spec) == law


@pytest.mark.parametrize("text", ["", "gamma:1", "beta:1", "beta:-1,2", "heavy:1.5", "heavy:0",
                                  "mixture:0.5*beta:1,1+0.4*beta:2,1", "mixture:1*heavy:1",
                                  "beta-theta:x"])
def test_parse_law_errors(text):
    with pytest.raises(LawSpecError):
        parse_law(text)


def test_mixture_weights_tolerance():
    BetaMixture((0.3, 0.7 + 5e-13), (Beta(1, 1), Beta(2, 1)))
    with pytest.raises(LawSpecError):
        BetaMixture((0.3, 0.7 + 1e-11), (Beta(1, 1), Beta(2, 1)))


def test_law_pickles_with_cache(theta2):
    theta2.joint_moment(2, 3)
    clone = pickle.loads(pickle.dumps(theta2))
    assert clone == theta2 and (2, 3) in clone.moments


# ---------------------------------------------------------------------------
# W0


def w0_cdf_direct(law, x):
    """P{W0 <= x} from the density P{W < t}/(mu t) in the x variable."""
    value, _ = integrate.quad(lambda t: law.cdf(t) / (law.mu() * t) if t > 0 else 0.0, 0, x,
                              limit=500, epsabs=1e-12, epsrel=1e-10)
    return value


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "beta:0.5,0.5", "beta:1.5,2.5",
                                  "heavy:1", "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_w0_grid_normalized(spec):
    gu, gr = build_w0_grid(parse_law(spec))
    assert gu[0] == 0.0 and abs(gu[-1] - 1.0) <= 1e-8
    assert np.all(np.diff(gu) > 0) and np.all(np.diff(gr) > 0)


@pytest.mark.parametrize("spec", ["beta:0.5,0.5", "heavy:1", "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_w0_cdf_routes_agree(spec):
    law = parse_law(spec)
    for x in (0.05, 0.3, 0.7, 0.9, 0.99):
        assert w0_cdf(law, x) == pytest.approx(w0_cdf_direct(law, x), abs=1e-8)


def test_w0_uniform_mean(uniform):
    rng = np.random.default_rng(3)
    draws = sample_w0(uniform, rng, size=10**6)
    se = draws.std(ddof=1) / 1000
    assert abs(draws.mean() - 0.5) <= 3 * se
    assert draws.min() > 0 and draws.max() <= 1


def test_w0_theta_matches_w(theta2):
    rng = np.random.default_rng(4)
    draws = sample_w0(theta2, rng, size=10**5)
    assert stats.kstest(draws, lambda x: np.clip(x, 0, 1) ** 2).pvalue > 0.01


def test_w0_scalar_and_vector_agree(uniform):
    a = [sample_w0(uniform, np.random.default_rng(5)) for _ in range(1)]
    b = sample_w0(uniform, np.random.default_rng(5), size=1)
    assert a[0] == pytest.approx(b[0], rel=1e-12)


@pytest.mark.parametrize("spec", ["uniform", "beta-theta:2", "beta:0.5,0.5", "heavy:1",
                                  "mixture:0.3*beta:1,1+0.7*beta:2,1"])
def test_w0_chi_square_equiprobable(spec):
    law = parse_law(spec)
    edges = [0.0]
    for k in range(1, 20):
        lo = 1e-300 if not isinstance(law, HeavyMeander) else 1 - math.exp(-1)
        edges.append(optimize.brentq(lambda x: w0_cdf_direct(law, x) - k / 20, lo, 1 - 1e-15,
                                     xtol=1e-14))
    edges.append(1.0 + 1e-12)
    rng = np.random.default_rng(6)
    draws = sample_w0(law, rng, size=10**5)
    counts, _ = np.histogram(draws, bins=edges)
    assert stats.chisquare(counts).pvalue > 0.001


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.integers(0, 12), st.integers(0, 12))
def test_beta_moments_monotone(alpha, beta, a, b):
    law = Beta(alpha, beta)
    m = law.joint_moment(a, b)
    assert 0 < m <= 1
    assert law.joint_moment(a + 1, b) <= m and law.joint_moment(a, b + 1) <= m
