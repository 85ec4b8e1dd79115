"""Laws of the stick-breaking factor W.

Each law knows how to sample W, evaluate the joint moments
``E[W^a (1-W)^b]``, the log-moments ``mu = E[-log W]`` and
``nu = E[-log(1-W)]``, the CDF ``P{W < x}`` and the law of ``W0``, the
largest point below 1 of the self-similar limit set.

Laws are parsed from short text forms used by the CLI::

    uniform
    beta-theta:2.0
    beta:1.5,2.5
    mixture:0.3*beta:1,1+0.7*beta:2,1
    heavy:1.0
"""

from __future__ import annotations

import math
import threading
import warnings

import numpy as np
from scipy import integrate
from scipy.special import betainc, betaincc, betaln, digamma, logsumexp

from . import _fallback
from ._params import BETA_MIXTURE, HEAVY, KernelLaw
from .errors import LawSpecError, NumericalFailure

QUAD_LIMIT = 10_000
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
MOMENT_ABS_TOL = 1e-10
W0_GRID_TOL = 1e-8
LN2 = math.log(2.0)
_BELOW_ONE = math.nextafter(1.0, 0.0)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def quad(f, lo, hi, points=None, tol=MOMENT_ABS_TOL, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL):
    """Adaptive quadrature of ``f`` over ``[lo, hi]``.

    Raises NumericalFailure when the error estimate exceeds ``tol`` after
    the subdivision budget is spent.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, *rest = integrate.quad(
            f,
            lo,
            hi,
            points=points,
            limit=QUAD_LIMIT,
            epsabs=epsabs,
            epsrel=epsrel,
            full_output=1,
        )
    if err > tol:
        raise NumericalFailure(
            f"quadrature on [{lo}, {hi}] did not converge (error estimate {err:.3g})",
            estimate=err,
        )
    return value


class MomentCache:
    """Memo table for ``m(a, b) = E[W^a (1-W)^b]``, safe for concurrent use."""

    def __init__(self, max_size=None):
        self.max_size = max_size
        self._table = {}
        self._lock = threading.Lock()

    def get(self, key):
        return self._table.get(key)

    def put(self, key, value):
        with self._lock:
            if self.max_size is not None and len(self._table) >= self.max_size:
                self._table.pop(next(iter(self._table)))
            self._table[key] = value

    def __len__(self):
        return len(self._table)

    def __contains__(self, key):
        return key in self._table

    def __getstate__(self):
        return {"max_size": self.max_size, "_table": dict(self._table)}

    def __setstate__(self, state):
        self.max_size = state["max_size"]
        self._table = state["_table"]
        self._lock = threading.Lock()


class StickLaw:
    """Base class for laws of W on the open unit interval."""

    def __init__(self):
        self.moments = MomentCache()
        self._w0_grid = None
        self._kernel = None
        self._kernel_plain = None
        self._grid_lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        del state["_grid_lock"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._grid_lock = threading.Lock()

    # subclasses provide: _key, spec, _moment, _mu, _nu, cdf, log_survival,
    # _log_support_end, _kernel_arrays

    def __eq__(self, other):
        return isinstance(other, StickLaw) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"

    def joint_moment(self, a, b):
        """``E[W^a (1-W)^b]`` for nonnegative integers ``a`` and ``b``."""
        a = int(a)
        b = int(b)
        if a < 0 or b < 0:
            raise ValueError(f"moment orders must be nonnegative, got ({a}, {b})")
        if a == 0 and b == 0:
            return 1.0
        key = (a, b)
        value = self.moments.get(key)
        if value is None:
            value = self._moment(a, b)
            self.moments.put(key, value)
        return value

    def log_joint_moment(self, a, b):
        """``log E[W^a (1-W)^b]``, finite even where the moment underflows."""
        m = self.joint_moment(a, b)
        return math.log(m) if m > 0 else -math.inf

    def mu(self):
        return self._mu()

    def nu(self):
        return self._nu()

    def mean(self):
        return self.joint_moment(1, 0)

    def sample(self, rng):
        w = _fallback.draw_w(self.kernel_law(grid=False), rng)[0]
        # heavy draws can round to 1.0; the kernels keep 1 - W separately
        return min(w, _BELOW_ONE)

    def w0_grid(self):
        """Tabulated CDF of ``-log W0`` as ``(cdf_values, r_nodes)``."""
        with self._grid_lock:
            if self._w0_grid is None:
                self._w0_grid = build_w0_grid(self)
        return self._w0_grid

    def kernel_law(self, grid=True):
        """Flat parameters for the simulation kernels."""
        if grid:
            if self._kernel is None:
                gu, gr = self.w0_grid()
                self._kernel = self._kernel_arrays()._replace(grid_u=gu, grid_r=gr)
            return self._kernel
        if self._kernel is not None:
            return self._kernel
        if self._kernel_plain is None:
            self._kernel_plain = self._kernel_arrays()
        return self._kernel_plain


class Beta(StickLaw):
    """Beta(alpha, beta) law of W."""

    def __init__(self, alpha, beta):
        alpha = float(alpha)
        beta = float(beta)
        if not (alpha > 0 and beta > 0 and math.isfinite(alpha) and math.isfinite(beta)):
            raise LawSpecError(f"beta parameters must be positive, got ({alpha}, {beta})")
        self.alpha = alpha
        self.beta = beta
        super().__init__()

    def _key(self):
        return ("beta", self.alpha, self.beta)

    @property
    def spec(self):
        return f"beta:{_fmt(self.alpha)},{_fmt(self.beta)}"

    def _moment(self, a, b):
        return math.exp(self.log_joint_moment(a, b))

    def log_joint_moment(self, a, b):
        return float(betaln(self.alpha + a, self.beta + b) - betaln(self.alpha, self.beta))

    def _mu(self):
        return float(digamma(self.alpha + self.beta) - digamma(self.alpha))

    def _nu(self):
        return float(digamma(self.alpha + self.beta) - digamma(self.beta))

    def cdf(self, x):
        return float(betainc(self.alpha, self.beta, x))

    def log_survival(self, r):
        # P{-log W > r} = I_{e^-r}(alpha, beta), evaluated through the complement
        r = np.asarray(r, dtype=float)
        near = betaincc(self.beta, self.alpha, -np.expm1(-r))
        far = betainc(self.alpha, self.beta, np.exp(-r))
        return np.where(r > LN2, far, near)

    def _log_support_end(self):
        r = 1.0
        while self.log_survival(r) > 1e-15:
            r *= 2.0
        return r

    def _kernel_arrays(self):
        return KernelLaw(
            BETA_MIXTURE,
            np.array([1.0]),
            np.array([self.alpha]),
            np.array([self.beta]),
            0.0,
            None,
            None,
        )


class Uniform(Beta):
    """W uniform on (0, 1); identical to Beta(1, 1)."""

    def __init__(self):
        super().__init__(1.0, 1.0)

    @property
    def spec(self):
        return "uniform"


class BetaThetaOne(Beta):
    """Density ``theta x^(theta-1)`` on (0, 1), the GEM(theta) stick."""

    def __init__(self, theta):
        super().__init__(theta, 1.0)
        self.theta = self.alpha

    @property
    def spec(self):
        return f"beta-theta:{_fmt(self.theta)}"

    def _mu(self):
        return 1.0 / self.theta


class BetaMixture(StickLaw):
    """Finite mixture of Beta laws."""

    def __init__(self, weights, components):
        weights = [float(w) for w in weights]
        components = [c if isinstance(c, Beta) else Beta(*c) for c in components]
        if len(weights) != len(components) or not weights:
            raise LawSpecError("mixture needs one weight per component")
        if any(not (w > 0) for w in weights):
            raise LawSpecError(f"mixture weights must be positive, got {weights}")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise LawSpecError(f"mixture weights sum to {math.fsum(weights)!r}, not 1")
        self.weights = tuple(weights)
        self.components = tuple(components)
        super().__init__()

    def _key(self):
        return ("mixture", self.weights, tuple(c._key() for c in self.components))

    @property
    def spec(self):
        parts = [f"{_fmt(w)}*{c.spec}" for w, c in zip(self.weights, self.components)]
        return "mixture:" + "+".join(parts)

    def _moment(self, a, b):
        return math.fsum(w * c.joint_moment(a, b) for w, c in zip(self.weights, self.components))

    def log_joint_moment(self, a, b):
        logs = [math.log(w) + c.log_joint_moment(a, b) for w, c in zip(self.weights, self.components)]
        return float(logsumexp(logs))

    def _mu(self):
        return math.fsum(w * c.mu() for w, c in zip(self.weights, self.components))

    def _nu(self):
        return math.fsum(w * c.nu() for w, c in zip(self.weights, self.components))

    def cdf(self, x):
        return math.fsum(w * c.cdf(x) for w, c in zip(self.weights, self.components))

    def log_survival(self, r):
        return sum(w * c.log_survival(r) for w, c in zip(self.weights, self.components))

    def _log_support_end(self):
        return max(c._log_support_end() for c in self.components)

    def _kernel_arrays(self):
        cumw = np.cumsum(self.weights)
        cumw[-1] = 1.0
        return KernelLaw(
            BETA_MIXTURE,
            cumw,
            np.array([c.alpha for c in self.components]),
            np.array([c.beta for c in self.components]),
            0.0,
            None,
            None,
        )


class HeavyMeander(StickLaw):
    """``W = 1 - exp(-Z)`` with Z Pareto of tail index ``a`` on ``[1, inf)``.

    W stays above ``1 - 1/e`` so ``mu`` is finite, while
    ``nu = E[-log(1-W)] = E[Z]`` is infinite for ``a <= 1``.
    """

    def __init__(self, tail_index=1.0):
        tail_index = float(tail_index)
        if not (0.0 < tail_index <= 1.0):
            raise LawSpecError(f"heavy tail index must lie in (0, 1], got {tail_index}")
        self.tail_index = tail_index
        super().__init__()

    def _key(self):
        return ("heavy", self.tail_index)

    @property
    def spec(self):
        return f"heavy:{_fmt(self.tail_index)}"

    def _pareto_expectation(self, g):
        # u = Z^(-a) is uniform on (0, 1]; a pure relative tolerance keeps the
        # tiny high-order moments accurate
        inv = -1.0 / self.tail_index

        def integrand(u):
            return g(u**inv) if u > 0.0 else 0.0

        return quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13)

    def _moment(self, a, b):
        return self._pareto_expectation(lambda z: (-math.expm1(-z)) ** a * math.exp(-b * z))

    def _mu(self):
        return self._pareto_expectation(lambda z: -math.log1p(-math.exp(-z)))

    def _nu(self):
        # E[Z] for a Pareto tail index <= 1
        return math.inf

    def cdf(self, x):
        if x <= -math.expm1(-1.0):
            return 0.0
        if x >= 1.0:
            return 1.0
        return 1.0 - (-math.log1p(-x)) ** (-self.tail_index)

    def log_survival(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = -np.log(-np.expm1(-r))
            out = np.where(z > 1.0, 1.0 - np.power(np.maximum(z, 1.0), -self.tail_index), 0.0)
        return np.where(r <= 0.0, 1.0, out)

    def _log_support_end(self):
        # -log W <= -log(1 - 1/e)
        return -math.log1p(-math.exp(-1.0))

    def _kernel_arrays(self):
        return KernelLaw(HEAVY, np.array([1.0]), np.array([1.0]), np.array([1.0]),
                         self.tail_index, None, None)


def _fmt(x):
    return repr(float(x))


def beta_moment_quad(alpha, beta, a, b):
    """Quadrature route to ``E[W^a (1-W)^b]`` under Beta(alpha, beta)."""

    def density(x, p, q):
        return math.exp((p - 1.0) * math.log(x) + (q - 1.0) * math.log1p(-x)) if 0 < x < 1 else 0.0

    num = quad(lambda x: density(x, alpha + a, beta + b), 0.0, 1.0, points=[0.5])
    den = quad(lambda x: density(x, alpha, beta), 0.0, 1.0, points=[0.5])
    return num / den


def beta_log_moment_quad(alpha, beta, which="mu"):
    """Quadrature route to ``E[-log W]`` (``which='mu'``) or ``E[-log(1-W)]``."""
    lb = betaln(alpha, beta)

    def integrand(x):
        if not 0 < x < 1:
            return 0.0
        dens = math.exp((alpha - 1.0) * math.log(x) + (beta - 1.0) * math.log1p(-x) - lb)
        return dens * (-math.log(x) if which == "mu" else -math.log1p(-x))

    return quad(integrand, 0.0, 1.0, points=[0.5])


# ---------------------------------------------------------------------------
# W0: largest point below 1 of the self-similar limit set


def _gl_integral(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (f(x) @ _GL_WEIGHTS)


def build_w0_grid(law, tol=W0_GRID_TOL, max_nodes=2_000_000):
    """Tabulate ``G(r) = P{-log W0 <= r} = (1/mu) int_0^r P{-log W > s} ds``.

    Nodes are refined until linear interpolation of ``G`` is within ``tol``
    at every interval midpoint, and the total mass is checked against 1.
    """
    mu = law.mu()
    r_end = law._log_support_end()
    f = law.log_survival
    nodes = np.concatenate([[0.0], np.geomspace(min(1e-12, r_end / 2), r_end, 400)])
    while True:
        lo, hi = nodes[:-1], nodes[1:]
        mid = 0.5 * (lo + hi)
        left = _gl_integral(f, lo, mid) / mu
        right = _gl_integral(f, mid, hi) / mu
        whole = left + right
        bad = np.abs(left - 0.5 * whole) > 0.25 * tol
        if not bad.any():
            break
        if len(nodes) + bad.sum() > max_nodes:
            raise NumericalFailure(
                f"W0 grid for {law.spec} needs more than {max_nodes} nodes",
                estimate=float(np.abs(left - 0.5 * whole).max()),
            )
        nodes = np.sort(np.concatenate([nodes, mid[bad]]))
    cdf = np.concatenate([[0.0], np.cumsum(whole)])
    tail = 0.0
    if law.log_survival(r_end) > 0:
        tail = quad(lambda s: float(f(s)), r_end, math.inf) / mu
    total = cdf[-1] + tail
    if abs(total - 1.0) > tol:
        raise NumericalFailure(
            f"W0 distribution for {law.spec} integrates to {total!r}, not 1",
            estimate=abs(total - 1.0),
        )
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return cdf[keep], nodes[keep]


def w0_cdf(law, x):
    """``P{W0 <= x}`` by direct quadrature of ``(mu t)^-1 P{W < t}``."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    mu = law.mu()
    # substitute t = e^{-s}: P{W0 <= x} = (1/mu) int_{-log x}^inf P{-log W > s} ds
    r = -math.log(x)
    end = law._log_support_end()
    if r >= end and law.log_survival(r) == 0:
        return 0.0
    return quad(lambda s: float(law.log_survival(s)), r, math.inf) / mu


# ---------------------------------------------------------------------------
# functional interface


def sample_w(law, rng):
    """One draw of W using the given ``numpy.random.Generator``."""
    return law.sample(rng)


def joint_moment(law, a, b, method="closed"):
    """``E[W^a (1-W)^b]``; ``method='quad'`` forces quadrature for Beta laws."""
    if method == "quad" and isinstance(law, Beta):
        return beta_moment_quad(law.alpha, law.beta, a, b)
    return law.joint_moment(a, b)


def mu(law, method="closed"):
    if method == "quad" and isinstance(law, Beta):
        return beta_log_moment_quad(law.alpha, law.beta, "mu")
    return law.mu()


def nu(law, method="closed"):
    """``E[-log(1-W)]``; ``math.inf`` when it diverges."""
    if method == "quad" and isinstance(law, Beta):
        return beta_log_moment_quad(law.alpha, law.beta, "nu")
    return law.nu()


def cdf_w(law, x):
    """``P{W < x}`` for ``0 <= x <= 1``."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return law.cdf(x)


def sample_w0(law, rng, size=None):
    """Draw W0, whose density on (0, 1] is ``P{W < x} / (mu x)``."""
    gu, gr = law.w0_grid()
    if size is None:
        return math.exp(-float(_fallback.draw_forward(gu, gr, rng)))
    u = rng.random(size)
    i = np.clip(np.searchsorted(gu, u, side="right") - 1, 0, len(gu) - 2)
    r = gr[i] + (u - gu[i]) * (gr[i + 1] - gr[i]) / (gu[i + 1] - gu[i])
    return np.exp(-np.minimum(r, gr[-1]))


def parse_law(text):
    """Build a law from its text form (see module docstring)."""
    text = text.strip()
    head, _, args = text.partition(":")
    head = head.strip().lower()
    try:
        if head == "uniform" and not args:
            return Uniform()
        if head == "beta-theta":
            return BetaThetaOne(float(args))
        if head == "beta":
            a, b = args.split(",")
            return Beta(float(a), float(b))
        if head == "heavy":
            return HeavyMeander(float(args) if args else 1.0)
        if head == "mixture":
            weights, comps = [], []
            for term in args.split("+"):
                w, _, comp = term.partition("*")
                law = parse_law(comp)
                if not isinstance(law, Beta):
                    raise LawSpecError(f"mixture components must be Beta laws: {comp!r}")
                weights.append(float(w))
                comps.append(law)
            return BetaMixture(weights, comps)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, LawSpecError):
            raise
        raise LawSpecError(f"cannot parse law {text!r}: {exc}") from exc
    raise LawSpecError(f"unknown law {text!r}")
