"""Exact formulas and Monte Carlo for the Bernoulli sieve occupancy scheme."""

from ._core import BACKEND
from .errors import (
    BudgetExceeded,
    DataError,
    IncompleteScan,
    LawSpecError,
    NumericalFailure,
    SieveLabError,
    TruncationError,
)
from .exact import (
    Pattern,
    PatternPmf,
    enumerate_finite,
    expected_kr,
    finite_marginals,
    finite_z_pmf,
    limit_marginal,
    limit_pmf,
    p_nm,
    pattern_prob,
)
from .laws import (
    Beta,
    BetaMixture,
    BetaThetaOne,
    HeavyMeander,
    MomentCache,
    StickLaw,
    Uniform,
    cdf_w,
    joint_moment,
    mu,
    nu,
    parse_law,
    sample_w,
    sample_w0,
)
from .limit import (
    GapOccupancy,
    PoissonStream,
    RenewalWindow,
    StopParams,
    build_window,
    gap_counts,
    sample_limit_Kr,
    sample_limit_Z,
    simulate_limit_Kr,
    simulate_limit_Z,
)
from .sieve import EmpiricalPmf, SieveOutcome, replicate, simulate_outcome
from .stats import ComparisonReport, chi_square_gof, convergence_table, mean_se, tv_distance

__version__ = "0.1.0"
