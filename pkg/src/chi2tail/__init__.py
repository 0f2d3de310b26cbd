"""Chi-square risk of add-lambda estimators for discrete distributions.

Exact formulas, threshold tables, adversarial certificates and a seeded
Monte Carlo harness for checking high-probability bounds on the
chi-square loss of smoothed frequency estimators.
"""

from .bounds import Family, ThresholdSpec, ThresholdValue, compare_thresholds, threshold
from .divergences import PreconditionError, chi2, f_loss, hellinger_sq, kl, tv
from .estimators import (
    KRICHEVSKY_TROFIMOV,
    LAPLACE,
    ConfidenceDependent,
    Empirical,
    Fixed,
    estimate,
    parse_rule,
)
from .exact import exact_laplace_chi2_expectation, expected_inverse_count_plus_one
from .simplex import (
    CountVector,
    Distribution,
    RngSeed,
    Sample,
    ValidationError,
    count_classes,
    dirac,
    make_distribution,
    power_law,
    sample_iid,
    two_point,
    uniform,
)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceDependent", "CountVector", "Distribution", "Empirical", "Family", "Fixed",
    "KRICHEVSKY_TROFIMOV", "LAPLACE", "PreconditionError", "RngSeed", "Sample",
    "ThresholdSpec", "ThresholdValue", "ValidationError", "chi2", "compare_thresholds",
    "count_classes", "dirac", "estimate", "exact_laplace_chi2_expectation",
    "expected_inverse_count_plus_one", "f_loss", "hellinger_sq", "kl", "make_distribution",
    "parse_rule", "power_law", "sample_iid", "threshold", "tv", "two_point", "uniform",
]
