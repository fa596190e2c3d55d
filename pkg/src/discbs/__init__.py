"""Discrete Birnbaum-Saunders distribution: evaluation, fitting, regression
and simulation studies."""

from .errors import (
    ConvergenceError,
    DomainError,
    TailExhaustedError,
    TruncationError,
)
from .core import (
    DistParams,
    TruncationPolicy,
    a_eval,
    a_prime,
    a_second,
    cdf,
    continuous_quantile,
    hazard,
    ihr_region_check,
    mode,
    mrlf,
    order_stat_cdf,
    pmf,
    quantile,
    raw_moment,
    reliability,
    sample,
    variance,
    vrlf,
)
from .mle import Dataset, FitResult, fit, hessian, information_criteria, loglik, score
from .regression import (
    DiagnosticsReport,
    RegressionDataset,
    RegressionFit,
    RegressionParams,
    envelope,
    link_beta,
    reg_fit,
    reg_hessian,
    reg_loglik,
    reg_score,
    residuals,
)

__version__ = "0.1.0"
