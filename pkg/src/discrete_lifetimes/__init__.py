"""Discrete lifetime models for on-demand systems.

Inverse Polya (IPD) and Weibull-1 (W1) laws of the number of solicitations
to failure, their continuous Weibull approximation, censored maximum
likelihood, ageing diagnostics and reproducible simulation studies.
"""

from importlib.metadata import PackageNotFoundError, version

from .distributions import (
    IpdParams,
    UrnScheme,
    W1Params,
    WeibullParams,
    ipd_hazard,
    ipd_mttf,
    ipd_pmf,
    ipd_survival,
    w1_hazard,
    w1_mttf,
    w1_pmf,
    w1_survival,
    weibull_density,
    weibull_mean,
    weibull_quantile,
    weibull_survival,
)
from .sampling import (
    Event,
    GroupedSample,
    LifetimeSample,
    SeededStream,
    apply_censoring,
    sample_ipd,
    sample_w1,
    sample_weibull_discretized,
)
from .inference import (
    AllCensored,
    DegenerateSample,
    FitConfig,
    FitError,
    FitResult,
    MaxIterationsExceeded,
    Model,
    NonInvertibleHessian,
    fit_ipd,
    fit_w1,
    fit_weibull,
    ipd_log_likelihood,
    kaplan_meier,
)
from .diagnostics import (
    AgeingClass,
    AgeingReport,
    Plausibility,
    ageing_report,
    classify_beta,
    classify_ipd_ratio,
    find_w1_inflection,
    hazard_second_difference,
    inflection_map,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - source checkout without install
    __version__ = "0.0.0"
