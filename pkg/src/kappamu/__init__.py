"""Exact distribution of sums of squared kappa-mu envelopes, with link metrics.

The package evaluates the density, distribution function, and Laplace
transform of the sum of N i.i.d. squared kappa-mu variates through two
recursive series representations with certified truncation error, and
builds coverage and bit-error metrics for multi-antenna receivers on top.
A Monte Carlo layer cross-validates every analytic path.
"""

from .coefficients import (
    CoefficientCache,
    CoefficientOverflowError,
    FadingParams,
    SumSpec,
    get_cache,
    k_coeff,
    reset_instrumentation,
    tilde_k_coeff,
)
from .distribution import (
    EvalResult,
    TruncationPolicy,
    cdf,
    convergence_diag,
    gamma_limit_pdf,
    mgf,
    oracle_pdf_single,
    pdf,
    truncation_bound,
)
from .link_budget import LinkBudget, effective_spec, noise_power_dbm, w_hat_from_budget
from .metrics import (
    Modulation,
    SnrThreshold,
    bep,
    bep_asymptotic,
    bep_series_a1,
    bep_series_a2,
    bep_truncation_bound,
    coverage,
    coverage_asymptotic,
)
from .monte_carlo import (
    EstimateCI,
    RngSpec,
    estimate_bep,
    estimate_cdf,
    ks_against_cdf,
    sample_kappa_mu_power,
    simulate_mrc_snr,
)
from .special import (
    ConvergenceError,
    DivergenceError,
    PoleError,
    SignLog,
    bessel_i,
    erfc,
    hyp_2f1,
    hyp_pfq,
    ln_gamma,
    reg_gamma_p,
    reg_gamma_q,
    signed_reduce,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientCache",
    "CoefficientOverflowError",
    "ConvergenceError",
    "DivergenceError",
    "EstimateCI",
    "EvalResult",
    "FadingParams",
    "LinkBudget",
    "Modulation",
    "PoleError",
    "RngSpec",
    "SignLog",
    "SnrThreshold",
    "SumSpec",
    "TruncationPolicy",
    "bep",
    "bep_asymptotic",
    "bep_series_a1",
    "bep_series_a2",
    "bep_truncation_bound",
    "bessel_i",
    "cdf",
    "convergence_diag",
    "coverage",
    "coverage_asymptotic",
    "effective_spec",
    "erfc",
    "estimate_bep",
    "estimate_cdf",
    "gamma_limit_pdf",
    "get_cache",
    "hyp_2f1",
    "hyp_pfq",
    "k_coeff",
    "ks_against_cdf",
    "ln_gamma",
    "mgf",
    "noise_power_dbm",
    "oracle_pdf_single",
    "pdf",
    "reg_gamma_p",
    "reg_gamma_q",
    "reset_instrumentation",
    "sample_kappa_mu_power",
    "signed_reduce",
    "simulate_mrc_snr",
    "tilde_k_coeff",
    "truncation_bound",
    "w_hat_from_budget",
]
