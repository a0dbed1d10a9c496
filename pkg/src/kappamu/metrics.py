"""Coverage probability and binary-modulation bit error probability.

Coverage is the CDF complement.  The BEP admits two series routes sharing
the erfc average: approach 1 substitutes the ascending density and needs
rate_factor/(g_b*w_hat) < 1; approach 2 substitutes the damped density,
converges unconditionally, and evaluates its Gauss hypergeometric column
through the backward-recurrence batch.  A dispatcher prefers approach 1
with a safety margin below its gate.

Sign conventions match the distribution module: approach-1 results are
tagged `standard`, approach-2 `tilde`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as _sps

from .coefficients import (
    SumSpec,
    coeff_envelope_log,
    get_cache,
)
from .distribution import (
    EvalResult,
    TruncationPolicy,
    _adaptive_eps,
    _sum_noise_log,
    cdf,
)
from .special import SignLog, hyp_2f1_batch, hyp_pfq, signed_reduce

__all__ = [
    "BFSK_MIN_CORRELATION",
    "BFSK_ORTHOGONAL",
    "BPSK",
    "GateError",
    "Modulation",
    "SnrThreshold",
    "bep",
    "bep_asymptotic",
    "bep_series_a1",
    "bep_series_a2",
    "bep_truncation_bound",
    "coverage",
    "coverage_asymptotic",
]

_MOD_GB = {"bpsk": 1.0, "bfsk_orthogonal": 0.5, "bfsk_min_correlation": 0.715}

# dispatcher stays below the approach-1 gate by this margin: the series
# still converges up to 1 but slows down and loses digits near the boundary
_GATE_MARGIN = 0.9

_LOG_2_SQRT_PI = math.log(2.0) + 0.5 * math.log(math.pi)


class GateError(ValueError):
    """Approach-1 convergence gate violated; use approach 2."""


@dataclass(frozen=True)
class Modulation:
    name: str
    g_b: float

    def __post_init__(self):
        expected = _MOD_GB.get(self.name)
        if expected is None:
            raise ValueError(f"unknown modulation {self.name!r}; choose from {sorted(_MOD_GB)}")
        if self.g_b != expected:
            raise ValueError(f"{self.name} requires g_b={expected}, got {self.g_b}")

    @classmethod
    def from_name(cls, name: str) -> "Modulation":
        key = name.replace("-", "_")
        if key not in _MOD_GB:
            raise ValueError(f"unknown modulation {name!r}; choose from {sorted(_MOD_GB)}")
        return cls(key, _MOD_GB[key])


BPSK = Modulation("bpsk", 1.0)
BFSK_ORTHOGONAL = Modulation("bfsk_orthogonal", 0.5)
BFSK_MIN_CORRELATION = Modulation("bfsk_min_correlation", 0.715)


@dataclass(frozen=True)
class SnrThreshold:
    gamma_th: float

    def __post_init__(self):
        if not (self.gamma_th > 0.0 and math.isfinite(self.gamma_th)):
            raise ValueError(f"gamma_th must be finite and > 0, got {self.gamma_th}")

    @classmethod
    def from_db(cls, gamma_th_db: float) -> "SnrThreshold":
        return cls(10.0 ** (gamma_th_db / 10.0))


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------


def coverage(
    spec: SumSpec,
    th: SnrThreshold,
    policy: TruncationPolicy | None = None,
    representation: str = "auto",
) -> EvalResult:
    """P(SNR > gamma_th) = 1 - CDF(gamma_th), clamped to [0, 1]."""
    res = cdf(spec, th.gamma_th, policy, representation)
    return EvalResult(
        min(1.0, max(0.0, 1.0 - res.value)), res.terms_used, res.error_bound, res.representation
    )


def coverage_asymptotic(spec: SumSpec, th: SnrThreshold) -> float:
    """High-mean-power coverage: one minus the leading CDF term."""
    nmu = spec.sum_shape
    log_term = (
        nmu * (math.log(spec.rate_factor) - spec.params.kappa)
        + nmu * (math.log(th.gamma_th) - math.log(spec.w_hat))
        - math.lgamma(nmu + 1.0)
    )
    return 1.0 - SignLog(1, log_term).value()


# ---------------------------------------------------------------------------
# BEP, approach 1 (ascending family)
# ---------------------------------------------------------------------------


def _a1_gate_ratio(spec: SumSpec, mod: Modulation) -> float:
    return spec.rate_factor / (mod.g_b * spec.w_hat)

def _a1_term_logs(spec: SumSpec, mod: Modulation, eps: int, cache) -> tuple[np.ndarray, np.ndarray]:
    nmu = spec.sum_shape
    q = nmu + np.arange(eps + 1, dtype=float)
    signs, logs = cache.values(eps)
    body = (
        -_LOG_2_SQRT_PI
        + nmu * (math.log(spec.rate_factor) - spec.params.kappa)
        - q * math.log(mod.g_b * spec.w_hat)
        + _sps.gammaln(q + 0.5)
        - _sps.gammaln(q + 1.0)
    )
    return signs, body + logs


def _a1_tail_cert(spec: SumSpec, mod: Modulation, eps: int) -> float:
    """Geometric tail certificate from the proven coefficient envelope."""
    nmu = spec.sum_shape
    r0 = _a1_gate_ratio(spec, mod)
    rho = r0 * max(1.0, (eps + nmu) / (eps + 1.0))
    if rho >= 1.0:
        return math.inf
    q = nmu + eps
    log_b = (
        -_LOG_2_SQRT_PI
        + nmu * (math.log(spec.rate_factor) - spec.params.kappa)
        - q * math.log(mod.g_b * spec.w_hat)
        + math.lgamma(q + 0.5)
        - math.lgamma(q + 1.0)
        + coeff_envelope_log(spec, eps)
        + eps * math.log(spec.rate_factor)
    )
    return math.exp(min(log_b, 700.0)) / (1.0 - rho)


def _mp_a1_sum(spec: SumSpec, mod: Modulation, eps: int, peak_log: float, target_tol: float, cache) -> float:
    import mpmath as mp

    span_digits = max(0.0, (peak_log - math.log(target_tol)) / math.log(10.0))
    dps = min(400, int(span_digits) + 30)
    coeffs = cache.mp_values(eps - 1, rel_digits=dps - 10)
    with mp.workdps(dps):
        # q must come from the same exact n*mu the recursion behind coeffs
        # used; the f64-rounded sum_shape jitters with m and the cancellation
        # amplifies that jitter into the leading digits of the result
        kap = mp.mpf(spec.params.kappa)
        nmu = spec.n_branches * mp.mpf(spec.params.mu)
        big_k = (1 + kap) * mp.mpf(spec.params.mu)
        gw = mp.mpf(mod.g_b) * mp.mpf(spec.w_hat)
        pref = (big_k / mp.exp(kap)) ** nmu / (2 * mp.sqrt(mp.pi))
        total = mp.mpf(0)
        for m in range(eps):
            q = nmu + m
            total += coeffs[m] * mp.gamma(q + 0.5) / (mp.gamma(q + 1) * gw**q)
        return float(pref * total)


def bep_series_a1(
    spec: SumSpec, mod: Modulation, policy: TruncationPolicy | None = None
) -> EvalResult:
    """BEP via the ascending density; requires rate_factor/(g_b*w_hat) < 1."""
    policy = policy or TruncationPolicy()
    r0 = _a1_gate_ratio(spec, mod)
    if r0 >= 1.0:
        raise GateError(
            f"approach-1 series diverges: rate_factor/(g_b*w_hat) = {r0:.6g} >= 1; "
            "use bep_series_a2"
        )
    cache = get_cache(spec, "standard", eps_max=policy.eps_max)

    def cert(eps: int) -> float:
        bound = _a1_tail_cert(spec, mod, eps)
        _, logs = _a1_term_logs(spec, mod, eps, cache)
        return max(bound, math.exp(min(logs[eps], 700.0)))

    eps, bound = _adaptive_eps(policy, cert)
    signs, logs = _a1_term_logs(spec, mod, eps, cache)
    sign, log_mag, cancel = signed_reduce(signs[:eps], logs[:eps])
    # rescue whenever the summation noise floor endangers the absolute target
    if _sum_noise_log(logs[:eps], cache.mp_start) > math.log(0.25 * policy.target_tol):
        peak = float(np.max(logs[:eps]))
        value = _mp_a1_sum(spec, mod, eps, peak, policy.target_tol, cache)
    else:
        value = SignLog(sign, log_mag).value()
    return EvalResult(value, eps, bound, "standard")


# ---------------------------------------------------------------------------
# BEP, approach 2 (damped family)
# ---------------------------------------------------------------------------


def _a2_term_logs(spec: SumSpec, mod: Modulation, eps: int, cache) -> np.ndarray:
    nmu = spec.sum_shape
    r = _a1_gate_ratio(spec, mod)
    q = nmu + np.arange(eps + 1, dtype=float)
    _, kt_logs = cache.values(eps)
    gauss_logs = hyp_2f1_batch(nmu, nmu + 0.5, nmu + 1.0, -r, eps + 1)
    return (
        -_LOG_2_SQRT_PI
        - spec.poisson_weight
        + q * math.log(r)
        + _sps.gammaln(q + 0.5)
        - _sps.gammaln(q + 1.0)
        + kt_logs
        + gauss_logs
    )


def _a2_tail_cert(spec: SumSpec, mod: Modulation, eps: int) -> float:
    """Tail certificate using 2F1(1, b; c; x) <= 1/(1-x) after Pfaff."""
    nmu = spec.sum_shape
    y = spec.poisson_weight
    r = _a1_gate_ratio(spec, mod)
    x = r / (1.0 + r)
    rho = x * y / (eps + 1.0)
    if rho >= 1.0:
        return math.inf
    q = nmu + eps
    log_b = (
        -_LOG_2_SQRT_PI
        - y
        + eps * math.log(y)
        - math.lgamma(eps + 1.0)
        + math.lgamma(q + 0.5)
        - math.lgamma(q + 1.0)
        + q * math.log(x)
        - 0.5 * math.log1p(r)
        - math.log1p(-x)
    )
    return math.exp(min(log_b, 700.0)) / (1.0 - rho)


def bep_series_a2(
    spec: SumSpec, mod: Modulation, policy: TruncationPolicy | None = None
) -> EvalResult:
    """BEP via the damped density; converges for every valid parameter set."""
    policy = policy or TruncationPolicy()
    cache = get_cache(spec, "tilde", eps_max=policy.eps_max)

    def cert(eps: int) -> float:
        return _a2_tail_cert(spec, mod, eps)

    eps, bound = _adaptive_eps(policy, cert)
    logs = _a2_term_logs(spec, mod, eps, cache)[:eps]
    value = float(np.exp(_sps.logsumexp(logs)))
    return EvalResult(value, eps, bound, "tilde")


def bep(spec: SumSpec, mod: Modulation, policy: TruncationPolicy | None = None) -> EvalResult:
    """Route to approach 1 well inside its gate, otherwise approach 2."""
    if spec.params.kappa > 0.0 and _a1_gate_ratio(spec, mod) <= _GATE_MARGIN:
        return bep_series_a1(spec, mod, policy)
    return bep_series_a2(spec, mod, policy)


def bep_asymptotic(spec: SumSpec, mod: Modulation) -> float:
    """High-mean-power BEP: the m = 0 series term alone."""
    nmu = spec.sum_shape
    log_v = (
        math.lgamma(nmu + 0.5)
        - _LOG_2_SQRT_PI
        - math.lgamma(nmu + 1.0)
        + nmu * (math.log(spec.rate_factor) - spec.params.kappa - math.log(mod.g_b * spec.w_hat))
    )
    return SignLog(1, log_v).value()


def bep_truncation_bound(spec: SumSpec, mod: Modulation, eps: int) -> float:
    """Published envelope bound on the approach-1 BEP tail after eps terms.

    Available only below the approach-1 gate (the 3F2 argument must stay
    inside the unit disc); see the package docs for the envelope's measured
    validity domain.
    """
    if eps < 1:
        raise ValueError("eps must be >= 1")
    nmu = spec.sum_shape
    mu = spec.params.mu
    x = spec.bound_rate_factor / (mod.g_b * spec.w_hat)
    log_pref = (
        math.log(4.0 * spec.n_branches / 7.0)
        - 0.5 * math.log(math.pi)
        + math.lgamma(mu + eps)
        + math.lgamma(nmu + eps + 0.5)
        - math.lgamma(eps)
        - math.lgamma(nmu + eps + 1.0)
        + eps * math.log(x)
        + nmu * (math.log(spec.rate_factor) - spec.params.kappa - math.log(mod.g_b * spec.w_hat))
    )
    body = hyp_pfq(
        (nmu + eps + 0.5, mu + eps, 1.0), (nmu + eps + 1.0, float(eps)), x, 1e-16, 400_000
    )
    return body.scaled(log_pref).value()
