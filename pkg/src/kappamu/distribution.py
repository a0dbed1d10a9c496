"""PDF, CDF, and MGF of the power sum via two series representations.

The ascending (`standard`) representation is a power series in w whose
signed coefficients cancel heavily once its argument grows; the damped
(`tilde`) representation has nonnegative terms throttled by an explicit
exponential and converges everywhere.  Adaptive truncation certifies the
absolute tail before a single term is trusted:

* damped forms: the term ratio is exactly computable and decreasing, so the
  tail after eps terms is bounded by first-neglected-term / (1 - ratio);
* ascending forms: the published envelope-based truncation bound (exposed
  verbatim as `truncation_bound`) backed by a trailing-term companion.

The certified eps found by geometric doubling is then refined downward by
bisection to the smallest certified order, which keeps reported term
counts close to what the tolerance actually requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as _sps

from .coefficients import (
    DRIFT_TRIGGER,
    CoefficientCache,
    SumSpec,
    coeff_envelope_log,
    get_cache,
)
from .special import NEG_INF, ConvergenceError, SignLog, hyp_pfq, signed_reduce

__all__ = [
    "EvalResult",
    "TruncationPolicy",
    "cdf",
    "convergence_diag",
    "gamma_limit_pdf",
    "mgf",
    "oracle_pdf_single",
    "pdf",
    "truncation_bound",
]

LOG_EPS = math.log(2.0**-52)

# hypergeometric arguments beyond this make every bound astronomically large;
# short-circuit to +inf instead of summing ~argument many terms
_BOUND_ARG_CAP = 5e4


def _sum_noise_log(logs: np.ndarray, mp_start: int | None) -> float:
    """Log of an upper bound on the roundoff of summing sign*exp(logs).

    Two per-term error sources: the log-domain representation resolves a
    value only to ~ulp(|log|), and double-path coefficients carry relative
    error up to the cache's drift trigger (backend-served indices from
    mp_start onward do not).
    """
    a = np.maximum(np.abs(logs), 1.0)
    delta = (3.0 * 2.0**-52) * a
    if mp_start is None:
        delta += 0.25 * DRIFT_TRIGGER
    elif mp_start > 0:
        delta[: min(mp_start, delta.size)] += 0.25 * DRIFT_TRIGGER
    with np.errstate(invalid="ignore"):
        noise = logs + np.log(delta)
    peak = float(np.max(noise))
    if peak == NEG_INF or math.isnan(peak):
        return NEG_INF
    return peak + math.log(float(np.sum(np.exp(noise - peak))))


@dataclass(frozen=True)
class TruncationPolicy:
    """Absolute-error target and term-budget controls for adaptive evaluation."""

    target_tol: float = 1e-12
    eps_start: int = 64
    eps_max: int = 4096
    zeta: int = 0

    def __post_init__(self):
        if not (self.target_tol > 0.0):
            raise ValueError("target_tol must be > 0")
        if self.eps_start < 1 or self.eps_max < self.eps_start:
            raise ValueError("need 1 <= eps_start <= eps_max")
        if self.zeta not in (0, 1):
            raise ValueError("zeta must be 0 or 1")


@dataclass(frozen=True)
class EvalResult:
    value: float
    terms_used: int
    error_bound: float
    representation: str


def _resolve_representation(spec: SumSpec, z: float, representation: str) -> str:
    if representation == "auto":
        if spec.params.kappa == 0.0 or z >= 1.0:
            return "tilde"
        return "standard"
    if representation not in ("standard", "tilde"):
        raise ValueError(f"representation must be auto|standard|tilde, got {representation!r}")
    if representation == "standard" and spec.params.kappa == 0.0:
        raise ValueError("standard representation is undefined at kappa=0; use tilde")
    return representation


def _adaptive_eps(policy: TruncationPolicy, cert_fn) -> tuple[int, float]:
    """Smallest eps whose certificate meets the target, by doubling then bisection."""
    eps = min(policy.eps_start, policy.eps_max)
    lo = 0  # largest known-failing eps
    while True:
        bound = cert_fn(eps)
        if bound <= policy.target_tol:
            break
        if eps >= policy.eps_max:
            raise ConvergenceError(
                f"truncation certificate {bound:.3e} still above target "
                f"{policy.target_tol:.1e} at eps_max={policy.eps_max}"
            )
        lo = eps
        eps = min(2 * eps, policy.eps_max)
    hi, hi_bound = eps, bound
    while hi - lo > 1:
        mid = (lo + hi) // 2
        b = cert_fn(mid)
        if b <= policy.target_tol:
            hi, hi_bound = mid, b
        else:
            lo = mid
    return hi, hi_bound


# ---------------------------------------------------------------------------
# damped (tilde) representation
# ---------------------------------------------------------------------------


def _tilde_term_logs(spec: SumSpec, kind: str, arg: float, eps: int, cache: CoefficientCache) -> np.ndarray:
    """Logs of the nonnegative series terms for m = 0..eps inclusive.

    kind 'pdf': arg is w;  'cdf': arg is w;  'mgf': arg is s.
    """
    nmu = spec.sum_shape
    y = spec.poisson_weight
    m = np.arange(eps + 1, dtype=float)
    _, kt_logs = cache.values(eps)
    if kind == "pdf":
        z = spec.rate_factor * arg / spec.w_hat
        return (
            -z - y + (nmu + m) * math.log(z) - math.log(arg) - _sps.gammaln(nmu + m) + kt_logs
        )
    if kind == "cdf":
        z = spec.rate_factor * arg / spec.w_hat
        with np.errstate(divide="ignore"):
            log_p = np.log(_sps.gammainc(nmu + m, z))
        return -y + kt_logs + log_p
    # mgf
    v = spec.rate_factor / (spec.rate_factor + arg * spec.w_hat)
    return -y + (nmu + m) * math.log(v) + kt_logs


def _tilde_tail_ratio(spec: SumSpec, kind: str, arg: float, eps: int) -> float:
    """Upper bound on t_{m+1}/t_m valid for every m >= eps (provably decreasing)."""
    y = spec.poisson_weight
    if kind == "pdf":
        z = spec.rate_factor * arg / spec.w_hat
        return z * y / ((eps + 1.0) * (spec.sum_shape + eps))
    if kind == "cdf":
        # regularized lower gamma decreases in its shape parameter
        return y / (eps + 1.0)
    v = spec.rate_factor / (spec.rate_factor + arg * spec.w_hat)
    return v * y / (eps + 1.0)


def _tilde_eval(spec: SumSpec, kind: str, arg: float, policy: TruncationPolicy) -> EvalResult:
    cache = get_cache(spec, "tilde", eps_max=policy.eps_max)

    def cert(eps: int) -> float:
        logs = _tilde_term_logs(spec, kind, arg, eps, cache)
        t_eps = math.exp(min(logs[eps], 700.0))
        rho = _tilde_tail_ratio(spec, kind, arg, eps)
        if rho >= 1.0:
            return math.inf
        return t_eps / (1.0 - rho)

    eps, bound = _adaptive_eps(policy, cert)
    logs = _tilde_term_logs(spec, kind, arg, eps, cache)[:eps]
    value = float(np.exp(_sps.logsumexp(logs)))
    return EvalResult(value, eps, bound, "tilde")


# ---------------------------------------------------------------------------
# ascending (standard) representation
# ---------------------------------------------------------------------------


def _standard_term_parts(
    spec: SumSpec, kind: str, arg: float, eps: int, cache: CoefficientCache
) -> tuple[np.ndarray, np.ndarray]:
    nmu = spec.sum_shape
    kap = spec.params.kappa
    pref = nmu * (math.log(spec.rate_factor) - kap)
    m = np.arange(eps + 1, dtype=float)
    signs, logs = cache.values(eps)
    if kind == "pdf":
        body = (nmu + m - 1.0) * math.log(arg) - (nmu + m) * math.log(spec.w_hat) - _sps.gammaln(nmu + m)
    elif kind == "cdf":
        body = (nmu + m) * (math.log(arg) - math.log(spec.w_hat)) - _sps.gammaln(nmu + m + 1.0)
    else:  # mgf
        body = -(nmu + m) * math.log(arg * spec.w_hat)
    return signs, pref + body + logs


def _mgf_tail_bound(spec: SumSpec, s: float, eps: int) -> float:
    """Envelope tail bound for the ascending MGF series (argument 1/(s*w_hat))."""
    u = 1.0 / (s * spec.w_hat)
    x = spec.bound_rate_factor * u
    if x >= 1.0:
        return math.inf
    nmu = spec.sum_shape
    mu = spec.params.mu
    log_pref = (
        nmu * (math.log(spec.rate_factor) - spec.params.kappa)
        + nmu * math.log(u)
        + math.log(8.0 * spec.n_branches / 7.0)
        + math.lgamma(mu + eps)
        - math.lgamma(eps)
        + eps * math.log(x)
    )
    tail = hyp_pfq((1.0, mu + eps), (float(eps),), x)
    return tail.scaled(log_pref).value()


def _laguerre_tail(spec: SumSpec, kind: str, arg: float, eps: int) -> float:
    """Geometric tail certificate from the coefficient envelope above.

    Valid over the entire convergence domain of the ascending series, unlike
    the published envelope bound whose constant degrades at large aggregate
    shape.  Used only for stopping; `truncation_bound` stays the public bound.
    """
    nmu = spec.sum_shape
    big_k = spec.rate_factor
    if kind == "pdf":
        z = big_k * arg / spec.w_hat
        # b_m = env(m) * z^m / Gamma(nmu+m); term ratio <= z / (eps + min(nmu, 1))
        log_pref = (
            nmu * (math.log(big_k) - spec.params.kappa)
            + (nmu - 1.0) * math.log(arg)
            - nmu * math.log(spec.w_hat)
        )
        log_b = coeff_envelope_log(spec, eps) + eps * math.log(z) - math.lgamma(nmu + eps)
        rho = z / (eps + min(nmu, 1.0))
    elif kind == "cdf":
        z = big_k * arg / spec.w_hat
        log_pref = nmu * (math.log(big_k) - spec.params.kappa) + nmu * (
            math.log(arg) - math.log(spec.w_hat)
        )
        log_b = coeff_envelope_log(spec, eps) + eps * math.log(z) - math.lgamma(nmu + eps + 1.0)
        rho = z / (eps + min(nmu, 1.0))
    else:  # mgf
        u = 1.0 / (arg * spec.w_hat)
        x = big_k * u
        if x >= 1.0:
            return math.inf
        log_pref = nmu * (math.log(big_k) - spec.params.kappa) + nmu * math.log(u)
        log_b = coeff_envelope_log(spec, eps) + eps * math.log(x)
        rho = x * max(1.0, (eps + nmu) / (eps + 1.0))
    if rho >= 1.0:
        return math.inf
    return math.exp(min(log_pref + log_b, 700.0)) / (1.0 - rho)


def _standard_eval(spec: SumSpec, kind: str, arg: float, policy: TruncationPolicy) -> EvalResult:
    cache = get_cache(spec, "standard", eps_max=policy.eps_max)
    zeta = 0 if kind == "pdf" else 1

    def cert(eps: int) -> float:
        if kind == "mgf":
            published = _mgf_tail_bound(spec, arg, eps)
        else:
            published = truncation_bound(spec, arg, eps, zeta)
        bound = min(published, _laguerre_tail(spec, kind, arg, eps))
        # companion: never stop while the first neglected term still exceeds target
        _, logs = _standard_term_parts(spec, kind, arg, eps, cache)
        return max(bound, math.exp(min(logs[eps], 700.0)))

    eps, bound = _adaptive_eps(policy, cert)
    signs, logs = _standard_term_parts(spec, kind, arg, eps, cache)
    sign, log_mag, cancel = signed_reduce(signs[:eps], logs[:eps])
    # rescue whenever the summation noise floor endangers the absolute target,
    # regardless of how benign the cancellation ratio looks
    if _sum_noise_log(logs[:eps], cache.mp_start) > math.log(0.25 * policy.target_tol):
        peak = float(np.max(logs[:eps]))
        value = _mp_standard_sum(spec, kind, arg, eps, peak, policy.target_tol, cache)
    else:
        value = SignLog(sign, log_mag).value()
    return EvalResult(value, eps, bound, "standard")


def _mp_standard_sum(
    spec: SumSpec,
    kind: str,
    arg: float,
    eps: int,
    peak_log: float,
    target_tol: float,
    cache: CoefficientCache,
) -> float:
    import mpmath as mp

    span_digits = max(0.0, (peak_log - math.log(target_tol)) / math.log(10.0))
    dps = min(400, int(span_digits) + 30)
    coeffs = cache.mp_values(eps - 1, rel_digits=dps - 10)
    with mp.workdps(dps):
        # derive n*mu in mp so every exponent is consistent with the exact
        # parameters the coefficient recursion used (see _mp_a1_sum)
        kap = mp.mpf(spec.params.kappa)
        mu = mp.mpf(spec.params.mu)
        nmu = spec.n_branches * mu
        what = mp.mpf(spec.w_hat)
        a = mp.mpf(arg)
        pref = ((1 + kap) * mu / mp.exp(kap)) ** nmu
        total = mp.mpf(0)
        for m in range(eps):
            q = nmu + m
            if kind == "pdf":
                t = a ** (q - 1) / (what**q * mp.gamma(q))
            elif kind == "cdf":
                t = (a / what) ** q / mp.gamma(q + 1)
            else:
                t = (a * what) ** (-q)
            total += coeffs[m] * t
        return float(pref * total)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def pdf(
    spec: SumSpec,
    w: float,
    policy: TruncationPolicy | None = None,
    representation: str = "auto",
) -> EvalResult:
    """Density of the power sum at w >= 0."""
    policy = policy or TruncationPolicy()
    if w < 0.0 or not math.isfinite(w):
        raise ValueError(f"w must be finite and >= 0, got {w}")
    nmu = spec.sum_shape
    z = spec.rate_factor * w / spec.w_hat
    rep = _resolve_representation(spec, z, representation)
    if w == 0.0:
        if nmu > 1.0:
            return EvalResult(0.0, 0, 0.0, rep)
        if abs(nmu - 1.0) <= 1e-12:
            # exact limit of the damped series: only the m=0 term survives
            val = math.exp(-spec.poisson_weight) * spec.rate_factor / spec.w_hat
            return EvalResult(val, 1, 0.0, rep)
        raise ValueError("density diverges at w=0 when the aggregate shape is below 1")
    if rep == "tilde":
        return _tilde_eval(spec, "pdf", w, policy)
    return _standard_eval(spec, "pdf", w, policy)


def cdf(
    spec: SumSpec,
    w: float,
    policy: TruncationPolicy | None = None,
    representation: str = "auto",
) -> EvalResult:
    """Distribution function of the power sum at w >= 0, clamped to [0, 1]."""
    policy = policy or TruncationPolicy()
    if w < 0.0 or not math.isfinite(w):
        raise ValueError(f"w must be finite and >= 0, got {w}")
    z = spec.rate_factor * w / spec.w_hat
    rep = _resolve_representation(spec, z, representation)
    if w == 0.0:
        return EvalResult(0.0, 0, 0.0, rep)
    if rep == "tilde":
        res = _tilde_eval(spec, "cdf", w, policy)
    else:
        res = _standard_eval(spec, "cdf", w, policy)
    return EvalResult(min(1.0, max(0.0, res.value)), res.terms_used, res.error_bound, rep)


def mgf(
    spec: SumSpec,
    s: float,
    policy: TruncationPolicy | None = None,
    representation: str = "auto",
) -> EvalResult:
    """E[exp(-s W)] for s > 0 (Laplace-transform convention).

    The damped representation converges for every s > 0 and is the automatic
    choice; the ascending one requires s > rate_factor / w_hat.
    """
    policy = policy or TruncationPolicy()
    if not (s > 0.0) or not math.isfinite(s):
        raise ValueError(f"s must be finite and > 0, got {s}")
    if representation == "auto":
        rep = "tilde"
    else:
        rep = _resolve_representation(spec, math.inf, representation)
    if rep == "tilde":
        return _tilde_eval(spec, "mgf", s, policy)
    if s * spec.w_hat <= spec.rate_factor:
        raise ValueError(
            "ascending MGF series requires s > rate_factor/w_hat "
            f"(= {spec.rate_factor / spec.w_hat:.6g}), got s={s}"
        )
    return _standard_eval(spec, "mgf", s, policy)


def truncation_bound(spec: SumSpec, w: float, eps: int, zeta: int) -> float:
    """Published envelope bound on the absolute series tail after eps terms.

    Nonnegative; overflow saturates to +inf.  The envelope constant uses the
    product form rate_factor*(kappa*mu+1); see the package docs for its
    measured validity domain.
    """
    if eps < 1:
        raise ValueError("eps must be >= 1")
    if zeta not in (0, 1):
        raise ValueError("zeta must be 0 or 1")
    if not (w > 0.0):
        raise ValueError("w must be > 0")
    nmu = spec.sum_shape
    mu = spec.params.mu
    x = spec.bound_rate_factor * w / spec.w_hat
    if x > _BOUND_ARG_CAP:
        return math.inf
    log_pref = (
        nmu * (math.log(spec.rate_factor) - spec.params.kappa)
        + math.log(8.0 * spec.n_branches / 7.0)
        + math.lgamma(mu + eps)
        + (nmu + eps - 1.0 + zeta) * math.log(w)
        - math.lgamma(eps)
        - math.lgamma(nmu + eps + zeta)
        - (nmu + eps) * math.log(spec.w_hat)
        + eps * math.log(spec.bound_rate_factor)
    )
    body = hyp_pfq((1.0, mu + eps), (float(eps), nmu + eps + zeta), x, 1e-16, 400_000)
    return body.scaled(log_pref).value()


def convergence_diag(spec: SumSpec, w: float, zeta: int) -> float:
    """Finite majorant of the ascending series' absolute-term sum (no prefactor).

    Establishes absolute convergence; grossly conservative as a tail
    estimate.  Saturates to +inf outside double range.
    """
    if zeta not in (0, 1):
        raise ValueError("zeta must be 0 or 1")
    if not (w > 0.0):
        raise ValueError("w must be > 0")
    nmu = spec.sum_shape
    mu = spec.params.mu
    n = spec.n_branches
    x = spec.bound_rate_factor * w / spec.w_hat
    if x > _BOUND_ARG_CAP:
        return math.inf
    lead = SignLog(
        1, (nmu - 1.0 + zeta) * math.log(w) - nmu * math.log(spec.w_hat) - math.lgamma(nmu + zeta)
    )
    inner_log = (
        math.log(8.0 * n / 7.0)
        + math.lgamma(mu + 1.0)
        + math.lgamma(nmu + zeta)
        - math.lgamma(nmu + 1.0 + zeta)
        + math.log(w)
        - math.log(spec.w_hat)
        + math.log(spec.bound_rate_factor)
    )
    kummer = hyp_pfq((mu + 1.0,), (nmu + 1.0 + zeta,), x, 1e-16, 400_000)
    inner = 1.0 + kummer.scaled(inner_log).value()
    return lead.scaled(math.log(inner)).value()


def oracle_pdf_single(kappa: float, mu: float, w_hat: float, w: float) -> float:
    """Exact single-branch squared-envelope density, via the log-domain Bessel I.

    Independent of the series machinery; the sum of N i.i.d. branches follows
    the same law with (kappa, N*mu, N*w_hat), which makes this the exactness
    reference for the series forms.
    """
    from .special import bessel_i

    if not (kappa > 0.0 and mu > 0.0 and w_hat > 0.0 and w > 0.0):
        raise ValueError("oracle_pdf_single requires kappa, mu, w_hat, w all > 0")
    big_k = (1.0 + kappa) * mu
    arg = 2.0 * math.sqrt(kappa * mu * big_k * w / w_hat)
    log_pref = (
        math.log(mu)
        + 0.5 * (mu + 1.0) * math.log1p(kappa)
        - 0.5 * (mu - 1.0) * math.log(kappa)
        - kappa * mu
        + 0.5 * (mu - 1.0) * math.log(w / w_hat)
        - math.log(w_hat)
        - big_k * w / w_hat
    )
    return bessel_i(mu - 1.0, arg).scaled(log_pref).value()


def gamma_limit_pdf(mu: float, n: int, w_hat: float, w: float) -> float:
    """Gamma density with shape n*mu and rate mu/w_hat: the kappa -> 0 limit."""
    if not (mu > 0.0 and w_hat > 0.0) or n < 1:
        raise ValueError("gamma_limit_pdf requires mu > 0, w_hat > 0, n >= 1")
    if w < 0.0:
        raise ValueError("w must be >= 0")
    shape = n * mu
    rate = mu / w_hat
    if w == 0.0:
        if shape > 1.0:
            return 0.0
        if abs(shape - 1.0) <= 1e-12:
            return rate
        raise ValueError("density diverges at w=0 when the aggregate shape is below 1")
    return math.exp(shape * math.log(rate) + (shape - 1.0) * math.log(w) - rate * w - math.lgamma(shape))
