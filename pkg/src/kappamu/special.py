"""Sign-log scalar arithmetic and the special functions the series engine needs.

Everything the series machinery multiplies together -- gamma functions of
large argument, powers with exponents in the thousands, hypergeometric
terms -- overflows double precision long before the assembled result does.
All internal plumbing therefore carries (sign, log-magnitude) pairs and only
exponentiates at the last moment.  Signed sums of such pairs are reduced by
rescaling to the largest magnitude and compensated summation, with a
cancellation monitor so callers can detect when double precision has been
exhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as _sps

__all__ = [
    "SignLog",
    "DivergenceError",
    "PoleError",
    "ConvergenceError",
    "signed_reduce",
    "ln_gamma",
    "reg_gamma_q",
    "reg_gamma_p",
    "erfc",
    "bessel_i",
    "hyp_pfq",
    "hyp_2f1",
    "hyp_2f1_batch",
]

# exp() saturates to +-inf above this instead of raising; just below
# log(DBL_MAX) = 709.78
LOG_CAP = 709.0

NEG_INF = float("-inf")


class DivergenceError(ArithmeticError):
    """A series was requested outside its convergence region."""


class PoleError(ValueError):
    """A function was evaluated at a pole (nonpositive-integer denominator parameter)."""


class ConvergenceError(RuntimeError):
    """An adaptive evaluation exhausted its term budget without certifying the target."""


@dataclass(frozen=True)
class SignLog:
    """A real number stored as sign in {-1, 0, +1} and log of absolute value."""

    sign: int
    log_mag: float

    @staticmethod
    def zero() -> "SignLog":
        return SignLog(0, NEG_INF)

    @staticmethod
    def one() -> "SignLog":
        return SignLog(1, 0.0)

    @staticmethod
    def from_value(x: float) -> "SignLog":
        if x == 0.0:
            return SignLog.zero()
        if math.isnan(x):
            raise ValueError("cannot represent NaN as SignLog")
        return SignLog(1 if x > 0 else -1, math.log(abs(x)))

    def __mul__(self, other: "SignLog") -> "SignLog":
        s = self.sign * other.sign
        if s == 0:
            return SignLog.zero()
        return SignLog(s, self.log_mag + other.log_mag)

    def __neg__(self) -> "SignLog":
        return SignLog(-self.sign, self.log_mag)

    def scaled(self, log_factor: float, sign: int = 1) -> "SignLog":
        s = self.sign * sign
        if s == 0:
            return SignLog.zero()
        return SignLog(s, self.log_mag + log_factor)

    def value(self) -> float:
        """Collapse to float; overflow saturates to signed infinity."""
        if self.sign == 0:
            return 0.0
        if self.log_mag > LOG_CAP:
            return math.inf * self.sign
        return self.sign * math.exp(self.log_mag)


def signed_reduce(signs: np.ndarray, logs: np.ndarray) -> tuple[int, float, float]:
    """Sum sign_i * exp(log_i) exactly in rescaled space.

    Returns (sign, log|sum|, cancellation) where cancellation is
    max_i |term_i| / |sum|, the factor by which the largest contribution
    exceeds the result.  A cancellation of 1e12 means roughly 12 of the 16
    significant digits were annihilated.
    """
    signs = np.asarray(signs)
    logs = np.asarray(logs, dtype=float)
    live = (signs != 0) & np.isfinite(logs)
    if not np.any(live):
        return 0, NEG_INF, 1.0
    logs = logs[live]
    signs = signs[live]
    peak = float(np.max(logs))
    scaled = signs * np.exp(logs - peak)
    total = math.fsum(scaled.tolist())
    largest = float(np.max(np.abs(scaled)))
    if total == 0.0:
        return 0, NEG_INF, math.inf
    return (1 if total > 0.0 else -1), peak + math.log(abs(total)), largest / abs(total)


def ln_gamma(x: float) -> float:
    """Log of Gamma(x) for x > 0."""
    if not (x > 0.0) or math.isinf(x):
        raise ValueError(f"ln_gamma requires finite x > 0, got {x}")
    return math.lgamma(x)


def reg_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a)."""
    if not (a > 0.0):
        raise ValueError(f"reg_gamma_q requires a > 0, got {a}")
    if x < 0.0:
        raise ValueError(f"reg_gamma_q requires x >= 0, got {x}")
    return float(_sps.gammaincc(a, x))


def reg_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x)."""
    if not (a > 0.0):
        raise ValueError(f"reg_gamma_p requires a > 0, got {a}")
    if x < 0.0:
        raise ValueError(f"reg_gamma_p requires x >= 0, got {x}")
    return float(_sps.gammainc(a, x))


def erfc(x: float) -> float:
    return math.erfc(x)


def bessel_i(nu: float, x: float) -> SignLog:
    """Modified Bessel I_nu(x) as a SignLog, for nu > -1 and x >= 0.

    Uses the exponentially rescaled routine where it keeps precision and an
    ascending series in log space where the rescaled value underflows
    (large order, modest argument).
    """
    if nu <= -1.0:
        raise ValueError(f"bessel_i requires nu > -1, got {nu}")
    if x < 0.0:
        raise ValueError(f"bessel_i requires x >= 0, got {x}")
    if x == 0.0:
        if nu == 0.0:
            return SignLog.one()
        if nu > 0.0:
            return SignLog.zero()
        raise ValueError("I_nu(0) diverges for -1 < nu < 0")
    scaled = float(_sps.ive(nu, x))
    if scaled > 0.0 and math.isfinite(scaled):
        return SignLog(1, math.log(scaled) + x)
    # ive underflowed: sum I_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_k u^k / (k! (nu+1)_k)
    u = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= u / (k * (nu + k))
        total += term
        if term < 1e-18 * total:
            break
        if k > 10_000:  # unreachable for the underflow regime, guard anyway
            raise ConvergenceError("bessel_i series did not terminate")
    log_val = nu * math.log(0.5 * x) - math.lgamma(nu + 1.0) + math.log(total)
    return SignLog(1, log_val)


def _check_denominator_params(bs: tuple[float, ...]) -> None:
    for b in bs:
        if b <= 0.0 and b == round(b):
            raise PoleError(f"denominator parameter {b} is a nonpositive integer")


def hyp_pfq(
    a: tuple[float, ...],
    b: tuple[float, ...],
    z: float,
    tol: float = 1e-16,
    max_terms: int = 200_000,
) -> SignLog:
    """Generalized hypergeometric pFq(a; b; z) as a SignLog.

    Ascending series with sign-log terms.  Terminates when two consecutive
    terms fall below tol relative to the running sum (a single small term can
    be an accident of a sign pattern).  Raises DivergenceError outside the
    convergence region: p > q+1 with z != 0, or p == q+1 with |z| >= 1.
    """
    a = tuple(float(v) for v in a)
    b = tuple(float(v) for v in b)
    z = float(z)
    _check_denominator_params(b)
    if z == 0.0:
        return SignLog.one()
    p, q = len(a), len(b)
    if p > q + 1:
        raise DivergenceError(f"pFq with p={p} > q+1={q + 1} diverges for z != 0")
    if p == q + 1 and abs(z) >= 1.0:
        # unless some upper parameter truncates the series to a polynomial
        if not any(ai <= 0.0 and ai == round(ai) for ai in a):
            raise DivergenceError(f"{p}F{q} series diverges for |z| >= 1, got z={z}")

    sign_z = 1 if z > 0 else -1
    log_abs_z = math.log(abs(z))

    term_sign = 1
    term_log = 0.0
    sig = [1]
    lg = [0.0]
    # rough running magnitude for the stopping rule
    run_peak = 0.0
    run_sum = 1.0
    small_streak = 0
    k = 0
    while k < max_terms:
        # term_{k+1} = term_k * z * prod(a_i + k) / (prod(b_j + k) * (k+1))
        num_sign = 1
        num_log = 0.0
        terminated = False
        for ai in a:
            f = ai + k
            if f == 0.0:
                terminated = True
                break
            if f < 0:
                num_sign = -num_sign
            num_log += math.log(abs(f))
        if terminated:
            break
        den_log = math.log(k + 1.0)
        for bj in b:
            f = bj + k
            # nonpositive-integer b already rejected; f can still be negative
            if f < 0:
                num_sign = -num_sign
            den_log += math.log(abs(f))
        term_sign *= num_sign * sign_z
        term_log += log_abs_z + num_log - den_log
        k += 1
        sig.append(term_sign)
        lg.append(term_log)
        # streaming estimate of |sum| good to a few percent, enough to stop on
        if term_log > run_peak + 40.0:
            run_sum = run_sum * math.exp(run_peak - term_log) + term_sign
            run_peak = term_log
        else:
            run_sum += term_sign * math.exp(term_log - run_peak)
        scale = run_peak + math.log(abs(run_sum)) if run_sum != 0.0 else term_log
        if term_log < scale + math.log(tol):
            small_streak += 1
            if small_streak >= 2:
                break
        else:
            small_streak = 0
    else:
        raise ConvergenceError(
            f"hyp_pfq(a={a}, b={b}, z={z}) exceeded {max_terms} terms"
        )
    sign, log_mag, _ = signed_reduce(np.array(sig), np.array(lg))
    return SignLog(sign, log_mag)


def hyp_2f1(a: float, b: float, c: float, z: float) -> SignLog:
    """Gauss 2F1(a, b; c; z) for z < 1.

    Negative argument is mapped by the Pfaff transform
    2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)) onto (0,1) where the
    ascending series converges.
    """
    if c <= 0.0 and c == round(c):
        raise PoleError(f"2F1 pole: c={c} is a nonpositive integer")
    if z >= 1.0:
        raise DivergenceError(f"2F1 requires z < 1, got z={z}")
    if z < 0.0:
        x = z / (z - 1.0)  # in (0, 1)
        body = hyp_pfq((a, c - b), (c,), x)
        return body.scaled(-a * math.log1p(-z))
    return hyp_pfq((a, b), (c,), z)


def _series_2f1_unit_a(beta: float, gamma: float, x: float) -> float:
    """2F1(1, beta; gamma; x) for 0 < x < 1 by chunked direct summation.

    Terms are beta_(j)/gamma_(j) x^j, all positive for beta, gamma > 0; the
    ratio tends to x so the tail is geometric.  Vectorized in blocks so the
    ~1e5-term cases near x -> 1 stay cheap.
    """
    block = 4096
    total = 1.0
    factor = 1.0  # term value at the start of the block
    j0 = 0
    while True:
        j = np.arange(j0, j0 + block, dtype=float)
        ratios = x * (beta + j) / (gamma + j)
        terms = factor * np.cumprod(ratios)
        total += float(np.sum(terms))
        factor = float(terms[-1])
        j0 += block
        if factor < 1e-18 * total:
            return total
        if j0 > 5_000_000:
            raise ConvergenceError("2F1(1, b; c; x) block summation stalled")


def hyp_2f1_batch(a: float, b: float, c: float, z: float, count: int) -> np.ndarray:
    """log 2F1(a+m, b+m; c+m; z) for m = 0..count-1, with z < 0 and c - a = 1.

    The Pfaff transform gives (1-z)^(-(b+m)) * H_m with
    H_m = 2F1(1, b+m; c+m; x), x = z/(z-1), and the H_m satisfy
    H_m = 1 + x (b+m)/(c+m) H_{m+1}: running that relation backward from a
    direct-series anchor is contractive (each step multiplies the anchor
    error by roughly x < 1), whereas the forward direction amplifies by 1/x.
    A direct evaluation at m=0 cross-checks the recurrence; disagreement
    beyond 1e-11 falls back to per-index direct series.

    All values are positive; the plain log array is returned.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if z >= 0.0:
        raise ValueError("batch evaluation expects z < 0")
    if abs((c - a) - 1.0) > 1e-9:
        raise ValueError("batch recurrence requires c - a = 1")
    x = z / (z - 1.0)
    h = np.empty(count, dtype=float)
    h[count - 1] = _series_2f1_unit_a(b + count - 1, c + count - 1, x)
    for m in range(count - 2, -1, -1):
        h[m] = 1.0 + x * (b + m) / (c + m) * h[m + 1]
    direct0 = _series_2f1_unit_a(b, c, x)
    if abs(h[0] - direct0) > 1e-11 * direct0:
        for m in range(count):
            h[m] = _series_2f1_unit_a(b + m, c + m, x)
    return -(b + np.arange(count, dtype=float)) * math.log1p(-z) + np.log(h)
