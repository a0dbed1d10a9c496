"""Memoized generation of the two series-coefficient families.

Both series representations of the sum distribution are driven by
coefficient sequences defined through linear convolution recursions: a
`standard` family whose members alternate in sign and grow like the m-th
power of (1+kappa)mu, and a `tilde` family of nonnegative members paired
with the exponentially damped representation.  A coefficient depends only
on (family, kappa, mu, N), never on the mean power, so one cache serves
every evaluation point of a sweep.

The recursions subtract like-sized quantities, and the error injected at
one index is amplified by every later convolution, so a per-sum
cancellation monitor alone is not enough.  Each cache therefore runs a
twin fill with deterministic one-ulp-scale perturbations injected per
index; once the twins drift apart by more than DRIFT_TRIGGER (or a single
reduction cancels more than CANCEL_RESCUE_RATIO), all later indices come
from an arbitrary-precision backend that replays the prefix internally
and verifies itself with a shadow run at lower precision.  Indices
exposed before the switch are never rewritten, so values stay immutable
and bit-deterministic regardless of how the cache is grown.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
import scipy.special as _sps

from .special import NEG_INF, SignLog, signed_reduce

__all__ = [
    "CANCEL_RESCUE_RATIO",
    "DRIFT_TRIGGER",
    "LOG_MAG_CAP",
    "CoefficientCache",
    "CoefficientOverflowError",
    "FadingParams",
    "SumSpec",
    "coeff_envelope_log",
    "get_cache",
    "k_coeff",
    "reset_instrumentation",
    "tilde_k_coeff",
]

# cancellation ratio (largest term / result) that forces the high-precision backend
CANCEL_RESCUE_RATIO = 1e12

# log-drift between the twin fills that forces the high-precision backend; the
# drift overstates the realized error by roughly the injection factor (8), and
# the error can grow by ~2x per index, so the trigger sits well below the
# 1e-10 accuracy goal for exposed double-precision coefficients
DRIFT_TRIGGER = 1e-12

# twin perturbations are scaled to the spacing of the stored log magnitude:
# anything smaller is not representable and would round away
_PERT_ULPS = 8.0

# accuracy goal (decimal digits) for backend-produced coefficients, and the
# precision gap of the shadow run used to verify them
_MP_GOAL_DIGITS = 30
_MP_PAIR_GAP = 12
_BITS_PER_DIGIT = 3.3219280948873626  # log2(10)

# public coefficient accessors refuse values beyond this log magnitude so a
# caller iterating raw coefficients learns to switch representation before
# exponentiation becomes meaningless
LOG_MAG_CAP = 700.0 * math.log(10.0)


class CoefficientOverflowError(OverflowError):
    """A requested coefficient exceeds the configured log-magnitude cap."""


def _pert_sign(m: int) -> float:
    # balanced deterministic sign stream (bit 16 of a Knuth multiplicative hash)
    return 1.0 if (m * 2654435761) & 0x10000 else -1.0


def _pert(m: int, log_mag: float) -> float:
    # sqrt(m) mirrors the m independent per-term roundings of one convolution,
    # which the twin replaces with a single injection
    return _pert_sign(m) * _PERT_ULPS * math.sqrt(m) * math.ulp(abs(log_mag))


@dataclass(frozen=True)
class FadingParams:
    """Envelope model: kappa is the dominant-to-scattered power ratio, mu the cluster count."""

    kappa: float
    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa >= 0.0):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")
        if not (math.isfinite(self.mu) and self.mu > 0.0):
            raise ValueError(f"mu must be finite and > 0, got {self.mu}")


@dataclass(frozen=True)
class SumSpec:
    """A sum of n_branches i.i.d. squared envelopes, each with mean power w_hat."""

    params: FadingParams
    n_branches: int
    w_hat: float

    def __post_init__(self):
        if not isinstance(self.n_branches, int) or self.n_branches < 1:
            raise ValueError(f"n_branches must be an integer >= 1, got {self.n_branches}")
        if not (math.isfinite(self.w_hat) and self.w_hat > 0.0):
            raise ValueError(f"w_hat must be finite and > 0, got {self.w_hat}")

    @property
    def rate_factor(self) -> float:
        """(1+kappa)*mu: the rate multiplier appearing in every exponent."""
        return (1.0 + self.params.kappa) * self.params.mu

    @property
    def bound_rate_factor(self) -> float:
        """rate_factor*(kappa*mu+1): the growth constant of the coefficient envelope."""
        return self.rate_factor * (self.params.kappa * self.params.mu + 1.0)

    @property
    def mean_sum(self) -> float:
        return self.n_branches * self.w_hat

    @property
    def sum_shape(self) -> float:
        """n_branches*mu: the shape parameter of the aggregated distribution."""
        return self.n_branches * self.params.mu

    @property
    def poisson_weight(self) -> float:
        """n_branches*kappa*mu: the damping constant of the tilde representation."""
        return self.n_branches * self.params.kappa * self.params.mu


class _FactorTable:
    """Convolution factors for one mpmath working precision, grown in place.

    Every helper quantity (powers, gamma products, the two sequences whose
    convolution forms the damped family's inner sum) is carried forward
    incrementally, so extending by one index costs O(index) multiplications
    and no gamma evaluations.  A deep fill is then O(eps^2) cheap flops
    rather than O(eps^2) transcendental calls.
    """

    def __init__(self, kind: str, params: FadingParams, dps: int):
        import mpmath as mp

        self.kind = kind
        self.dps = dps
        with mp.workdps(dps):
            kappa, mu = mp.mpf(params.kappa), mp.mpf(params.mu)
            self._km = kappa * mu
            self.facs = [mp.mpf(0)]  # index 0 never enters the convolution
            self.ifacs = [mp.mpf(0)]  # i * facs[i], for the weighted sum
            if kind == "tilde":
                self._pow = mp.mpf(1)  # km^i / i!
            else:
                self._mu = mu
                self._base = kappa * (1 + kappa) * mu * mu
                self._bp = mp.mpf(1)  # base^i
                self._gam = mp.gamma(mu + 1)  # Gamma(i+mu)
                self._lo = [mp.mpf(1)]  # (-km)^(-l) / l!
                self._hi = [1 / mp.gamma(mu)]  # 1 / (j! Gamma(j+mu))

    def extend_to(self, m: int) -> None:
        import mpmath as mp

        if len(self.facs) > m:
            return
        with mp.workdps(self.dps):
            if self.kind == "tilde":
                for i in range(len(self.facs), m + 1):
                    self._pow *= self._km / i
                    self.facs.append(self._pow)
                    self.ifacs.append(i * self._pow)
                return
            lo, hi = self._lo, self._hi
            for i in range(len(self.facs), m + 1):
                lo.append(lo[i - 1] / (-self._km * i))
                hi.append(hi[i - 1] / (i * (i + self._mu - 1)))
                self._bp *= self._base
                if i > 1:
                    self._gam *= i - 1 + self._mu
                f = self._gam * self._bp * mp.fdot(lo, hi[::-1])
                self.facs.append(f)
                self.ifacs.append(i * f)


class CoefficientCache:
    """Growable memo of one coefficient family for one SumSpec.

    Extension is serialized behind a lock (single writer); reads of already
    filled indices are lock-free.  eval_count counts recursion-body
    executions at the index's first computation, i.e. individual convolution
    terms; the twin drift monitor and precision replays do not count, they
    are verification overhead, not cache misses.
    """

    def __init__(self, kind: str, spec: SumSpec, eps_max: int = 4096):
        if kind not in ("standard", "tilde"):
            raise ValueError(f"kind must be 'standard' or 'tilde', got {kind!r}")
        if kind == "standard" and spec.params.kappa == 0.0:
            raise ValueError(
                "standard coefficients are singular at kappa=0; "
                "use the tilde family (Gamma limit)"
            )
        self.kind = kind
        self.spec = spec
        self.eps_max = eps_max
        self.eval_count = 0
        self.mp_start: int | None = None  # first index served by the backend
        self._count_hwm = 0  # highest index whose bodies were already counted
        self._signs = np.zeros(64, dtype=np.int8)
        self._logs = np.full(64, NEG_INF)
        self._signs[0] = 1
        self._logs[0] = 0.0
        self._filled = 1
        self._lock = threading.Lock()
        self.max_cancellation = 1.0
        # twin fill: same recursion with injected one-ulp perturbations
        self._twin_signs = np.zeros(64, dtype=np.int8)
        self._twin_logs = np.full(64, NEG_INF)
        self._twin_signs[0] = 1
        self._twin_logs[0] = 0.0
        # standard kind: per-index inner alternating sums, filled alongside
        self._inner_signs = np.zeros(64, dtype=np.int8)
        self._inner_logs = np.full(64, NEG_INF)
        self._inner_pert = np.zeros(64)
        # arbitrary-precision backend state (engaged by the monitors)
        self._mp_vals: list | None = None
        self._mp_shadow: list | None = None
        self._mp_mags: list | None = None
        self._mp_noise: list | None = None
        self._mp_fac: list | None = None
        self._mp_fac_sh: list | None = None
        self._mp_dps = _MP_GOAL_DIGITS + _MP_PAIR_GAP + 38
        self._mp_goal = _MP_GOAL_DIGITS

    def __len__(self) -> int:
        return self._filled

    @property
    def uses_extended_precision(self) -> bool:
        return self._mp_vals is not None

    def ensure(self, upto: int) -> None:
        """Fill indices 0..upto inclusive."""
        if upto < self._filled:
            return
        if upto > self.eps_max:
            raise ValueError(f"index {upto} exceeds eps_max={self.eps_max}")
        with self._lock:
            if upto < self._filled:
                return
            self._grow(upto + 1)
            if self._mp_vals is not None:
                self._fill_mp(upto)
            elif self.kind == "standard":
                self._fill_standard(upto)
            else:
                self._fill_tilde(upto)

    def values(self, upto: int) -> tuple[np.ndarray, np.ndarray]:
        """Read-only (signs, logs) views of indices 0..upto inclusive."""
        self.ensure(upto)
        return self._signs[: upto + 1], self._logs[: upto + 1]

    def signlog(self, m: int) -> SignLog:
        self.ensure(m)
        return SignLog(int(self._signs[m]), float(self._logs[m]))

    def mp_values(self, upto: int, rel_digits: int | None = None):
        """High-precision coefficient list 0..upto (engages the backend).

        rel_digits requests a minimum relative accuracy in decimal digits
        for the returned values; raising it discards and replays the
        backend's internal lists (exposed SignLog values are unaffected).
        """
        with self._lock:
            if rel_digits is not None and rel_digits > self._mp_goal:
                self._mp_goal = int(rel_digits)
                self._mp_dps = max(self._mp_dps, self._mp_goal + _MP_PAIR_GAP + 38)
                self._mp_vals = None  # force a verified replay at the new goal
            self._grow(upto + 1)
            self._fill_mp(upto)
        return self._mp_vals[: upto + 1]

    def _grow(self, need: int) -> None:
        if need <= self._signs.size:
            return
        new = max(need, 2 * self._signs.size)

        def pad_f(a, fill):
            return np.concatenate([a, np.full(new - a.size, fill)])

        self._signs = pad_f(self._signs, 0).astype(np.int8)
        self._logs = pad_f(self._logs, NEG_INF)
        self._twin_signs = pad_f(self._twin_signs, 0).astype(np.int8)
        self._twin_logs = pad_f(self._twin_logs, NEG_INF)
        self._inner_signs = pad_f(self._inner_signs, 0).astype(np.int8)
        self._inner_logs = pad_f(self._inner_logs, NEG_INF)
        self._inner_pert = pad_f(self._inner_pert, 0.0)

    def _count_index(self, m: int) -> None:
        if m > self._count_hwm:
            self.eval_count += m
            self._count_hwm = m

    # -- double-precision fills ------------------------------------------------

    def _twin_diverged(self, m: int) -> bool:
        """Has the twin fill drifted past the trigger at index m?

        The comparison floor scales with the spacing of the log values: the
        log representation itself only defines the value to that resolution.
        """
        s, st = self._signs[m], self._twin_signs[m]
        if s == 0 and st == 0:
            return False
        if s != st:
            return True
        main, twin = float(self._logs[m]), float(self._twin_logs[m])
        floor = 8.0 * _PERT_ULPS * math.ulp(max(abs(main), 1.0))
        return abs(main - twin) > max(DRIFT_TRIGGER, floor)

    def _fill_tilde(self, upto: int) -> None:
        p = self.spec.params
        n = self.spec.n_branches
        log_km = math.log(p.kappa * p.mu) if p.kappa > 0.0 else NEG_INF
        for m in range(self._filled, upto + 1):
            i = np.arange(1.0, m + 1.0)
            coef = (n + 1) * i - m
            with np.errstate(divide="ignore"):
                ln_w = np.log(np.abs(coef)) + i * log_km - _sps.gammaln(i + 1.0)
            w_signs = np.sign(coef).astype(np.int8)
            self._count_index(m)
            sign, log_mag, cancel = signed_reduce(
                w_signs * self._signs[m - 1 :: -1][: m], ln_w + self._logs[m - 1 :: -1][: m]
            )
            self.max_cancellation = max(self.max_cancellation, cancel)
            self._signs[m] = sign
            self._logs[m] = log_mag - math.log(m) if sign != 0 else NEG_INF
            t_sign, t_log, _ = signed_reduce(
                w_signs * self._twin_signs[m - 1 :: -1][: m],
                ln_w + self._twin_logs[m - 1 :: -1][: m],
            )
            self._twin_signs[m] = t_sign
            t_log = t_log - math.log(m)
            self._twin_logs[m] = t_log + _pert(m, t_log) if t_sign != 0 else NEG_INF
            # true tilde values are nonnegative: a negative result is itself
            # proof of contamination
            if (
                cancel > CANCEL_RESCUE_RATIO
                or sign < 0
                or (sign == 0 and p.kappa > 0.0)
                or self._twin_diverged(m)
            ):
                self._signs[m] = 0
                self._logs[m] = NEG_INF
                self._filled = m  # index m and later come from the backend
                self._fill_mp(upto)
                return
            self._filled = m + 1

    def _fill_standard(self, upto: int) -> None:
        p = self.spec.params
        for i in range(self._filled, upto + 1):
            # inner alternating sum paired with Gamma(i+mu); index 0 unused
            s, lg, cancel = self._inner_sum(i)
            self.max_cancellation = max(self.max_cancellation, cancel)
            if cancel > CANCEL_RESCUE_RATIO:
                self._fill_mp(upto)
                return
            lg = lg + math.lgamma(i + p.mu)
            self._inner_signs[i] = s
            self._inner_logs[i] = lg
            # the twin sees the inner value perturbed by its own error scale:
            # the larger of the inner sum's amplified rounding and the log spacing
            self._inner_pert[i] = _pert_sign(2 * i + 1) * max(
                _PERT_ULPS * 2.0**-52 * max(cancel, 1.0), _PERT_ULPS * math.ulp(abs(lg))
            )
        n = self.spec.n_branches
        for m in range(self._filled, upto + 1):
            i = np.arange(1, m + 1)
            coef = (n + 1) * i.astype(float) - m
            with np.errstate(divide="ignore"):
                ln_w = np.log(np.abs(coef)) + self._inner_logs[1 : m + 1]
            w_signs = np.sign(coef).astype(np.int8) * self._inner_signs[1 : m + 1]
            self._count_index(m)
            sign, log_mag, cancel = signed_reduce(
                w_signs * self._signs[m - 1 :: -1][: m], ln_w + self._logs[m - 1 :: -1][: m]
            )
            self.max_cancellation = max(self.max_cancellation, cancel)
            self._signs[m] = sign
            self._logs[m] = log_mag - math.log(m) if sign != 0 else NEG_INF
            t_sign, t_log, _ = signed_reduce(
                w_signs * self._twin_signs[m - 1 :: -1][: m],
                ln_w + self._inner_pert[1 : m + 1] + self._twin_logs[m - 1 :: -1][: m],
            )
            self._twin_signs[m] = t_sign
            t_log = t_log - math.log(m)
            self._twin_logs[m] = t_log + _pert(m, t_log) if t_sign != 0 else NEG_INF
            if cancel > CANCEL_RESCUE_RATIO or self._twin_diverged(m):
                self._signs[m] = 0
                self._logs[m] = NEG_INF
                self._filled = m
                self._fill_mp(upto)
                return
            self._filled = m + 1

    def _inner_sum(self, i: int) -> tuple[int, float, float]:
        """Alternating l-sum scaled so the i-th convolution factor is
        sign*exp(log)*Gamma(i+mu): sum_l (-km)^(-l) (k(1+k)mu^2)^i / (l!(i-l)!Gamma(i-l+mu))."""
        p = self.spec.params
        ell = np.arange(0.0, i + 1.0)
        log_km = math.log(p.kappa * p.mu)
        log_base = math.log(p.kappa * (1.0 + p.kappa) * p.mu * p.mu)
        logs = (
            i * log_base
            - ell * log_km
            - _sps.gammaln(ell + 1.0)
            - _sps.gammaln(i - ell + 1.0)
            - _sps.gammaln(i - ell + p.mu)
        )
        signs = np.where(ell.astype(np.int64) % 2 == 0, 1, -1).astype(np.int8)
        return signed_reduce(signs, logs)

    # -- high-precision backend -------------------------------------------------
    #
    # Replays the recursion from m=1 in mpmath, in parallel at two precisions
    # _MP_PAIR_GAP digits apart.  The pair's relative drift measures the
    # realized error at the lower precision; whenever it threatens the accuracy
    # goal, the working precision is raised and both runs replay.  Only indices
    # at or beyond the trigger point are exposed through the SignLog arrays, so
    # previously returned values never change.

    def _mp_step(self, vals: list, table: "_FactorTable", m: int):
        import mpmath as mp

        n = self.spec.n_branches
        table.extend_to(m)
        with mp.workdps(table.dps):
            # sum_i ((n+1)i - m) facs[i] vals[m-i], split so fdot can run it
            rv = vals[m - 1 :: -1]
            s0 = mp.fdot(table.facs[1 : m + 1], rv)
            s1 = mp.fdot(table.ifacs[1 : m + 1], rv)
            return ((n + 1) * s1 - m * s0) / m

    def _mp_replay(self, upto: int) -> None:
        import mpmath as mp

        p = self.spec.params
        self._mp_vals = [mp.mpf(1)]
        self._mp_shadow = [mp.mpf(1)]
        self._mp_fac = _FactorTable(self.kind, p, self._mp_dps)
        self._mp_fac_sh = _FactorTable(self.kind, p, self._mp_dps - _MP_PAIR_GAP)
        for m in range(1, upto + 1):
            self._mp_vals.append(self._mp_step(self._mp_vals, self._mp_fac, m))
            self._mp_shadow.append(self._mp_step(self._mp_shadow, self._mp_fac_sh, m))

    def _mp_pair_ok(self, v, v_sh) -> bool:
        import mpmath as mp

        with mp.workdps(self._mp_dps):
            if v == 0 and v_sh == 0:
                return True
            if v == 0 or v_sh == 0:
                return False
            return abs(v - v_sh) / abs(v) <= mp.mpf(10) ** (_MP_PAIR_GAP - self._mp_goal)

    @staticmethod
    def _tracks_noise_floor(history: list[tuple[float, float, float]]) -> bool:
        """True when both step results fall in lockstep with the precision.

        A coefficient whose true value is exactly zero (kappa = 1 makes
        index 1 vanish identically) leaves only cancellation residue, so the
        relative pair check can never succeed and escalation would loop
        forever.  A residue is recognizable by its scaling: raising the
        working precision by d bits pushes it down by about d bits, while
        any genuinely nonzero value stops shrinking at its true magnitude.
        Two consecutive full-scale drops certify a zero; the committed
        absolute error is below the noise of every neighboring value.
        """
        if len(history) < 3:
            return False
        (b0, v0, s0), (b1, v1, s1), (b2, v2, s2) = history[-3:]
        for prev, cur, need in ((v0, v1, b1 - b0), (v1, v2, b2 - b1),
                                (s0, s1, b1 - b0), (s1, s2, b2 - b1)):
            if cur == -math.inf:
                continue  # landed on an exact zero: below any floor
            if not (prev - cur >= 0.8 * need):
                return False
        return True

    def _fill_mp(self, upto: int) -> None:
        import mpmath as mp

        if self.mp_start is None:
            self.mp_start = self._filled
        if self._mp_vals is None:
            self._mp_replay(0)
        for m in range(len(self._mp_vals), upto + 1):
            history: list[tuple[float, float, float]] = []
            while True:
                v = self._mp_step(self._mp_vals, self._mp_fac, m)
                v_sh = self._mp_step(self._mp_shadow, self._mp_fac_sh, m)
                if self._mp_pair_ok(v, v_sh):
                    break
                history.append((
                    _BITS_PER_DIGIT * self._mp_dps,
                    float(mp.mag(v)) if v != 0 else -math.inf,
                    float(mp.mag(v_sh)) if v_sh != 0 else -math.inf,
                ))
                if self._tracks_noise_floor(history):
                    v = v_sh = mp.mpf(0)
                    break
                self._mp_dps = int(1.4 * self._mp_dps) + 20
                self._mp_replay(m - 1)
            self._mp_vals.append(v)
            self._mp_shadow.append(v_sh)
            self._count_index(m)
        with mp.workdps(self._mp_dps):
            for m in range(self._filled, upto + 1):
                v = self._mp_vals[m]
                if v == 0:
                    self._signs[m], self._logs[m] = 0, NEG_INF
                else:
                    self._signs[m] = 1 if v > 0 else -1
                    self._logs[m] = float(mp.log(abs(v)))
        self._filled = max(self._filled, upto + 1)


_registry: dict[tuple, CoefficientCache] = {}
_registry_lock = threading.Lock()


def get_cache(spec: SumSpec, kind: str, eps_max: int = 4096) -> CoefficientCache:
    """Shared cache for (kind, kappa, mu, n_branches); w_hat plays no role."""
    key = (kind, spec.params.kappa, spec.params.mu, spec.n_branches)
    with _registry_lock:
        cache = _registry.get(key)
        if cache is None or cache.eps_max < eps_max:
            cache = CoefficientCache(kind, spec, eps_max=eps_max)
            _registry[key] = cache
        return cache


def _checked(value: SignLog) -> SignLog:
    if value.sign != 0 and value.log_mag > LOG_MAG_CAP:
        raise CoefficientOverflowError(
            f"coefficient log magnitude {value.log_mag:.1f} exceeds cap {LOG_MAG_CAP:.1f}; "
            "switch to the damped (tilde) representation"
        )
    return value


def k_coeff(cache: CoefficientCache, m: int) -> SignLog:
    """m-th standard-family coefficient (requires kappa > 0)."""
    if cache.kind != "standard":
        raise ValueError("k_coeff requires a 'standard' cache")
    if m < 0:
        raise ValueError("m must be >= 0")
    return _checked(cache.signlog(m))


def tilde_k_coeff(cache: CoefficientCache, m: int) -> SignLog:
    """m-th tilde-family coefficient (nonnegative for all valid parameters)."""
    if cache.kind != "tilde":
        raise ValueError("tilde_k_coeff requires a 'tilde' cache")
    if m < 0:
        raise ValueError("m must be >= 0")
    return _checked(cache.signlog(m))


def reset_instrumentation(cache: CoefficientCache) -> None:
    """Zero eval_count; memoized values are retained."""
    cache.eval_count = 0


def coeff_envelope_log(spec: SumSpec, m: int) -> float:
    """log of a proven pointwise envelope on |standard coefficient m| / rate_factor^m.

    From the generalized-Laguerre closed form of the standard family and the
    classical |L_m^(a)(x)| <= binom(m+a, m) e^(x/2) bound (a >= 0), extended
    to -1 < a < 0 where the bound is 2 e^(x/2).  Valid for every parameter
    choice, unlike the published series envelope.
    """
    nmu = spec.sum_shape
    log_binom = math.lgamma(m + nmu) - math.lgamma(m + 1.0) - math.lgamma(nmu)
    return max(log_binom, 0.0) + math.log(2.0) + 0.5 * spec.poisson_weight
