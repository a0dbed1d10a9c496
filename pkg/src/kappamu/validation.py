"""Self-contained oracle suites behind the `validate` subcommand.

Each suite re-derives a handful of ground truths (frozen extended-precision
constants, closed forms, quadrature, simulation) and checks the package
against them, reporting machine-readable pass/fail rows.  The pytest tree
covers far more ground; these suites are the quick field check.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.integrate as _sint

from . import coefficients as co
from . import distribution as di
from . import link_budget as lb
from . import metrics as me
from . import monte_carlo as mc
from . import special as sf

__all__ = ["SUITES", "run_validate"]


def _check(name: str, passed: bool, measured: float, bound: float) -> dict:
    return {
        "name": name,
        "pass": bool(passed),
        "measured": float(measured),
        "bound": float(bound),
    }


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


# frozen with mpmath at 40 significant digits
_LOG_I_HALF_2 = 0.71600242968946804298
_LOG_I_200_HALF = -1140.4905484713492891
_LOG_2F2_LARGE = 4.2191943796660415001
_2F1_PFAFF = 0.62634243462603087561
_PFQ_POLY = -2.4285714285714285714
_BEP_QUAD = 2.5183578955930612899e-4
_BEP_RAYLEIGH = 0.14644660940672624


def _suite_specfun(seed: int, trials: int) -> list[dict]:
    checks = []
    v = sf.bessel_i(0.5, 2.0)
    checks.append(_check("bessel_log_interior", abs(v.log_mag - _LOG_I_HALF_2) <= 1e-12,
                         abs(v.log_mag - _LOG_I_HALF_2), 1e-12))
    v = sf.bessel_i(200.0, 0.5)
    checks.append(_check("bessel_log_underflow_path", abs(v.log_mag - _LOG_I_200_HALF) <= 1e-9,
                         abs(v.log_mag - _LOG_I_200_HALF), 1e-9))
    v = sf.hyp_pfq((1.0, 250.5), (250.0, 282.5), 300.0)
    checks.append(_check("pfq_large_argument", abs(v.log_mag - _LOG_2F2_LARGE) <= 1e-10,
                         abs(v.log_mag - _LOG_2F2_LARGE), 1e-10))
    v = sf.hyp_2f1(0.75, 1.25, 2.5, -2.0)
    checks.append(_check("gauss_pfaff_region", _rel(v.value(), _2F1_PFAFF) <= 1e-13,
                         _rel(v.value(), _2F1_PFAFF), 1e-13))
    v = sf.hyp_pfq((-3.0, 2.0), (1.5,), 2.0)
    checks.append(_check("pfq_polynomial_cutoff", _rel(v.value(), _PFQ_POLY) <= 1e-14,
                         _rel(v.value(), _PFQ_POLY), 1e-14))
    logs = sf.hyp_2f1_batch(2.0, 2.5, 3.0, -95.7, 41)
    worst = 0.0
    for m in (0, 7, 23, 40):
        scalar = sf.hyp_2f1(2.0 + m, 2.5 + m, 3.0 + m, -95.7)
        worst = max(worst, abs(logs[m] - scalar.log_mag))
    checks.append(_check("gauss_batch_vs_scalar", worst <= 1e-11, worst, 1e-11))
    return checks


def _suite_coefficients(seed: int, trials: int) -> list[dict]:
    checks = []
    worst = 0.0
    for kap, mu, n in ((0.5, 0.8, 2), (1.5, 0.5, 64), (3.0, 2.0, 8)):
        spec = co.SumSpec(co.FadingParams(kap, mu), n, 1.0)
        cache = co.CoefficientCache("tilde", spec, eps_max=256)
        y = spec.poisson_weight
        for m in range(201):
            got = co.tilde_k_coeff(cache, m)
            want_log = m * math.log(y) - math.lgamma(m + 1.0)
            worst = max(worst, abs(got.log_mag - want_log))
    checks.append(_check("tilde_closed_form", worst <= 1e-10, worst, 1e-10))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(8):
        kap = float(rng.uniform(0.1, 3.0))
        mu = float(rng.uniform(0.3, 2.0))
        n = int(rng.integers(1, 32))
        spec = co.SumSpec(co.FadingParams(kap, mu), n, 1.0)
        cache = co.CoefficientCache("standard", spec, eps_max=16)
        want = n * (kap + 1.0) * mu * mu * (kap - 1.0)
        got = co.k_coeff(cache, 1).value()
        worst = max(worst, abs(got - want) / max(abs(want), 1e-30))
    checks.append(_check("standard_m1_identity", worst <= 1e-12, worst, 1e-12))

    spec = co.SumSpec(co.FadingParams(1.5, 0.5), 64, 1.0)
    cache = co.CoefficientCache("standard", spec, eps_max=256)
    cache.ensure(250)
    checks.append(_check("memoized_fill_count", cache.eval_count <= 250 * 251 - 1,
                         cache.eval_count, 250 * 251 - 1))

    worst = 0.0
    for kap, mu, n in ((1.5, 0.5, 4), (0.7, 1.3, 16)):
        spec = co.SumSpec(co.FadingParams(kap, mu), n, 1.0)
        cache = co.CoefficientCache("standard", spec, eps_max=64)
        for m in range(1, 61):
            env = (math.log(8.0 * n / 7.0) + math.lgamma(mu + m)
                   + m * math.log(spec.bound_rate_factor) - math.lgamma(m))
            worst = max(worst, co.k_coeff(cache, m).log_mag - env)
    checks.append(_check("published_envelope_sound_domain", worst <= 0.0, worst, 0.0))
    return checks


def _suite_distribution(seed: int, trials: int) -> list[dict]:
    checks = []
    kap, mu, what = 0.8, 0.6, 1.0
    spec2 = co.SumSpec(co.FadingParams(kap, mu), 2, what)
    worst = 0.0
    for w in (0.4, 1.0, 2.2, 4.0):
        conv, _ = _sint.quad(
            lambda x, w=w: di.oracle_pdf_single(kap, mu, what, x)
            * di.oracle_pdf_single(kap, mu, what, w - x),
            0.0, w, epsabs=1e-14, epsrel=1e-13, limit=200,
        )
        got = di.pdf(spec2, w, di.TruncationPolicy(target_tol=1e-14)).value
        worst = max(worst, abs(got - conv))
    checks.append(_check("aggregation_oracle_n2", worst <= 1e-12, worst, 1e-12))

    spec = co.SumSpec(co.FadingParams(1.5, 1.0), 64, 1.0)
    total, _ = _sint.quad(lambda w: di.pdf(spec, w).value, 0.0, 400.0,
                          epsabs=1e-11, epsrel=1e-11, limit=400)
    checks.append(_check("pdf_normalization", abs(total - 1.0) <= 1e-9, abs(total - 1.0), 1e-9))

    worst = 0.0
    sp = co.SumSpec(co.FadingParams(1.5, 0.5), 2, 1.0)
    pol = di.TruncationPolicy(target_tol=1e-14)
    for w in (0.05, 0.2, 0.5, 0.9):
        a = di.pdf(sp, w, pol, representation="standard").value
        b = di.pdf(sp, w, pol, representation="tilde").value
        worst = max(worst, abs(a - b))
    checks.append(_check("dual_representation_pdf", worst <= 1e-12, worst, 1e-12))

    s_val = 2.0
    quad_mgf, _ = _sint.quad(lambda w: math.exp(-s_val * w) * di.pdf(sp, w).value,
                             0.0, 60.0, epsabs=1e-12, epsrel=1e-12, limit=300)
    got = di.mgf(sp, s_val).value
    checks.append(_check("mgf_vs_quadrature", abs(got - quad_mgf) <= 1e-10,
                         abs(got - quad_mgf), 1e-10))

    edge = di.cdf(spec, 0.0).value
    checks.append(_check("cdf_zero_edge", edge == 0.0, edge, 0.0))
    return checks


def _suite_metrics(seed: int, trials: int) -> list[dict]:
    checks = []
    sp = co.SumSpec(co.FadingParams(1.5, 0.5), 4, 8.0)
    pol = di.TruncationPolicy(target_tol=1e-16)
    a1 = me.bep_series_a1(sp, me.BPSK, pol).value
    a2 = me.bep_series_a2(sp, me.BPSK, pol).value
    checks.append(_check("bep_a1_vs_quadrature_anchor", _rel(a1, _BEP_QUAD) <= 1e-9,
                         _rel(a1, _BEP_QUAD), 1e-9))
    checks.append(_check("bep_a2_vs_quadrature_anchor", _rel(a2, _BEP_QUAD) <= 1e-9,
                         _rel(a2, _BEP_QUAD), 1e-9))

    ray = me.bep_series_a2(co.SumSpec(co.FadingParams(1e-8, 1.0), 1, 1.0), me.BPSK).value
    checks.append(_check("bep_rayleigh_anchor", _rel(ray, _BEP_RAYLEIGH) <= 1e-7,
                         _rel(ray, _BEP_RAYLEIGH), 1e-7))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        kap = float(rng.uniform(0.2, 3.0))
        mu = float(rng.uniform(0.3, 2.0))
        n = int(rng.integers(2, 17))
        gate = float(rng.uniform(0.1, 0.7))
        spd = co.SumSpec(co.FadingParams(kap, mu), n, (1.0 + kap) * mu / gate)
        first = me.bep_series_a2(spd, me.BPSK).value
        tight = di.TruncationPolicy(target_tol=max(first * 1e-11, 1e-280), eps_max=4096)
        v1 = me.bep_series_a1(spd, me.BPSK, tight).value
        v2 = me.bep_series_a2(spd, me.BPSK, tight).value
        worst = max(worst, abs(v1 - v2) / v2)
    checks.append(_check("bep_dual_route_agreement", worst <= 1e-9, worst, 1e-9))

    spc = co.SumSpec(co.FadingParams(1.5, 0.5), 8, 5.0)
    worst = 0.0
    for th in (0.5, 1.0, 3.0):
        cov = me.coverage(spc, me.SnrThreshold(th)).value
        cdfv = di.cdf(spc, th).value
        worst = max(worst, abs(cov - (1.0 - cdfv)))
    checks.append(_check("coverage_is_cdf_complement", worst <= 1e-15, worst, 1e-15))

    spb = co.SumSpec(co.FadingParams(1.5, 0.5), 64, 50.0)
    b50 = me.bep_truncation_bound(spb, me.BPSK, 50)
    b100 = me.bep_truncation_bound(spb, me.BPSK, 100)
    b200 = me.bep_truncation_bound(spb, me.BPSK, 200)
    mono = b50 > b100 > b200
    checks.append(_check("bep_bound_monotone", mono, b200 / b100 if b100 else 0.0, 1.0))
    return checks


def _suite_mc(seed: int, trials: int) -> list[dict]:
    checks = []
    fp = co.FadingParams(1.5, 0.5)
    n_mean = max(trials, 1000)
    s = mc.sample_kappa_mu_power(fp, 2.0, mc.RngSpec(seed, 0), size=n_mean)
    dev = abs(float(s.mean()) - 2.0)
    lim = 4.0 * float(s.std()) / math.sqrt(n_mean)
    checks.append(_check("power_sample_mean", dev <= lim, dev, lim))

    n_ks = max(trials, 10_000)
    snr = mc.simulate_mrc_snr(fp, 8, 1.0, 0.0, mc.RngSpec(seed, 1), size=n_ks)
    _, pv = mc.ks_against_cdf(snr, co.SumSpec(fp, 8, 1.0))
    checks.append(_check("mrc_ks_vs_series_cdf", pv > 0.01, pv, 0.01))

    bud = lb.LinkBudget(pt_dbm=23.0, fc_hz=140e9, distance_m=200.0)
    n_bep = max(trials, 10_000)
    est = mc.estimate_bep(fp, 64, bud, me.BPSK, n_bep, mc.RngSpec(seed, 2), k_sigma=4.0)
    ana = me.bep(lb.effective_spec(bud, fp, 64), me.BPSK).value
    checks.append(_check("bep_mc_vs_analytic", abs(est.estimate - ana) <= est.half_width,
                         abs(est.estimate - ana), est.half_width))

    eb = mc.estimate_bep(fp, 16, bud, me.BPSK, n_bep, mc.RngSpec(seed, 3), method="bits")
    ee = mc.estimate_bep(fp, 16, bud, me.BPSK, n_bep, mc.RngSpec(seed, 3), method="erfc")
    gap = abs(eb.estimate - ee.estimate)
    checks.append(_check("bits_vs_conditional_erfc", gap <= eb.half_width + ee.half_width,
                         gap, eb.half_width + ee.half_width))

    n_csi = min(max(trials, 10_000), 200_000)
    snr_i = mc.simulate_mrc_snr(fp, 512, 1.0, 0.4, mc.RngSpec(seed, 4), size=n_csi)
    snr_p = mc.simulate_mrc_snr(fp, 512, 1.0, 0.0, mc.RngSpec(seed, 5), size=n_csi)
    ratio = float(snr_i.mean()) / ((1.0 - 0.16) * float(snr_p.mean()))
    checks.append(_check("imperfect_csi_mean_scaling", abs(ratio - 1.0) <= 0.02,
                         abs(ratio - 1.0), 0.02))

    r1 = mc.estimate_bep(fp, 8, bud, me.BPSK, 5000, mc.RngSpec(seed, 6)).estimate
    r2 = mc.estimate_bep(fp, 8, bud, me.BPSK, 5000, mc.RngSpec(seed, 6)).estimate
    checks.append(_check("stream_reproducibility", r1 == r2, abs(r1 - r2), 0.0))
    return checks


SUITES = {
    "specfun": _suite_specfun,
    "coefficients": _suite_coefficients,
    "distribution": _suite_distribution,
    "metrics": _suite_metrics,
    "mc": _suite_mc,
}


def run_validate(suite: str, seed: int = 42, trials: int = 200_000) -> dict:
    """Run one named suite; returns {suite, checks: [{name, pass, measured, bound}]}."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    checks = SUITES[suite](seed, trials)
    return {"suite": suite, "checks": checks}
