"""Sampler, simulator, and estimator tests.

Statistical assertions use fixed Philox streams, so every run sees the same
draws; tolerances are 3-4 sigma of the corresponding estimator, checked
against closed-form or library-analytic references.
"""

import math

import numpy as np
import pytest
from scipy import stats

from kappamu import (
    FadingParams,
    LinkBudget,
    RngSpec,
    SumSpec,
    estimate_bep,
    estimate_cdf,
    ks_against_cdf,
    sample_kappa_mu_power,
    simulate_mrc_snr,
)
from kappamu.metrics import BPSK

PARAMS = FadingParams(1.5, 0.5)
BASE = LinkBudget(pt_dbm=23.0, fc_hz=140e9, distance_m=200.0)


class TestRngSpec:
    def test_reproducible(self):
        a = sample_kappa_mu_power(PARAMS, 2.0, RngSpec(77), size=4096)
        b = sample_kappa_mu_power(PARAMS, 2.0, RngSpec(77), size=4096)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = sample_kappa_mu_power(PARAMS, 2.0, RngSpec(77, 0), size=64)
        b = sample_kappa_mu_power(PARAMS, 2.0, RngSpec(77, 1), size=64)
        assert not np.array_equal(a, b)
        assert RngSpec(77).stream(3) == RngSpec(77, 3)

    def test_seed_validation(self):
        with pytest.raises(ValueError):
            RngSpec(-1)
        with pytest.raises(ValueError):
            RngSpec(1 << 64)
        with pytest.raises(TypeError):
            sample_kappa_mu_power(PARAMS, 2.0, 12345)


class TestSampler:
    def test_mean_matches_w_hat(self):
        x = sample_kappa_mu_power(PARAMS, 2.0, RngSpec(1), size=200_000)
        sem = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - 2.0) <= 4.0 * sem

    def test_scalar_mode(self):
        v = sample_kappa_mu_power(PARAMS, 2.0, RngSpec(2))
        assert isinstance(v, float) and v > 0.0

    def test_kappa_zero_is_gamma(self):
        mu, w_hat = 1.3, 2.0
        x = sample_kappa_mu_power(FadingParams(0.0, mu), w_hat, RngSpec(3), size=50_000)
        stat, p = stats.kstest(x, stats.gamma(a=mu, scale=w_hat / mu).cdf)
        assert p > 0.01

    def test_matches_series_cdf(self):
        spec = SumSpec(PARAMS, 1, 1.0)
        x = sample_kappa_mu_power(PARAMS, 1.0, RngSpec(4), size=20_000)
        stat, p = ks_against_cdf(x, spec)
        assert p > 0.01

    def test_w_hat_validation(self):
        with pytest.raises(ValueError):
            sample_kappa_mu_power(PARAMS, 0.0, RngSpec(5))


class TestMrcSimulator:
    def test_perfect_csi_is_power_sum(self):
        # alpha = 0: SNR is the plain branch-power sum, KS-checked against
        # the aggregated analytic law
        spec = SumSpec(PARAMS, 4, 1.0)
        snr = simulate_mrc_snr(PARAMS, 4, 1.0, 0.0, RngSpec(6), size=20_000)
        stat, p = ks_against_cdf(snr, spec)
        assert p > 0.01

    def test_gaussian_cluster_channel_route(self):
        # integer mu builds branch gains from explicit Gaussian clusters;
        # a vanishing estimation error keeps the SNR on the analytic law
        params = FadingParams(1.5, 1.0)
        spec = SumSpec(params, 2, 1.0)
        snr = simulate_mrc_snr(params, 2, 1.0, 1e-9, RngSpec(7), size=20_000)
        stat, p = ks_against_cdf(snr, spec)
        assert p > 0.01

    def test_estimation_error_penalty(self):
        # large array: mean SNR scales by (1 - alpha^2) within 2%
        n, alpha = 512, 0.4
        snr = simulate_mrc_snr(PARAMS, n, 1.0, alpha, RngSpec(8), size=2_000)
        ratio = snr.mean() / n
        assert ratio == pytest.approx(1.0 - alpha**2, rel=0.02)

    def test_scalar_mode(self):
        v = simulate_mrc_snr(PARAMS, 4, 1.0, 0.0, RngSpec(9))
        assert isinstance(v, float) and v > 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_mrc_snr(PARAMS, 0, 1.0, 0.0, RngSpec(1))
        with pytest.raises(ValueError):
            simulate_mrc_snr(PARAMS, 4, 1.0, 1.0, RngSpec(1))
        with pytest.raises(ValueError):
            simulate_mrc_snr(PARAMS, 4, 1.0, -0.1, RngSpec(1))
        with pytest.raises(ValueError):
            simulate_mrc_snr(PARAMS, 4, 1.0, 0.0, RngSpec(1), size=0)


class TestEstimateCdf:
    def test_edges_and_interior(self):
        ci = estimate_cdf([1.0, 2.0, 3.0], 0.5)
        assert ci.estimate == 0.0
        assert estimate_cdf([1.0, 2.0, 3.0], 3.0).estimate == 1.0
        mid = estimate_cdf([1.0, 2.0, 3.0], 2.0)
        assert mid.estimate == pytest.approx(2.0 / 3.0)
        assert mid.half_width > 0.0 and mid.n_samples == 3

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            estimate_cdf([], 1.0)


class TestEstimateBep:
    def test_deep_fade_limit(self):
        # -60 dBm transmit power: mean SNR ~ 1e-10, conditional error ~ 1/2
        weak = LinkBudget(pt_dbm=-60.0, fc_hz=140e9, distance_m=200.0)
        ci = estimate_bep(PARAMS, 2, weak, BPSK, 4_000, RngSpec(10))
        assert ci.estimate == pytest.approx(0.5, abs=1e-3)

    def test_strong_signal_limit(self):
        strong = LinkBudget(pt_dbm=80.0, fc_hz=140e9, distance_m=200.0)
        ci = estimate_bep(PARAMS, 2, strong, BPSK, 4_000, RngSpec(11))
        assert ci.estimate < 1e-6

    def test_methods_agree(self):
        e1 = estimate_bep(PARAMS, 16, BASE, BPSK, 40_000, RngSpec(12, 0), method="erfc")
        e2 = estimate_bep(PARAMS, 16, BASE, BPSK, 40_000, RngSpec(12, 1), method="bits")
        assert abs(e1.estimate - e2.estimate) <= e1.half_width + e2.half_width
        assert e1.half_width < e2.half_width  # conditional averaging wins

    def test_reproducible(self):
        a = estimate_bep(PARAMS, 4, BASE, BPSK, 2_000, RngSpec(13))
        b = estimate_bep(PARAMS, 4, BASE, BPSK, 2_000, RngSpec(13))
        assert a == b

    def test_validation(self):
        with pytest.raises(ValueError):
            estimate_bep(PARAMS, 4, BASE, BPSK, 0, RngSpec(1))
        with pytest.raises(ValueError):
            estimate_bep(PARAMS, 4, BASE, BPSK, 100, RngSpec(1), method="magic")


class TestKsAgainstCdf:
    def test_detects_wrong_law(self):
        wrong = SumSpec(FadingParams(4.0, 2.0), 4, 1.0)
        snr = simulate_mrc_snr(PARAMS, 4, 1.0, 0.0, RngSpec(14), size=20_000)
        stat, p = ks_against_cdf(snr, wrong)
        assert p < 1e-6

    def test_validation(self):
        spec = SumSpec(PARAMS, 1, 1.0)
        with pytest.raises(ValueError):
            ks_against_cdf([1.0], spec)
        with pytest.raises(ValueError):
            ks_against_cdf([1.0, 2.0], spec, grid_points=8)
