"""Coverage probability and bit-error-probability tests.

BEP anchors were computed by adaptive Gauss quadrature of
0.5*erfc(sqrt(g_b*w)) against the exact single-variate density with
aggregated parameters (mpmath, 40 digits), entirely outside the series
code paths.  The Rayleigh anchor is the textbook closed form
(1 - sqrt(g/(1+g)))/2 at g = 1.
"""

import math

import pytest

from kappamu import (
    DivergenceError,
    FadingParams,
    SnrThreshold,
    SumSpec,
    TruncationPolicy,
    bep,
    bep_asymptotic,
    bep_series_a1,
    bep_series_a2,
    bep_truncation_bound,
    cdf,
    coverage,
    coverage_asymptotic,
)
from kappamu.metrics import BFSK_MIN_CORRELATION, BFSK_ORTHOGONAL, BPSK, GateError, Modulation

SPEC48 = SumSpec(FadingParams(1.5, 0.5), 4, 8.0)

QUAD_BPSK = 2.5183578955930612899e-4  # independent quadrature anchor
QUAD_BFSK = 1.06338441065618168618e-3


class TestModulation:
    def test_constants(self):
        assert BPSK.g_b == 1.0
        assert BFSK_ORTHOGONAL.g_b == 0.5
        assert BFSK_MIN_CORRELATION.g_b == 0.715

    def test_from_name_accepts_hyphens(self):
        assert Modulation.from_name("bfsk-orthogonal") == BFSK_ORTHOGONAL
        assert Modulation.from_name("bpsk") is not None

    def test_rejects_unknown_and_mismatched(self):
        with pytest.raises(ValueError):
            Modulation.from_name("qam64")
        with pytest.raises(ValueError):
            Modulation("bpsk", 0.7)


class TestSnrThreshold:
    def test_from_db(self):
        assert SnrThreshold.from_db(0.0).gamma_th == 1.0
        assert SnrThreshold.from_db(5.0).gamma_th == pytest.approx(10 ** 0.5, rel=1e-15)
        assert SnrThreshold.from_db(-10.0).gamma_th == pytest.approx(0.1, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            SnrThreshold(0.0)
        with pytest.raises(ValueError):
            SnrThreshold(math.inf)


class TestCoverage:
    def test_complements_cdf(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 4, 2.0)
        th = SnrThreshold(1.3)
        c = coverage(spec, th)
        f = cdf(spec, 1.3)
        assert c.value == 1.0 - f.value
        assert c.terms_used == f.terms_used

    def test_threshold_extremes(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 4, 2.0)
        assert coverage(spec, SnrThreshold(1e-8)).value == pytest.approx(1.0, abs=1e-6)
        # far tail: the true value is astronomically small; whatever series
        # residue remains must be covered by the reported certificate
        far = coverage(spec, SnrThreshold(500.0))
        assert 0.0 <= far.value <= far.error_bound + 1e-15
        assert far.value < 1e-11

    def test_asymptotic_anchor(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 2, 100.0)
        want = 0.997210872998144627138
        assert coverage_asymptotic(spec, SnrThreshold(1.0)) == pytest.approx(want, rel=1e-12)

    def test_asymptotic_approaches_exact(self):
        th = SnrThreshold(1.0)
        for w_hat in (200.0, 800.0):
            spec = SumSpec(FadingParams(1.5, 0.5), 2, w_hat)
            exact = coverage(spec, th).value
            approx = coverage_asymptotic(spec, th)
            assert approx == pytest.approx(exact, rel=1e-2 * 200.0 / w_hat)


class TestBepAnchors:
    def test_both_routes_hit_quadrature(self):
        tp = TruncationPolicy(target_tol=1e-18, eps_start=64, eps_max=4096)
        a1 = bep_series_a1(SPEC48, BPSK, tp)
        a2 = bep_series_a2(SPEC48, BPSK, tp)
        assert a1.value == pytest.approx(QUAD_BPSK, rel=1e-11)
        assert a2.value == pytest.approx(QUAD_BPSK, rel=1e-11)

    def test_dispatcher_orthogonal_bfsk(self):
        tp = TruncationPolicy(target_tol=1e-18, eps_start=64, eps_max=4096)
        assert bep(SPEC48, BFSK_ORTHOGONAL, tp).value == pytest.approx(QUAD_BFSK, rel=1e-11)

    def test_rayleigh_closed_form(self):
        # kappa -> 0, mu = 1, single branch is Rayleigh; BPSK at unit mean SNR
        spec = SumSpec(FadingParams(1e-8, 1.0), 1, 1.0)
        want = 0.1464466094067262378  # (1 - sqrt(1/2)) / 2
        assert bep(spec, BPSK).value == pytest.approx(want, rel=1e-7)


class TestBepRouting:
    def test_tags_reflect_route(self):
        assert bep(SPEC48, BPSK).representation == "standard"
        weak = SumSpec(FadingParams(1.5, 0.5), 4, 1.0)  # ratio 1.25: past the gate
        assert bep(weak, BPSK).representation == "tilde"

    def test_margin_keeps_borderline_on_a2(self):
        # ratio 0.9615 is below 1 but above the 0.9 dispatch margin
        spec = SumSpec(FadingParams(1.5, 0.5), 4, 1.3)
        assert bep(spec, BPSK).representation == "tilde"

    def test_gate_error(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 4, 1.0)
        with pytest.raises(GateError):
            bep_series_a1(spec, BPSK)
        assert issubclass(GateError, ValueError)

    def test_gate_constant_is_the_rate_factor(self):
        # rate_factor = 1.25, bound constant 2.1875: a ratio of 1.25/1.6
        # sits between them, so the plain series must still converge and
        # agree with the always-convergent route
        spec = SumSpec(FadingParams(1.5, 0.5), 2, 1.6)
        tp = TruncationPolicy(target_tol=1e-16, eps_start=64, eps_max=4096)
        a1 = bep_series_a1(spec, BPSK, tp)
        a2 = bep_series_a2(spec, BPSK, tp)
        assert a1.representation == "standard"
        assert a1.value == pytest.approx(a2.value, rel=1e-10)


class TestBepBehavior:
    def test_range(self):
        for w_hat in (0.01, 0.1, 1.0, 30.0):
            v = bep(SumSpec(FadingParams(1.5, 0.5), 2, w_hat), BPSK).value
            assert 0.0 < v <= 0.5

    def test_extreme_low_power_refused(self):
        # mean SNR below -60 dB pushes the Gauss-factor argument so close to
        # its singular point that the summation cap is a better outcome than
        # an unverifiable value
        from kappamu import ConvergenceError

        with pytest.raises(ConvergenceError):
            bep(SumSpec(FadingParams(1.5, 0.5), 2, 1e-6), BPSK)

    def test_monotone_in_power(self):
        vals = [
            bep(SumSpec(FadingParams(1.5, 0.5), 2, w), BPSK).value for w in (0.5, 2.0, 8.0, 32.0)
        ]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_monotone_in_branches(self):
        # fixed per-branch mean power: more branches, fewer errors
        vals = [bep(SumSpec(FadingParams(1.5, 0.5), n, 4.0 * n), BPSK).value for n in (1, 2, 4)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_modulation_ordering(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 2, 6.0)
        p_bpsk = bep(spec, BPSK).value
        p_min = bep(spec, BFSK_MIN_CORRELATION).value
        p_orth = bep(spec, BFSK_ORTHOGONAL).value
        assert p_bpsk < p_min < p_orth


class TestBepAsymptotic:
    def test_frozen_anchor(self):
        spec = SumSpec(FadingParams(1e-8, 1.0), 2, 100.0)
        want = 1.8749999999999998125e-5
        assert bep_asymptotic(spec, BPSK) == pytest.approx(want, rel=1e-12)

    def test_log_slope_is_diversity_order(self):
        # local log-log slope of the exact BEP at high power
        spec_lo = SumSpec(FadingParams(1.5, 0.5), 2, 1.0e4)
        spec_hi = SumSpec(FadingParams(1.5, 0.5), 2, 2.0e4)
        tp = TruncationPolicy(target_tol=1e-20, eps_start=64, eps_max=4096)
        p_lo = bep(spec_lo, BPSK, tp).value
        p_hi = bep(spec_hi, BPSK, tp).value
        slope = (math.log(p_hi) - math.log(p_lo)) / math.log(2.0)
        assert slope == pytest.approx(-spec_lo.sum_shape, abs=1e-3)

    def test_ratio_approaches_one(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 2, 1000.0)
        exact = bep(spec, BPSK).value
        assert bep_asymptotic(spec, BPSK) == pytest.approx(exact, rel=5e-2)


class TestBepTruncationBound:
    def test_frozen_spot(self):
        assert bep_truncation_bound(SPEC48, BPSK, 40) == pytest.approx(
            6.23915953847949491827e-26, rel=1e-10
        )

    def test_monotone_in_depth(self):
        b40 = bep_truncation_bound(SPEC48, BPSK, 40)
        b80 = bep_truncation_bound(SPEC48, BPSK, 80)
        assert 0.0 < b80 < b40

    def test_covers_actual_remainder(self):
        tight = TruncationPolicy(target_tol=1e-24, eps_start=512, eps_max=4096)
        full = bep_series_a1(SPEC48, BPSK, tight).value
        loose = TruncationPolicy(target_tol=1e-8, eps_start=1, eps_max=64)
        part = bep_series_a1(SPEC48, BPSK, loose)
        assert part.terms_used < 64
        assert abs(full - part.value) <= bep_truncation_bound(SPEC48, BPSK, part.terms_used)

    def test_divergence_outside_unit_disc(self):
        spec = SumSpec(FadingParams(1.5, 0.5), 4, 2.0)  # envelope argument 1.09
        with pytest.raises(DivergenceError):
            bep_truncation_bound(spec, BPSK, 40)

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            bep_truncation_bound(SPEC48, BPSK, 0)
