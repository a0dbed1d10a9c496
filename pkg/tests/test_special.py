"""Sign-log arithmetic and hypergeometric kernels against mpmath references.

Expected constants were generated once with mpmath at 40 significant digits
(mp.hyper / mp.hyp2f1 / mp.besseli / mp.gammainc) and frozen here.
"""

import math

import numpy as np
import pytest

from kappamu.special import (
    ConvergenceError,
    DivergenceError,
    PoleError,
    SignLog,
    bessel_i,
    erfc,
    hyp_2f1,
    hyp_2f1_batch,
    hyp_pfq,
    ln_gamma,
    reg_gamma_p,
    reg_gamma_q,
    signed_reduce,
)


def test_signlog_roundtrip_and_product():
    x = SignLog.from_value(-3.25)
    assert x.sign == -1
    assert x.value() == pytest.approx(-3.25, rel=1e-15)
    y = SignLog.from_value(2.0)
    assert (x * y).value() == pytest.approx(-6.5, rel=1e-15)
    assert (x * SignLog.zero()).sign == 0
    assert SignLog.zero().value() == 0.0
    assert (-x).sign == 1


def test_signlog_overflow_saturates():
    big = SignLog(1, 5000.0)
    assert big.value() == math.inf
    assert (-big).value() == -math.inf


def test_signed_reduce_exact_small_case():
    # 10 - 9.5 - 0.5 + 0.25 = 0.25 with heavy cancellation
    vals = [10.0, -9.5, -0.5, 0.25]
    signs = np.sign(vals)
    logs = np.log(np.abs(vals))
    sign, log_mag, cancel = signed_reduce(signs, logs)
    assert sign == 1
    assert math.exp(log_mag) == pytest.approx(0.25, rel=1e-14)
    assert cancel == pytest.approx(40.0, rel=1e-12)


def test_signed_reduce_total_cancellation():
    sign, log_mag, cancel = signed_reduce(np.array([1, -1]), np.array([2.0, 2.0]))
    assert sign == 0
    assert log_mag == -math.inf
    assert cancel == math.inf


def test_signed_reduce_empty_and_zero_signs():
    sign, log_mag, cancel = signed_reduce(np.array([0, 0]), np.array([1.0, 2.0]))
    assert sign == 0 and log_mag == -math.inf and cancel == 1.0


def test_elementary_wrappers():
    assert ln_gamma(7.0) == pytest.approx(math.log(720.0), rel=1e-15)
    with pytest.raises(ValueError):
        ln_gamma(0.0)
    with pytest.raises(ValueError):
        ln_gamma(-2.5)
    # mpmath: Q(3.5, 2.0) and P(3.5, 2.0)
    assert reg_gamma_q(3.5, 2.0) == pytest.approx(0.77977740847571592093, rel=1e-14)
    assert reg_gamma_p(3.5, 2.0) == pytest.approx(0.22022259152428407907, rel=1e-14)
    assert reg_gamma_q(3.5, 2.0) + reg_gamma_p(3.5, 2.0) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        reg_gamma_q(-1.0, 2.0)
    with pytest.raises(ValueError):
        reg_gamma_q(1.0, -0.5)
    assert erfc(0.0) == 1.0


class TestBesselILog:
    def test_moderate_argument(self):
        # mpmath: log I_0.5(2)
        assert bessel_i(0.5, 2.0).value() == pytest.approx(
            math.exp(0.71600242968946804298), rel=1e-13
        )

    def test_large_argument_rescaled_path(self):
        # mpmath: log I_30(40) = 26.331621304164957995
        got = bessel_i(30.0, 40.0)
        assert got.sign == 1
        assert got.log_mag == pytest.approx(26.331621304164957995, rel=1e-13)

    def test_underflow_fallback_series(self):
        # ive(200, 0.5) underflows to 0 in double precision; mpmath gives
        # log I_200(0.5) = -1140.4905484713492891
        got = bessel_i(200.0, 0.5)
        assert got.sign == 1
        assert got.log_mag == pytest.approx(-1140.4905484713492891, rel=1e-13)

    def test_zero_argument(self):
        assert bessel_i(0.0, 0.0).value() == 1.0
        assert bessel_i(1.5, 0.0).sign == 0
        with pytest.raises(ValueError):
            bessel_i(-0.5, 0.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            bessel_i(-1.5, 1.0)
        with pytest.raises(ValueError):
            bessel_i(0.5, -1.0)


class TestHypPfq:
    def test_1f1(self):
        got = hyp_pfq((2.5,), (3.75,), 1.2)
        assert got.value() == pytest.approx(2.2980095630426214445, rel=1e-14)

    def test_2f2(self):
        got = hyp_pfq((1.0, 2.0), (3.0, 4.0), 0.7)
        assert got.value() == pytest.approx(1.1301629420139890144, rel=1e-14)

    def test_2f2_large_argument(self):
        # the shape the truncation diagnostics use: 2F2(1, 250.5; 250, 282.5; 300)
        got = hyp_pfq((1.0, 250.5), (250.0, 282.5), 300.0)
        assert got.value() == pytest.approx(67.978697202844738448, rel=1e-12)

    def test_polynomial_negative_upper(self):
        got = hyp_pfq((-3.0, 2.0), (1.5,), 2.0)
        assert got.value() == pytest.approx(-2.4285714285714285714, rel=1e-14)

    def test_zero_argument(self):
        assert hyp_pfq((1.0,), (2.0,), 0.0).value() == 1.0

    def test_divergence_p_gt_q_plus_1(self):
        with pytest.raises(DivergenceError):
            hyp_pfq((1.0, 2.0, 3.0), (4.0,), 0.5)

    def test_divergence_on_unit_disk_edge(self):
        with pytest.raises(DivergenceError):
            hyp_pfq((1.0, 2.0), (3.0,), 1.0)
        # but a terminating series is fine at any argument
        assert math.isfinite(hyp_pfq((-2.0, 5.0), (3.0,), 4.0).value())

    def test_pole(self):
        with pytest.raises(PoleError):
            hyp_pfq((1.0,), (-2.0,), 0.5)

    def test_term_budget(self):
        with pytest.raises(ConvergenceError):
            hyp_pfq((0.5, 1.25), (2.25,), 0.999999, max_terms=50)


class TestHyp2f1:
    def test_interior_positive(self):
        got = hyp_2f1(3.0, 0.5, 3.5, 0.9)
        assert got.value() == pytest.approx(2.3606894098156452093, rel=1e-13)

    def test_large_negative_argument_pfaff(self):
        got = hyp_2f1(0.5, 1.25, 2.25, -50.0)
        assert got.value() == pytest.approx(0.21951084585417778852, rel=1e-13)

    def test_divergence_and_pole(self):
        with pytest.raises(DivergenceError):
            hyp_2f1(1.0, 2.0, 3.0, 1.0)
        with pytest.raises(PoleError):
            hyp_2f1(1.0, 2.0, -3.0, 0.5)


class TestHyp2f1Batch:
    # shifted family 2F1(q+m, q+1/2+m; q+1+m; -r) with q=2, r=95.7;
    # mpmath logs at m = 0, 5, 40
    Q = 2.0
    R = 95.7
    EXPECTED = {0: -8.3064963494283882373, 5: -30.710889676015789017, 40: -190.17251982791087489}

    def test_against_mpmath(self):
        logs = hyp_2f1_batch(self.Q, self.Q + 0.5, self.Q + 1.0, -self.R, 41)
        for m, want in self.EXPECTED.items():
            assert logs[m] == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_matches_scalar_path(self):
        logs = hyp_2f1_batch(self.Q, self.Q + 0.5, self.Q + 1.0, -self.R, 8)
        for m in range(8):
            scalar = hyp_2f1(self.Q + m, self.Q + 0.5 + m, self.Q + 1.0 + m, -self.R)
            assert logs[m] == pytest.approx(scalar.log_mag, rel=1e-11, abs=1e-11)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            hyp_2f1_batch(2.0, 2.5, 3.5, -1.0, 4)  # c - a != 1
        with pytest.raises(ValueError):
            hyp_2f1_batch(2.0, 2.5, 3.0, 0.5, 4)  # z >= 0
