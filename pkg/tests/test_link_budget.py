"""Link budget to per-branch mean SNR conversion tests.

Frozen values computed independently with mpmath (40 digits) from the
free-space reference gain (c/(4 pi fc))^2, the -174 dBm/Hz thermal floor,
and plain dBm/watt conversions.
"""

import warnings

import pytest

from kappamu import (
    FadingParams,
    LinkBudget,
    effective_spec,
    noise_power_dbm,
    w_hat_from_budget,
)
from kappamu.link_budget import SPEED_OF_LIGHT, ApproximationWarning

BASE = LinkBudget(pt_dbm=23.0, fc_hz=140e9, distance_m=200.0)


def _clone(**kw):
    merged = dict(
        pt_dbm=BASE.pt_dbm,
        fc_hz=BASE.fc_hz,
        distance_m=BASE.distance_m,
        path_loss_exp=BASE.path_loss_exp,
        noise_figure_db=BASE.noise_figure_db,
        bandwidth_fraction=BASE.bandwidth_fraction,
        alpha=BASE.alpha,
    )
    merged.update(kw)
    return LinkBudget(**merged)


class TestNoise:
    def test_frozen_value(self):
        # -174 + 10 log10(0.005 * 140 GHz) + 6
        assert noise_power_dbm(BASE) == pytest.approx(-79.5490195998574316929, rel=1e-14)

    def test_bandwidth_property(self):
        assert BASE.bandwidth_hz == pytest.approx(7e8, rel=1e-15)

    def test_figure_is_additive(self):
        quiet = _clone(noise_figure_db=0.0)
        assert noise_power_dbm(BASE) - noise_power_dbm(quiet) == pytest.approx(6.0, abs=1e-12)


class TestWHat:
    def test_frozen_value(self):
        assert w_hat_from_budget(BASE) == pytest.approx(0.0130559228507990186953, rel=1e-12)

    def test_reference_gain_isolated(self):
        # transmit power equal to the noise floor at 1 m leaves only the
        # free-space reference gain
        b = _clone(distance_m=1.0)
        b = _clone(pt_dbm=noise_power_dbm(b), distance_m=1.0)
        assert w_hat_from_budget(b) == pytest.approx(2.90379268221604615828e-8, rel=1e-13)
        assert SPEED_OF_LIGHT == 299792458.0

    def test_inverse_square_distance(self):
        r = w_hat_from_budget(_clone(distance_m=200.0)) / w_hat_from_budget(
            _clone(distance_m=400.0)
        )
        assert r == pytest.approx(4.0, rel=1e-13)

    def test_inverse_cube_carrier(self):
        # gain gives fc^-2, proportional bandwidth gives another fc^-1
        r = w_hat_from_budget(_clone(fc_hz=140e9)) / w_hat_from_budget(_clone(fc_hz=280e9))
        assert r == pytest.approx(8.0, rel=1e-13)

    def test_transmit_power_linear(self):
        r = w_hat_from_budget(_clone(pt_dbm=26.0)) / w_hat_from_budget(BASE)
        assert r == pytest.approx(10.0 ** 0.3, rel=1e-13)

    def test_path_loss_exponent(self):
        r = w_hat_from_budget(BASE) / w_hat_from_budget(_clone(path_loss_exp=2.5))
        assert r == pytest.approx(200.0 ** 0.5, rel=1e-12)


class TestEffectiveSpec:
    PARAMS = FadingParams(1.5, 0.5)

    def test_perfect_estimation_identity(self):
        spec = effective_spec(BASE, self.PARAMS, 64)
        assert spec.w_hat == w_hat_from_budget(BASE)
        assert spec.n_branches == 64
        assert spec.params == self.PARAMS

    def test_estimation_penalty_large_array(self):
        noisy = _clone(alpha=0.4)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            spec = effective_spec(noisy, self.PARAMS, 512)
        assert spec.w_hat == pytest.approx(0.84 * w_hat_from_budget(BASE), rel=1e-14)

    def test_small_array_warns(self):
        noisy = _clone(alpha=0.4)
        with pytest.warns(ApproximationWarning):
            effective_spec(noisy, self.PARAMS, 8)

    def test_uninformative_estimate_rejected(self):
        # alpha = 1 zeroes the mean SNR, which no spec admits
        dead = _clone(alpha=1.0)
        with pytest.raises(ValueError):
            effective_spec(dead, self.PARAMS, 64)

    def test_branch_count_validation(self):
        with pytest.raises(ValueError):
            effective_spec(BASE, self.PARAMS, 0)


class TestValidation:
    def test_field_checks(self):
        with pytest.raises(ValueError):
            _clone(fc_hz=0.0)
        with pytest.raises(ValueError):
            _clone(distance_m=-5.0)
        with pytest.raises(ValueError):
            _clone(bandwidth_fraction=0.0)
        with pytest.raises(ValueError):
            _clone(alpha=1.5)

    def test_negative_transmit_power_is_legal(self):
        assert w_hat_from_budget(_clone(pt_dbm=-10.0)) > 0.0
