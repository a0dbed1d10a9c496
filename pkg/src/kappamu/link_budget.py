"""Physical link parameters to per-branch mean SNR for sub-THz receivers.

Log-distance path loss with free-space reference gain, thermal-plus-figure
noise over a bandwidth proportional to carrier, channel-estimation accuracy
folded in as a mean-SNR scale factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .coefficients import FadingParams, SumSpec

__all__ = [
    "ApproximationWarning",
    "LinkBudget",
    "SPEED_OF_LIGHT",
    "effective_spec",
    "noise_power_dbm",
    "w_hat_from_budget",
]

SPEED_OF_LIGHT = 299792458.0  # m/s, exact

# below this branch count the (1 - alpha^2) mean-SNR scaling is a large-array
# approximation rather than an identity
_LARGE_ARRAY_FLOOR = 32


class ApproximationWarning(UserWarning):
    """Raised when a requested configuration leaves a formula's derivation regime."""


@dataclass(frozen=True)
class LinkBudget:
    """Transmit/propagation/noise description of a single link.

    Powers in dBm, carrier in Hz, distance in meters.  `alpha` is the
    channel-estimation accuracy: 0 means perfect knowledge at the receiver,
    1 means the estimate carries no information.
    """

    pt_dbm: float
    fc_hz: float
    distance_m: float
    path_loss_exp: float = 2.0
    noise_figure_db: float = 6.0
    bandwidth_fraction: float = 0.005
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.fc_hz > 0.0):
            raise ValueError(f"fc_hz must be > 0, got {self.fc_hz}")
        if not (self.distance_m > 0.0):
            raise ValueError(f"distance_m must be > 0, got {self.distance_m}")
        if not (self.bandwidth_fraction > 0.0):
            raise ValueError(f"bandwidth_fraction must be > 0, got {self.bandwidth_fraction}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_fraction * self.fc_hz


def noise_power_dbm(budget: LinkBudget) -> float:
    """Thermal noise floor plus receiver figure over the occupied bandwidth, dBm."""
    return -174.0 + 10.0 * math.log10(budget.bandwidth_hz) + budget.noise_figure_db


def _dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def w_hat_from_budget(budget: LinkBudget) -> float:
    """Per-branch mean SNR (linear) before any estimation-accuracy scaling."""
    pt_w = _dbm_to_watts(budget.pt_dbm)
    noise_w = _dbm_to_watts(noise_power_dbm(budget))
    ref_gain = (SPEED_OF_LIGHT / (4.0 * math.pi * budget.fc_hz)) ** 2
    return (pt_w / noise_w) * ref_gain * budget.distance_m ** (-budget.path_loss_exp)


def effective_spec(budget: LinkBudget, params: FadingParams, n: int) -> SumSpec:
    """Aggregate-sum spec whose per-branch mean folds in imperfect estimation.

    The (1 - alpha^2) mean-SNR scaling is exact only in the large-array
    regime; requesting it below n = 32 emits ApproximationWarning.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if budget.alpha > 0.0 and n < _LARGE_ARRAY_FLOOR:
        warnings.warn(
            f"(1 - alpha^2) SNR scaling is a large-array approximation; n={n} < "
            f"{_LARGE_ARRAY_FLOOR} may deviate noticeably",
            ApproximationWarning,
            stacklevel=2,
        )
    scale = 1.0 - budget.alpha**2
    return SumSpec(params, n, scale * w_hat_from_budget(budget))
