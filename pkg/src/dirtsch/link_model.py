"""Radio, rate, power, energy and delay formulas.

All quantities are linear SI: watts, hertz, seconds, bits. ``dbm_to_watt``
converts configuration values given in dBm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np


class DomainError(ValueError):
    pass


# base of the logarithm inside the BER gap term
UPSILON_LOG_BASE = math.e


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt * 1000.0)


@dataclass(frozen=True)
class LinkModelParams:
    noise_density: float = dbm_to_watt(-174.0)  # W/Hz, thermal floor at 290 K
    bandwidth: float = 20e6
    path_loss_exponent: float = 3.0
    path_loss_constant: float = 1.0
    ber: float = 1e-5
    uplink_access_time: float = 0.0
    downlink_access_time: float = 0.0
    tx_power_dbm: float = 15.0
    rx_threshold_dbm: float = -81.0
    sensing_threshold_dbm: float = -91.0

    def __post_init__(self) -> None:
        if self.noise_density <= 0 or self.bandwidth <= 0:
            raise DomainError("noise density and bandwidth must be positive")
        if not 2.0 <= self.path_loss_exponent <= 6.0:
            raise DomainError(f"path-loss exponent {self.path_loss_exponent} outside [2, 6]")
        if self.path_loss_constant <= 0:
            raise DomainError("path-loss constant must be positive")
        if not 0.0 < self.ber < 0.2:
            raise DomainError(f"BER {self.ber} outside (0, 0.2)")
        if self.uplink_access_time < 0 or self.downlink_access_time < 0:
            raise DomainError("channel access times must be non-negative")

    @property
    def upsilon(self) -> float:
        return upsilon(self.ber)

    @property
    def tx_power(self) -> float:
        return dbm_to_watt(self.tx_power_dbm)


def upsilon(ber: float) -> float:
    """BER gap factor ``-1.5 / log(5 * BER)``."""
    if not 0.0 < ber < 0.2:
        raise DomainError(f"BER {ber} outside (0, 0.2)")
    return -1.5 / math.log(5.0 * ber, UPSILON_LOG_BASE)


def received_power(p_tx: float, omega: float, distance: float, alpha: float) -> float:
    if distance <= 0:
        raise DomainError(f"distance must be positive, got {distance}")
    if p_tx < 0:
        raise DomainError(f"transmit power must be non-negative, got {p_tx}")
    return p_tx * omega * distance ** (-alpha)


def snr(p_rx: float, fading_power: float, noise_density: float, bandwidth: float) -> float:
    if noise_density <= 0 or bandwidth <= 0:
        raise DomainError("noise density and bandwidth must be positive")
    return p_rx * fading_power / (noise_density * bandwidth)


def rate(bandwidth: float, ups: float, gamma: float) -> float:
    """Achievable rate ``W log2(1 + upsilon * gamma)`` in bit/s."""
    if gamma < 0:
        raise DomainError(f"SNR must be non-negative, got {gamma}")
    return bandwidth * math.log2(1.0 + ups * gamma)


def channel_gain(ups: float, omega: float, distance: float, alpha: float,
                 fading_power: float) -> float:
    if distance <= 0:
        raise DomainError(f"distance must be positive, got {distance}")
    return ups * omega * distance ** (-alpha) * fading_power


def required_tx_power(r: float, bandwidth: float, noise_density: float, gain: float) -> float:
    """Transmit power needed to sustain rate ``r`` over a link of gain ``gain``."""
    if gain <= 0:
        raise DomainError(f"channel gain must be positive, got {gain}")
    if bandwidth <= 0 or r < 0:
        raise DomainError("bandwidth must be positive and rate non-negative")
    return noise_density * bandwidth / gain * math.expm1(r / bandwidth * math.log(2.0))


def tx_energy(p_tx: float, bits: float, r: float) -> float:
    if bits == 0:
        return 0.0
    if r <= 0:
        raise DomainError("rate must be positive to send a non-empty payload")
    return p_tx * bits / r


def max_link_delay(backlog_bits: Mapping[int, float], rates: Mapping[int, float],
                   access_time: float) -> float:
    """``max_i(|B_i| / r_i + access_time)`` over the nodes in ``backlog_bits``.

    Serves both the uplink form (upload rates) and the downlink form
    (download rates). An empty mapping gives 0.
    """
    worst = 0.0
    for node, bits in backlog_bits.items():
        r = rates.get(node, 0.0)
        if r <= 0:
            if bits > 0:
                raise DomainError(f"node {node} has {bits} bits queued but rate {r}")
            delay = access_time
        else:
            delay = bits / r + access_time
        worst = max(worst, delay)
    return worst


def max_uplink_delay(backlog_bits: Mapping[int, float], up_rates: Mapping[int, float],
                     params: LinkModelParams = LinkModelParams()) -> float:
    return max_link_delay(backlog_bits, up_rates, params.uplink_access_time)


def max_downlink_delay(backlog_bits: Mapping[int, float], down_rates: Mapping[int, float],
                       params: LinkModelParams = LinkModelParams()) -> float:
    return max_link_delay(backlog_bits, down_rates, params.downlink_access_time)


def compute_cycles(cycles_per_unit: float, units: float) -> float:
    if cycles_per_unit < 0 or units < 0:
        raise DomainError("cycle density and data size must be non-negative")
    return cycles_per_unit * units


def sample_fading(rng: np.random.Generator, size: int | tuple[int, ...] | None = None):
    """Rayleigh amplitude, so the power ``|h|^2`` is unit-mean exponential."""
    return rng.exponential(1.0, size=size)


def link_tx_power(params: LinkModelParams, distance: float, fading_power: float,
                  r: float) -> float:
    """Power needed on a link of given length and fading to carry rate ``r``."""
    g = channel_gain(params.upsilon, params.path_loss_constant, distance,
                     params.path_loss_exponent, fading_power)
    return required_tx_power(r, params.bandwidth, params.noise_density, g)


def range_for_threshold(params: LinkModelParams, threshold_dbm: float) -> float:
    """Distance at which the nominal transmit power decays to ``threshold_dbm``."""
    ratio = params.tx_power * params.path_loss_constant / dbm_to_watt(threshold_dbm)
    return ratio ** (1.0 / params.path_loss_exponent)
