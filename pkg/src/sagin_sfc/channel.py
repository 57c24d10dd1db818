"""Point channel models for ground-UAV, line-of-sight aerial, and
satellite-ground links, plus the Shannon rate.

All functions are pure.  Distances are meters, powers watts, bandwidths
hertz.  The G2U carrier is in MHz so that ``4*pi*d*f_c/300`` is the usual
free-space argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN = 1.380649e-23

G2U_DB_BRACKET = "db_bracket"
G2U_LITERAL = "literal"
A2A_LINEAR = "linear"
A2A_SQUARED = "squared"


class ChannelDomainError(ValueError):
    """Geometry or parameters outside a channel formula's domain."""


def _require_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class G2UParams:
    tx_power_w: float
    noise_power_w: float
    eta_los_db: float
    eta_nlos_db: float
    alpha: float
    beta: float
    carrier_mhz: float
    bandwidth_hz: float

    def __post_init__(self):
        for name in ("tx_power_w", "noise_power_w", "alpha", "beta", "carrier_mhz", "bandwidth_hz"):
            _require_positive(f"g2u.{name}", getattr(self, name))


@dataclass(frozen=True)
class A2AParams:
    tx_power_w: float
    gain_tx: float
    gain_rx: float
    carrier_hz: float
    noise_temp_k: float
    bandwidth_hz: float
    boltzmann_j_per_k: float = BOLTZMANN
    speed_of_light_m_s: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("tx_power_w", "gain_tx", "gain_rx", "carrier_hz", "noise_temp_k",
                     "bandwidth_hz", "boltzmann_j_per_k", "speed_of_light_m_s"):
            _require_positive(f"a2a.{name}", getattr(self, name))


@dataclass(frozen=True)
class S2GParams:
    tx_power_w: float
    gain_tx: float
    gain_rx: float
    free_space_loss: float
    rain_attenuation: float
    noise_density_w_per_hz: float
    bandwidth_hz: float

    def __post_init__(self):
        for name in ("tx_power_w", "gain_tx", "gain_rx", "noise_density_w_per_hz", "bandwidth_hz"):
            _require_positive(f"s2g.{name}", getattr(self, name))
        for name in ("free_space_loss", "rain_attenuation"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"s2g.{name} must lie in (0, 1], got {v!r}")


@dataclass(frozen=True)
class ChannelParams:
    g2u: G2UParams
    a2a: A2AParams
    s2g: S2GParams
    g2u_model: str = G2U_DB_BRACKET
    a2a_law: str = A2A_LINEAR

    def __post_init__(self):
        if self.g2u_model not in (G2U_DB_BRACKET, G2U_LITERAL):
            raise ValueError(f"unknown g2u_model {self.g2u_model!r}")
        if self.a2a_law not in (A2A_LINEAR, A2A_SQUARED):
            raise ValueError(f"unknown a2a_law {self.a2a_law!r}")


def _distance(a, b):
    return math.dist(a, b)


def elevation_deg(tx_pos, rx_pos):
    """Elevation of the receiver seen from the transmitter, in degrees."""
    d = _distance(tx_pos, rx_pos)
    h = rx_pos[2] - tx_pos[2]
    if d <= 0:
        raise ChannelDomainError("zero distance between transmitter and receiver")
    if h < 0 or h > d * (1 + 1e-12):
        raise ChannelDomainError(f"height {h} outside [0, distance={d}]")
    return math.degrees(math.asin(min(h / d, 1.0)))


def g2u_fspl_db(distance_m, carrier_mhz, eta_nlos_db):
    """The ``A`` term: 20*log10(4*pi*d*f_c/300) + eta_NL."""
    if distance_m <= 0:
        raise ChannelDomainError("zero distance")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_mhz / 300.0) + eta_nlos_db


def g2u_los_db(elev_deg, p: G2UParams):
    """Sigmoid line-of-sight correction (eta_L - eta_NL) / (1 + a*exp(-b*(sigma - a)))."""
    return (p.eta_los_db - p.eta_nlos_db) / (1.0 + p.alpha * math.exp(-p.beta * (elev_deg - p.alpha)))


def g2u_bracket_db(p: G2UParams, tx_pos, rx_pos):
    d = _distance(tx_pos, rx_pos)
    sigma = elevation_deg(tx_pos, rx_pos)
    return g2u_los_db(sigma, p) + g2u_fspl_db(d, p.carrier_mhz, p.eta_nlos_db)


def snr_g2u(p: G2UParams, tx_pos, rx_pos, model=G2U_DB_BRACKET):
    """Linear SNR of a ground-UAV link.

    ``db_bracket`` treats the bracket as a path loss in dB and applies it as
    the linear gain ``10**(-L/10)``; ``literal`` multiplies P/N0 by the bracket
    value as printed.
    """
    bracket = g2u_bracket_db(p, tx_pos, rx_pos)
    if model == G2U_LITERAL:
        return p.tx_power_w / p.noise_power_w * bracket
    if model != G2U_DB_BRACKET:
        raise ValueError(f"unknown g2u model {model!r}")
    return p.tx_power_w / p.noise_power_w * 10.0 ** (-bracket / 10.0)


def snr_a2a(p: A2AParams, distance_m, law=A2A_LINEAR):
    if distance_m <= 0:
        raise ChannelDomainError("zero distance")
    noise = p.boltzmann_j_per_k * p.noise_temp_k * p.bandwidth_hz
    if law == A2A_SQUARED:
        fs = p.speed_of_light_m_s / (4.0 * math.pi * p.carrier_hz * distance_m)
        return p.tx_power_w * p.gain_tx * p.gain_rx * fs * fs / noise
    if law != A2A_LINEAR:
        raise ValueError(f"unknown a2a law {law!r}")
    return (p.tx_power_w * p.gain_tx * p.gain_rx * p.speed_of_light_m_s
            / (4.0 * math.pi * p.carrier_hz * distance_m * noise))


def snr_s2g(p: S2GParams):
    return (p.tx_power_w * p.gain_tx * p.gain_rx * p.free_space_loss * p.rain_attenuation
            / (p.noise_density_w_per_hz * p.bandwidth_hz))


def link_rate(snr, bandwidth_hz):
    """Shannon rate in bit/s."""
    if snr < 0:
        raise ValueError(f"snr must be >= 0, got {snr!r}")
    _require_positive("bandwidth", bandwidth_hz)
    return bandwidth_hz * math.log2(1.0 + snr)
