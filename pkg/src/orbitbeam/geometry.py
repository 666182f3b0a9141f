"""Flat-ground geometry and link budget for a nadir-pointing GEO satellite.

Internal units are SI with linear gains; dB only appears in config handling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

BOLTZMANN = 1.3807e-23
LIGHT_SPEED = 299_792_458.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Link budget parameters.

    ``p0_watt`` has no published default and must always be given.
    """

    p0_watt: float
    altitude_m: float = 35_786e3
    carrier_hz: float = 20e9
    bandwidth_hz: float = 500e6
    temp_k: float = 517.0
    boltzmann: float = BOLTZMANN
    g_tx_db: float = 52.0
    g_rx_db: float = 41.7
    light_speed: float = LIGHT_SPEED

    def __post_init__(self):
        for name in ("p0_watt", "altitude_m", "carrier_hz", "bandwidth_hz",
                     "temp_k", "boltzmann", "light_speed"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def antenna_gain(self) -> float:
        """Product of transmit and receive antenna gains (linear)."""
        return db_to_linear(self.g_tx_db + self.g_rx_db)


@dataclass(frozen=True)
class GroundPoint:
    x_m: float
    y_m: float

    @property
    def r(self) -> float:
        return math.hypot(self.x_m, self.y_m)


def slant_distance(p: GroundPoint, sys: SystemParams) -> float:
    return math.sqrt(p.x_m**2 + p.y_m**2 + sys.altitude_m**2)


def path_loss(d, sys: SystemParams):
    """Free-space gain (c / (4 pi f d))^2 for slant distance(s) d > 0."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ArgumentError("distance must be > 0")
    out = (sys.light_speed / (4.0 * math.pi * sys.carrier_hz * d)) ** 2
    return out if out.ndim else float(out)


def direction_cosines(p: GroundPoint, sys: SystemParams) -> tuple[float, float]:
    """(sin(theta) cos(phi), sin(theta) sin(phi)) of a ground point seen from the satellite."""
    d = slant_distance(p, sys)
    return p.x_m / d, p.y_m / d


def direction_cosines_xy(x, y, sys: SystemParams):
    """Elementwise :func:`direction_cosines` on arrays of ground coordinates."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.sqrt(x * x + y * y + sys.altitude_m**2)
    return x / d, y / d


def noise_normalized_power(sys: SystemParams) -> float:
    """P = P0 / (kappa T B)."""
    return sys.p0_watt / (sys.boltzmann * sys.temp_k * sys.bandwidth_hz)


def link_gain(r, sys: SystemParams):
    """P * Gtx * Grx * L(r): the SNR of a unit-gain, unit-fading user at ground radius r."""
    r = np.asarray(r, dtype=float)
    return noise_normalized_power(sys) * sys.antenna_gain * path_loss(
        np.sqrt(r * r + sys.altitude_m**2), sys
    )


def sin_to_ground_radius(s, altitude_m: float):
    """Ground radius whose off-nadir sine is s (inverse of r / sqrt(r^2 + H^2))."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(s < 1.0, altitude_m * s / np.sqrt(np.maximum(1.0 - s * s, 0.0)), np.inf)
    return out if out.ndim else float(out)
