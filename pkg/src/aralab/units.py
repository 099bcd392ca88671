"""Small RF unit helpers shared by the link models."""

from __future__ import annotations

import math

__all__ = [
    "db_to_linear",
    "linear_to_db",
    "watts_to_dbm",
    "dbm_to_watts",
    "thermal_noise_dbm",
    "fspl_db",
]

# Thermal noise density at 290 K, dBm/Hz.
NOISE_DENSITY_DBM_HZ = -174.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        return -math.inf
    return 10.0 * math.log10(x)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        return -math.inf
    return 10.0 * math.log10(watts * 1e3)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1e3


def thermal_noise_dbm(bandwidth_hz: float, noise_figure_db: float = 0.0) -> float:
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be positive")
    return NOISE_DENSITY_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


def fspl_db(freq_hz: float, distance_m: float) -> float:
    """Free-space path loss; the 92.45 constant takes GHz and km."""
    if freq_hz <= 0 or distance_m <= 0:
        raise ValueError("frequency and distance must be positive")
    return 92.45 + 20.0 * math.log10((freq_hz / 1e9) * (distance_m / 1e3))
