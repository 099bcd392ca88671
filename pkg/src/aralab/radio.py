"""Access-network link model: path loss, SNR, capacity along routes.

A log-distance law with per-platform fitted reference loss and exponent
drives SNR; capacity is Shannon throughput clipped by the platform's
spectral-efficiency and capacity ceilings. Blockage enters as a flat
penalty (partial) or an outage (blocked); rain matters only above
6 GHz, where the x-haul rain law is reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .catalog import PlatformSpec
from .topology import RoutePoint
from .units import thermal_noise_dbm, watts_to_dbm
from .weather import CLEAR, Weather
from .xhaul import rain_attenuation_db

__all__ = [
    "RanConfigError",
    "RanLinkConfig",
    "REFERENCE_DISTANCE_M",
    "PARTIAL_BLOCKAGE_DB",
    "RAIN_MIN_FREQ_HZ",
    "deployed_config",
    "path_loss_db",
    "ran_snr_db",
    "ran_capacity",
    "capacity_profile",
]

# Log-distance reference.
REFERENCE_DISTANCE_M = 100.0
# Foliage/structure penalty when the path is partially obstructed.
PARTIAL_BLOCKAGE_DB = 20.0
# Below this carrier rain attenuation is negligible at lab path lengths.
RAIN_MIN_FREQ_HZ = 6e9
# Default demodulation floor when a platform does not calibrate one.
DEFAULT_DEMOD_THRESHOLD_DB = -5.0


class RanConfigError(ValueError):
    """Raised when a RAN link configuration violates the platform envelope."""


@dataclass(frozen=True)
class RanLinkConfig:
    bandwidth_hz: float
    tx_power_w: float
    carrier_hz: float | None = None  # defaults to the platform center

    def validated(self, platform: PlatformSpec) -> "RanLinkConfig":
        problems = []
        if self.bandwidth_hz <= 0:
            problems.append("bandwidth must be positive")
        elif self.bandwidth_hz > platform.max_bandwidth_hz:
            problems.append(
                f"bandwidth {self.bandwidth_hz:.3g} Hz exceeds platform max {platform.max_bandwidth_hz:.3g} Hz"
            )
        if self.tx_power_w <= 0:
            problems.append("tx power must be positive")
        elif self.tx_power_w > platform.max_tx_power_w * (1 + 1e-9):
            problems.append(
                f"tx power {self.tx_power_w} W exceeds platform max {platform.max_tx_power_w} W"
            )
        carrier = self.carrier(platform)
        if not platform.freq_low_hz <= carrier <= platform.freq_high_hz:
            problems.append("carrier outside platform frequency range")
        if problems:
            raise RanConfigError(f"platform {platform.id!r}: " + "; ".join(problems))
        return self

    def carrier(self, platform: PlatformSpec) -> float:
        return self.carrier_hz if self.carrier_hz is not None else platform.center_freq_hz


def deployed_config(platform: PlatformSpec) -> RanLinkConfig:
    """The as-deployed link configuration: the calibrated carrier
    bandwidth (falling back to the hardware maximum) at full power."""
    return RanLinkConfig(
        bandwidth_hz=platform.cal("default_bandwidth_hz", platform.max_bandwidth_hz),
        tx_power_w=platform.max_tx_power_w,
    )


def path_loss_db(platform: PlatformSpec, distance_m: float, blockage: str = "clear") -> float:
    """Net path loss (antenna gains folded in) at the given distance."""
    if distance_m <= 0:
        raise ValueError("distance_m must be positive")
    if blockage == "blocked":
        return math.inf
    ref = platform.cal("ref_loss_db")
    exponent = platform.cal("path_loss_exponent")
    loss = ref + 10.0 * exponent * math.log10(distance_m / REFERENCE_DISTANCE_M)
    if blockage == "partial":
        loss += PARTIAL_BLOCKAGE_DB
    elif blockage != "clear":
        raise ValueError(f"unknown blockage state {blockage!r}")
    return loss


def ran_snr_db(
    platform: PlatformSpec,
    config: RanLinkConfig,
    distance_m: float,
    weather: Weather = CLEAR,
    blockage: str = "clear",
) -> float:
    config.validated(platform)
    loss = path_loss_db(platform, distance_m, blockage)
    if math.isinf(loss):
        return -math.inf
    carrier = config.carrier(platform)
    if carrier >= RAIN_MIN_FREQ_HZ:
        loss += rain_attenuation_db(carrier, weather.rain_rate_mm_h, distance_m)
    noise = thermal_noise_dbm(config.bandwidth_hz, platform.cal("noise_figure_db", 7.0))
    return watts_to_dbm(config.tx_power_w) - loss - noise


def ran_capacity(
    platform: PlatformSpec,
    config: RanLinkConfig,
    distance_m: float,
    weather: Weather = CLEAR,
    blockage: str = "clear",
) -> float:
    """Downlink capacity in bit/s; zero below the demodulation floor."""
    snr_db = ran_snr_db(platform, config, distance_m, weather, blockage)
    threshold = platform.cal("demod_threshold_db", DEFAULT_DEMOD_THRESHOLD_DB)
    if snr_db < threshold:
        return 0.0
    efficiency = math.log2(1.0 + 10.0 ** (snr_db / 10.0))
    cap = platform.cal("spectral_efficiency_cap", 20.0)
    efficiency = min(efficiency, cap)
    return min(efficiency * config.bandwidth_hz, platform.max_capacity_bps)


def capacity_profile(
    platform: PlatformSpec,
    config: RanLinkConfig,
    route: Sequence[RoutePoint] | Iterable[tuple[float, str]],
    weather: Weather = CLEAR,
) -> list[tuple[float, float]]:
    """Capacity at each route point, honoring its blockage state.

    Accepts RoutePoint sequences or bare (distance, state) pairs.
    """
    out = []
    for point in route:
        if isinstance(point, RoutePoint):
            distance, state = point.distance_m, point.state
        else:
            distance, state = float(point[0]), str(point[1])
        if distance <= 0:
            # The origin sits on the mast; skip the singular point.
            continue
        out.append((distance, ran_capacity(platform, config, distance, weather, state)))
    return out
