"""Site telemetry: weather feeds, power draw, spectrum occupancy.

The weather feed blends one regional process with per-site noise so
rain at neighboring sites is correlated but never identical. The power
model carries the measured per-subsystem baseline draw of a full base
station cabinet and its behavior when the main radio keys up. The
spectrum scanner produces the channel-by-slot occupancy raster used
for whitespace selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rng import RngStream
from .weather import Weather

__all__ = [
    "MeasurementRecord",
    "WeatherSeries",
    "weather_feed",
    "SUBSYSTEMS",
    "BASELINE_POWER_W",
    "BASELINE_CURRENT_A",
    "BASELINE_TOTAL_W",
    "BASELINE_TOTAL_A",
    "subsystem_share",
    "transmit_factor",
    "PowerBreakdown",
    "baseline_breakdown",
    "PowerTimeline",
    "power_series",
    "SpectrumScan",
    "spectrum_scan",
]


@dataclass(frozen=True)
class MeasurementRecord:
    t_s: float
    site: str
    kind: str
    value: float
    unit: str


# ---------------------------------------------------------------------------
# Weather feed

@dataclass
class WeatherSeries:
    t_s: np.ndarray
    rain_mm_h: dict[str, np.ndarray]
    temperature_c: dict[str, np.ndarray]
    wind_m_s: dict[str, np.ndarray]

    def weather_at(self, site: str, t_s: float) -> Weather:
        idx = int(np.clip(np.searchsorted(self.t_s, t_s, side="right") - 1, 0, self.t_s.size - 1))
        return Weather(
            rain_rate_mm_h=float(self.rain_mm_h[site][idx]),
            temperature_c=float(self.temperature_c[site][idx]),
            wind_m_s=float(self.wind_m_s[site][idx]),
        )

    def records(self, kind: str = "rain_mm_h") -> list[MeasurementRecord]:
        data = {"rain_mm_h": self.rain_mm_h, "temperature_c": self.temperature_c, "wind_m_s": self.wind_m_s}[kind]
        unit = {"rain_mm_h": "mm/h", "temperature_c": "degC", "wind_m_s": "m/s"}[kind]
        out = []
        for site, series in data.items():
            out.extend(MeasurementRecord(float(t), site, kind, float(v), unit) for t, v in zip(self.t_s, series))
        return out


def _ar1(gen, n: int, phi: float, sigma: float) -> np.ndarray:
    x = np.empty(n)
    x[0] = sigma * gen.standard_normal() / math.sqrt(1.0 - phi * phi)
    innov = sigma * gen.standard_normal(n)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + innov[i]
    return x


def weather_feed(
    rng: RngStream,
    site_ids: Sequence[str],
    duration_s: float,
    dt_s: float = 60.0,
    regional_weight: float = 0.8,
    storm_mm_h: float = 12.0,
) -> WeatherSeries:
    """Correlated multi-site weather.

    Each site's log rain intensity is ``w * regional + sqrt(1-w^2) *
    local`` with AR(1) regional and local processes, so any two sites
    share correlation about ``w^2``, strictly between 0 and 1.
    """
    if not 0 < regional_weight < 1:
        raise ValueError("regional_weight must lie strictly between 0 and 1")
    n = max(2, int(round(duration_s / dt_s)))
    t = np.arange(n) * dt_s
    regional = _ar1(rng.child("regional").generator, n, 0.98, 0.2)
    # A storm front: the regional mean level rises and falls once.
    envelope = np.sin(np.linspace(0.0, math.pi, n)) ** 2
    base_log = np.log(storm_mm_h) * envelope - 1.5 * (1.0 - envelope)
    w = regional_weight
    lw = math.sqrt(1.0 - w * w)
    rain, temp, wind = {}, {}, {}
    for site in site_ids:
        local = _ar1(rng.child(f"local/{site}").generator, n, 0.9, 0.35)
        logr = base_log + w * regional + lw * local
        rain[site] = np.clip(np.exp(logr), 0.0, 100.0)
        tgen = rng.child(f"temp/{site}").generator
        temp[site] = 15.0 + 6.0 * np.sin(2 * math.pi * t / 86400.0) + _ar1(tgen, n, 0.95, 0.3)
        wgen = rng.child(f"wind/{site}").generator
        wind[site] = np.abs(3.0 + _ar1(wgen, n, 0.9, 1.0))
    return WeatherSeries(t_s=t, rain_mm_h=rain, temperature_c=temp, wind_m_s=wind)


# ---------------------------------------------------------------------------
# Power model

SUBSYSTEMS = ("tvws", "sdr", "compute", "switches", "optical", "other")

# Measured cabinet baseline (idle radios), watts and amps per subsystem.
BASELINE_POWER_W = {
    "tvws": 692.234,
    "sdr": 415.198,
    "compute": 319.516,
    "switches": 188.118,
    "optical": 115.482,
    "other": 45.173,
}
BASELINE_CURRENT_A = {
    "tvws": 5.822,
    "sdr": 4.377,
    "compute": 2.699,
    "switches": 2.332,
    "optical": 1.392,
    "other": 0.783,
}
BASELINE_TOTAL_W = round(sum(BASELINE_POWER_W.values()), 3)
BASELINE_TOTAL_A = round(sum(BASELINE_CURRENT_A.values()), 3)

# Per-UE increment of the main radio's draw while transmitting.
_TX_FACTOR_PER_UE = 0.035


def transmit_factor(n_ues: int) -> float:
    if n_ues < 0:
        raise ValueError("n_ues must be non-negative")
    return 1.0 + _TX_FACTOR_PER_UE * n_ues


def subsystem_share(name: str) -> float:
    return BASELINE_POWER_W[name] / BASELINE_TOTAL_W


@dataclass(frozen=True)
class PowerBreakdown:
    power_w: dict[str, float]
    current_a: dict[str, float]

    @property
    def total_w(self) -> float:
        return sum(self.power_w.values())

    @property
    def total_a(self) -> float:
        return sum(self.current_a.values())


def baseline_breakdown() -> PowerBreakdown:
    return PowerBreakdown(dict(BASELINE_POWER_W), dict(BASELINE_CURRENT_A))


@dataclass
class PowerTimeline:
    t_s: np.ndarray
    power_w: np.ndarray
    current_a: np.ndarray
    transmitting: np.ndarray  # bool per sample
    tvws_power_w: np.ndarray


def power_series(
    rng: RngStream,
    duration_s: float,
    tx_windows: Sequence[tuple[float, float]] = (),
    n_ues: int = 6,
    dt_s: float = 1.0,
    noise_frac: float = 0.003,
    dip_frac: float = 0.08,
) -> PowerTimeline:
    """Cabinet power over time with keying transients.

    While transmitting, the main radio draws ``transmit_factor(n_ues)``
    times its idle power. At each idle-to-transmit edge the regulator
    briefly undershoots: the first transmitting sample dips below the
    idle draw before settling at the elevated level.
    """
    n = max(1, int(round(duration_s / dt_s)))
    t = np.arange(n) * dt_s
    tx = np.zeros(n, dtype=bool)
    for a, b in tx_windows:
        tx |= (t >= a) & (t < b)
    factor = transmit_factor(n_ues)
    tvws_idle_w = BASELINE_POWER_W["tvws"]
    tvws_idle_a = BASELINE_CURRENT_A["tvws"]
    other_w = BASELINE_TOTAL_W - tvws_idle_w
    other_a = BASELINE_TOTAL_A - tvws_idle_a

    tvws_w = np.where(tx, tvws_idle_w * factor, tvws_idle_w).astype(float)
    tvws_a = np.where(tx, tvws_idle_a * factor, tvws_idle_a).astype(float)
    edges = np.nonzero(tx & ~np.roll(tx, 1))[0]
    if tx.size and tx[0]:
        edges = edges[edges != 0]
    for e in edges:
        tvws_w[e] = tvws_idle_w * (1.0 - dip_frac)
        tvws_a[e] = tvws_idle_a * (1.0 - dip_frac)

    gen = rng.generator
    noise = 1.0 + noise_frac * gen.standard_normal(n)
    power = (other_w + tvws_w) * noise
    current = (other_a + tvws_a) * noise
    return PowerTimeline(t_s=t, power_w=power, current_a=current, transmitting=tx, tvws_power_w=tvws_w)


# ---------------------------------------------------------------------------
# Spectrum occupancy

_SCAN_FLOOR_DBM = -119.0
_SCAN_CLIP_LOW = -120.0
_SCAN_CLIP_HIGH = -20.0
_DEFAULT_BUSY = {
    3: 0.9, 7: 0.65, 8: 0.5, 14: 0.8, 15: 0.35, 16: 0.55,
    21: 0.7, 22: 0.25, 28: 0.6, 29: 0.45, 33: 0.3, 36: 0.85,
}


@dataclass
class SpectrumScan:
    power_dbm: np.ndarray  # (n_channels, n_slots)
    channel_start: int

    @property
    def n_channels(self) -> int:
        return self.power_dbm.shape[0]

    @property
    def n_slots(self) -> int:
        return self.power_dbm.shape[1]

    def noise_floor_dbm(self) -> float:
        return float(np.median(self.power_dbm))

    def free_channels(self, threshold_dbm: float = -110.0) -> list[int]:
        p95 = np.quantile(self.power_dbm, 0.95, axis=1)
        return [self.channel_start + i for i in np.nonzero(p95 < threshold_dbm)[0]]

    def occupancy_fraction(self, threshold_dbm: float = -110.0) -> np.ndarray:
        return np.mean(self.power_dbm > threshold_dbm, axis=1)


def spectrum_scan(
    rng: RngStream,
    n_channels: int = 38,
    n_slots: int = 900,
    busy: dict[int, float] | None = None,
    channel_start: int = 2,
    busy_power_dbm: float = -45.0,
) -> SpectrumScan:
    """Raster scan of TV whitespace channels over sensing slots.

    ``busy`` maps channel index (0-based within the scan) to its duty
    cycle; busy slots carry a strong carrier, idle slots sit on the
    noise floor. All values are clipped to the sounder's dynamic range.
    """
    gen = rng.generator
    grid = _SCAN_FLOOR_DBM + 0.8 * gen.standard_normal((n_channels, n_slots))
    busy = _DEFAULT_BUSY if busy is None else busy
    for ch, duty in busy.items():
        if not 0 <= ch < n_channels:
            continue
        # Markov on/off occupancy with the requested duty cycle.
        p_on = duty
        state = gen.random() < p_on
        stay = 0.95
        for s in range(n_slots):
            if gen.random() > stay:
                state = gen.random() < p_on
            if state:
                grid[ch, s] = busy_power_dbm + 4.0 * gen.standard_normal()
    return SpectrumScan(power_dbm=np.clip(grid, _SCAN_CLIP_LOW, _SCAN_CLIP_HIGH), channel_start=channel_start)
