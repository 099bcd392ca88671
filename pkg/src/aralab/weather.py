"""Weather conditions consumed by the link models."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["Weather", "CLEAR"]


@dataclass(frozen=True)
class Weather:
    rain_rate_mm_h: float = 0.0
    temperature_c: float = 15.0
    wind_m_s: float = 0.0
    # None means unlimited visibility (no fog).
    fog_visibility_m: float | None = None

    def __post_init__(self) -> None:
        if self.rain_rate_mm_h < 0:
            raise ValueError("rain_rate_mm_h must be non-negative")
        if self.fog_visibility_m is not None and self.fog_visibility_m <= 0:
            raise ValueError("fog_visibility_m must be positive when given")


CLEAR = Weather()
