"""Platform catalog: the wireless platforms the lab can deploy.

The catalog is human-editable YAML. Each entry pins the RF envelope of
one platform (frequency range, bandwidth, power, capacity ceiling,
nominal range) plus the calibration constants the link models consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import yaml

__all__ = [
    "PlatformKind",
    "PlatformSpec",
    "PlatformCatalog",
    "CatalogError",
    "load_platform_catalog",
    "serialize_catalog",
    "default_catalog_path",
]

_VALID_KINDS = ("ran", "xhaul", "optical")


class CatalogError(ValueError):
    """Raised for malformed catalog files or unknown platform lookups."""


PlatformKind = str


@dataclass(frozen=True)
class PlatformSpec:
    """One deployable platform and its calibrated model constants."""

    id: str
    kind: PlatformKind
    freq_low_hz: float
    freq_high_hz: float
    max_bandwidth_hz: float
    max_tx_power_w: float
    max_capacity_bps: float
    nominal_range_m: float
    # Model constants fitted against field behaviour; keys depend on kind.
    calibration: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self) -> None:
        if self.kind not in _VALID_KINDS:
            raise CatalogError(f"platform {self.id!r}: unknown kind {self.kind!r}")
        if not self.freq_low_hz < self.freq_high_hz:
            raise CatalogError(f"platform {self.id!r}: freq_low must be below freq_high")
        if self.max_bandwidth_hz <= 0:
            raise CatalogError(f"platform {self.id!r}: max_bandwidth_hz must be positive")
        if self.max_tx_power_w <= 0:
            raise CatalogError(f"platform {self.id!r}: max_tx_power_w must be positive")
        if self.max_capacity_bps <= 0:
            raise CatalogError(f"platform {self.id!r}: max_capacity_bps must be positive")
        if self.nominal_range_m <= 0:
            raise CatalogError(f"platform {self.id!r}: nominal_range_m must be positive")

    @property
    def center_freq_hz(self) -> float:
        return 0.5 * (self.freq_low_hz + self.freq_high_hz)

    def cal(self, key: str, default: float | None = None) -> float:
        """Fetch a calibration constant, erroring on silent absence."""
        if key in self.calibration:
            return float(self.calibration[key])
        if default is not None:
            return default
        raise CatalogError(f"platform {self.id!r}: missing calibration constant {key!r}")


class PlatformCatalog:
    """Ordered collection of PlatformSpec entries with id lookup."""

    def __init__(self, platforms: Iterable[PlatformSpec]):
        self._platforms = list(platforms)
        self._by_id = {p.id: p for p in self._platforms}
        if len(self._by_id) != len(self._platforms):
            seen: set[str] = set()
            for p in self._platforms:
                if p.id in seen:
                    raise CatalogError(f"duplicate platform id {p.id!r}")
                seen.add(p.id)

    def __len__(self) -> int:
        return len(self._platforms)

    def __iter__(self):
        return iter(self._platforms)

    def get(self, platform_id: str) -> PlatformSpec:
        try:
            return self._by_id[platform_id]
        except KeyError:
            raise CatalogError(f"unknown platform id {platform_id!r}") from None

    def ids(self) -> list[str]:
        return [p.id for p in self._platforms]


_FLOAT_FIELDS = (
    "freq_low_hz",
    "freq_high_hz",
    "max_bandwidth_hz",
    "max_tx_power_w",
    "max_capacity_bps",
    "nominal_range_m",
)


def _parse_platform(raw: dict) -> PlatformSpec:
    if not isinstance(raw, dict):
        raise CatalogError(f"platform entry must be a mapping, got {type(raw).__name__}")
    missing = [k for k in ("id", "kind", *_FLOAT_FIELDS) if k not in raw]
    if missing:
        raise CatalogError(f"platform entry missing fields: {', '.join(missing)}")
    try:
        numbers = {k: float(raw[k]) for k in _FLOAT_FIELDS}
    except (TypeError, ValueError) as exc:
        raise CatalogError(f"platform {raw.get('id')!r}: non-numeric field ({exc})") from None
    calibration = raw.get("calibration") or {}
    if not isinstance(calibration, dict):
        raise CatalogError(f"platform {raw['id']!r}: calibration must be a mapping")
    return PlatformSpec(
        id=str(raw["id"]),
        kind=str(raw["kind"]),
        calibration={str(k): float(v) for k, v in calibration.items()},
        notes=str(raw.get("notes", "")),
        **numbers,
    )


def load_platform_catalog(path: str | Path) -> PlatformCatalog:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise CatalogError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict) or "platforms" not in doc:
        raise CatalogError(f"{path}: expected a top-level 'platforms' list")
    if not isinstance(doc["platforms"], list):
        raise CatalogError(f"{path}: 'platforms' must be a list")
    return PlatformCatalog(_parse_platform(entry) for entry in doc["platforms"])


def serialize_catalog(catalog: PlatformCatalog) -> str:
    """Canonical YAML form; load(serialize(c)) round-trips."""
    entries = []
    for p in catalog:
        entry: dict = {"id": p.id, "kind": p.kind}
        entry.update({k: getattr(p, k) for k in _FLOAT_FIELDS})
        if p.calibration:
            entry["calibration"] = dict(sorted(p.calibration.items()))
        if p.notes:
            entry["notes"] = p.notes
        entries.append(entry)
    return yaml.safe_dump({"platforms": entries}, sort_keys=False)


def default_catalog_path() -> Path:
    return Path(__file__).parent / "data" / "catalog.yaml"
