"""Deployment topology: sites, candidate links, terrain profiles.

Coordinates are local planar meters (east = +x, north = +y) so distance
is plain Euclidean; the demo deployment spans roughly 10 x 10 km where
planar error is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import yaml

from .catalog import PlatformCatalog

__all__ = [
    "TopologyError",
    "Site",
    "LinkSpec",
    "TerrainSegment",
    "TerrainProfile",
    "RoutePoint",
    "Topology",
    "load_topology",
    "serialize_topology",
    "default_topology_path",
]

BLOCKAGE_STATES = ("clear", "partial", "blocked")


class TopologyError(ValueError):
    """Raised for malformed topology files or unknown site lookups."""


@dataclass(frozen=True)
class Site:
    id: str
    role: str  # bs | ue
    position: tuple[float, float]
    elevation_m: float = 0.0
    platforms: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.role not in ("bs", "ue"):
            raise TopologyError(f"site {self.id!r}: role must be 'bs' or 'ue'")


@dataclass(frozen=True)
class LinkSpec:
    """A candidate point-to-point link between two sites."""

    a: str
    b: str
    platform: str
    bandwidth_hz: float | None = None
    mcs: str | None = None
    tx_power_dbm: float | None = None
    wdm_channels: int | None = None


@dataclass(frozen=True)
class TerrainSegment:
    from_m: float
    to_m: float
    state: str

    def __post_init__(self) -> None:
        if self.state not in BLOCKAGE_STATES:
            raise TopologyError(f"blockage state {self.state!r} not one of {BLOCKAGE_STATES}")
        if self.from_m >= self.to_m:
            raise TopologyError("terrain segment must have from_m < to_m")


@dataclass(frozen=True)
class RoutePoint:
    distance_m: float
    elevation_m: float
    state: str


@dataclass
class TerrainProfile:
    """Blockage/elevation along the straight path between two sites.

    Stored as human-editable state segments; unlisted stretches are
    clear. Elevation interpolates linearly between the endpoint sites
    unless explicit (distance, elevation) points are given.
    """

    a: str
    b: str
    length_m: float
    segments: tuple[TerrainSegment, ...] = ()
    elevation_a: float = 0.0
    elevation_b: float = 0.0
    elevation_points: tuple[tuple[float, float], ...] = ()

    def state_at(self, d: float) -> str:
        for seg in self.segments:
            if seg.from_m <= d < seg.to_m:
                return seg.state
        return "clear"

    def elevation_at(self, d: float) -> float:
        f = 0.0 if self.length_m == 0 else d / self.length_m
        base = self.elevation_a + f * (self.elevation_b - self.elevation_a)
        if not self.elevation_points:
            return base
        pts = sorted(self.elevation_points)
        if d <= pts[0][0]:
            return pts[0][1]
        for (d0, e0), (d1, e1) in zip(pts, pts[1:]):
            if d0 <= d <= d1:
                t = 0.0 if d1 == d0 else (d - d0) / (d1 - d0)
                return e0 + t * (e1 - e0)
        return pts[-1][1]

    def points(self, step_m: float = 100.0) -> list[RoutePoint]:
        if step_m <= 0:
            raise TopologyError("step_m must be positive")
        out = []
        n = max(1, int(math.ceil(self.length_m / step_m)))
        for i in range(n + 1):
            d = min(self.length_m, i * step_m)
            out.append(RoutePoint(d, self.elevation_at(d), self.state_at(d)))
        return out

    def worst_state(self) -> str:
        states = {seg.state for seg in self.segments}
        if "blocked" in states:
            return "blocked"
        if "partial" in states:
            return "partial"
        return "clear"

    def reversed(self) -> "TerrainProfile":
        segs = tuple(
            TerrainSegment(self.length_m - s.to_m, self.length_m - s.from_m, s.state)
            for s in reversed(self.segments)
        )
        pts = tuple((self.length_m - d, e) for d, e in reversed(self.elevation_points))
        return TerrainProfile(self.b, self.a, self.length_m, segs, self.elevation_b, self.elevation_a, pts)


class Topology:
    def __init__(
        self,
        sites: Iterable[Site],
        links: Iterable[LinkSpec] = (),
        terrain: Iterable[TerrainProfile] = (),
        frame_units: str = "m",
    ):
        self.sites = list(sites)
        self.links = list(links)
        self.frame_units = frame_units
        self._by_id: dict[str, Site] = {}
        for s in self.sites:
            if s.id in self._by_id:
                raise TopologyError(f"duplicate site id {s.id!r}")
            self._by_id[s.id] = s
        for link in self.links:
            for end in (link.a, link.b):
                if end not in self._by_id:
                    raise TopologyError(f"link references unknown site {end!r}")
            if link.a == link.b:
                raise TopologyError(f"link endpoints must differ ({link.a!r})")
        self._terrain: dict[tuple[str, str], TerrainProfile] = {}
        for prof in terrain:
            for end in (prof.a, prof.b):
                if end not in self._by_id:
                    raise TopologyError(f"terrain profile references unknown site {end!r}")
            self._terrain[(prof.a, prof.b)] = prof

    def site(self, site_id: str) -> Site:
        try:
            return self._by_id[site_id]
        except KeyError:
            raise TopologyError(f"unknown site id {site_id!r}") from None

    def site_ids(self) -> list[str]:
        return [s.id for s in self.sites]

    def bs_sites(self) -> list[Site]:
        return [s for s in self.sites if s.role == "bs"]

    def ue_sites(self) -> list[Site]:
        return [s for s in self.sites if s.role == "ue"]

    def distance(self, a: str, b: str) -> float:
        pa, pb = self.site(a).position, self.site(b).position
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def distance_and_profile(self, a: str, b: str) -> tuple[float, TerrainProfile]:
        """Distance plus the declared terrain profile (or flat clear)."""
        sa, sb = self.site(a), self.site(b)
        d = self.distance(a, b)
        if (a, b) in self._terrain:
            return d, self._terrain[(a, b)]
        if (b, a) in self._terrain:
            return d, self._terrain[(b, a)].reversed()
        return d, TerrainProfile(a, b, d, (), sa.elevation_m, sb.elevation_m)

    def validate(self, catalog: PlatformCatalog) -> list[str]:
        """Return a list of referential problems (empty when clean)."""
        problems = []
        known = set(catalog.ids())
        for s in self.sites:
            for pid in s.platforms:
                if pid not in known:
                    problems.append(f"site {s.id!r} references unknown platform {pid!r}")
        for link in self.links:
            if link.platform not in known:
                problems.append(f"link {link.a}-{link.b} references unknown platform {link.platform!r}")
        return problems


def _parse_site(raw: dict) -> Site:
    try:
        pos = raw["position"]
        return Site(
            id=str(raw["id"]),
            role=str(raw.get("role", "bs")),
            position=(float(pos[0]), float(pos[1])),
            elevation_m=float(raw.get("elevation_m", 0.0)),
            platforms=tuple(str(p) for p in raw.get("platforms", ())),
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise TopologyError(f"bad site entry {raw!r}: {exc}") from None


def _parse_link(raw: dict) -> LinkSpec:
    try:
        return LinkSpec(
            a=str(raw["a"]),
            b=str(raw["b"]),
            platform=str(raw["platform"]),
            bandwidth_hz=None if raw.get("bandwidth_hz") is None else float(raw["bandwidth_hz"]),
            mcs=None if raw.get("mcs") is None else str(raw["mcs"]),
            tx_power_dbm=None if raw.get("tx_power_dbm") is None else float(raw["tx_power_dbm"]),
            wdm_channels=None if raw.get("wdm_channels") is None else int(raw["wdm_channels"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TopologyError(f"bad link entry {raw!r}: {exc}") from None


def load_topology(path: str | Path) -> Topology:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise TopologyError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict) or "sites" not in doc:
        raise TopologyError(f"{path}: expected a top-level 'sites' list")
    sites = [_parse_site(s) for s in doc["sites"]]
    by_id = {s.id: s for s in sites}
    links = [_parse_link(item) for item in doc.get("links", [])]
    terrain = []
    for raw in doc.get("terrain", []):
        a, b = str(raw["a"]), str(raw["b"])
        if a not in by_id or b not in by_id:
            raise TopologyError(f"terrain profile references unknown site {a!r} or {b!r}")
        pa, pb = by_id[a].position, by_id[b].position
        length = math.hypot(pa[0] - pb[0], pa[1] - pb[1])
        segments = tuple(
            TerrainSegment(float(s["from_m"]), float(s["to_m"]), str(s["state"]))
            for s in raw.get("segments", [])
        )
        for seg in segments:
            if seg.to_m > length + 1.0:
                raise TopologyError(
                    f"terrain segment {seg.from_m}-{seg.to_m} exceeds path length {length:.1f}"
                )
        pts = tuple((float(d), float(e)) for d, e in raw.get("elevation_points", []))
        terrain.append(
            TerrainProfile(a, b, length, segments, by_id[a].elevation_m, by_id[b].elevation_m, pts)
        )
    frame = doc.get("frame", {}) or {}
    return Topology(sites, links, terrain, frame_units=str(frame.get("units", "m")))


def serialize_topology(topo: Topology) -> str:
    sites = []
    for s in topo.sites:
        entry: dict = {
            "id": s.id,
            "role": s.role,
            "position": [s.position[0], s.position[1]],
            "elevation_m": s.elevation_m,
        }
        if s.platforms:
            entry["platforms"] = list(s.platforms)
        sites.append(entry)
    links = []
    for link in topo.links:
        entry = {"a": link.a, "b": link.b, "platform": link.platform}
        for key in ("bandwidth_hz", "mcs", "tx_power_dbm", "wdm_channels"):
            value = getattr(link, key)
            if value is not None:
                entry[key] = value
        links.append(entry)
    doc: dict = {"frame": {"units": topo.frame_units}, "sites": sites}
    if links:
        doc["links"] = links
    terrain = []
    for prof in topo._terrain.values():
        entry = {
            "a": prof.a,
            "b": prof.b,
            "segments": [
                {"from_m": s.from_m, "to_m": s.to_m, "state": s.state} for s in prof.segments
            ],
        }
        if prof.elevation_points:
            entry["elevation_points"] = [[d, e] for d, e in prof.elevation_points]
        terrain.append(entry)
    if terrain:
        doc["terrain"] = terrain
    return yaml.safe_dump(doc, sort_keys=False)


def default_topology_path() -> Path:
    return Path(__file__).parent / "data" / "topology.yaml"
