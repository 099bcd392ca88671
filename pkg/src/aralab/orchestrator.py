"""Testbed orchestration: lease admission, experiment launch, guard.

Leases reserve resources and spectrum over a time window and are
admitted first-come-first-served: a request is denied when it overlaps
a granted lease in time and either shares a resource or occupies
overlapping spectrum within radio range. Experiments run inside a
granted lease and move through fetch / launch / run phases on the
simulation clock. A two-tier guard screens configurations before
launch and watches live transmissions, revoking the offending lease
within one enforcement slot.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .catalog import PlatformCatalog
from .topology import Topology

__all__ = [
    "SimClock",
    "LeaseValidationError",
    "LeaseRequest",
    "Conflict",
    "Lease",
    "ExperimentSpec",
    "Experiment",
    "TxConfig",
    "GuardDecision",
    "GuardEvent",
    "Orchestrator",
    "conflict_between",
    "GUARD_SLOT_S",
]

GUARD_SLOT_S = 1.0
# Ratio of container-launch overhead to image fetch time: fetching is
# 80 percent of time-to-launch.
_LAUNCH_OVERHEAD_FRAC = 0.25


@dataclass
class SimClock:
    now_s: float = 0.0

    def advance(self, dt_s: float) -> float:
        if dt_s < 0:
            raise ValueError("clock cannot run backwards")
        self.now_s += dt_s
        return self.now_s


class LeaseValidationError(ValueError):
    """Malformed request; distinct from a well-formed but conflicting one."""


@dataclass(frozen=True)
class LeaseRequest:
    requester: str
    start_s: float
    end_s: float
    resources: tuple[str, ...]
    platform: str
    freq_low_hz: float | None = None
    freq_high_hz: float | None = None
    tx_power_w: float = 0.0

    def validate(self, catalog: PlatformCatalog, topology: Topology) -> None:
        if not self.requester:
            raise LeaseValidationError("requester must be non-empty")
        if not self.end_s > self.start_s:
            raise LeaseValidationError("lease window must have positive duration")
        if not self.resources:
            raise LeaseValidationError("lease must name at least one resource")
        try:
            plat = catalog.get(self.platform)
        except Exception:
            raise LeaseValidationError(f"unknown platform {self.platform!r}") from None
        known_sites = {s.id for s in topology.sites}
        known_platforms = {p.id for p in catalog}
        for r in self.resources:
            if r not in known_sites and r not in known_platforms:
                raise LeaseValidationError(f"unknown resource {r!r}")
        if (self.freq_low_hz is None) != (self.freq_high_hz is None):
            raise LeaseValidationError("spectrum band needs both edges")
        if self.freq_low_hz is not None and not self.freq_high_hz > self.freq_low_hz:
            raise LeaseValidationError("spectrum band must have positive width")
        if self.tx_power_w < 0:
            raise LeaseValidationError("tx_power_w must be non-negative")
        if self.tx_power_w > plat.max_tx_power_w:
            raise LeaseValidationError(
                f"tx_power_w {self.tx_power_w} exceeds {self.platform} limit {plat.max_tx_power_w}"
            )

    def sites(self, topology: Topology) -> list[str]:
        known = {s.id for s in topology.sites}
        return [r for r in self.resources if r in known]


@dataclass(frozen=True)
class Conflict:
    reason: str  # "resource" | "spectrum"
    other_lease_id: str
    detail: str


def _time_overlap(a: LeaseRequest, b: LeaseRequest) -> bool:
    return a.start_s < b.end_s and b.start_s < a.end_s


def _freq_overlap(a: LeaseRequest, b: LeaseRequest) -> bool:
    if a.freq_low_hz is None or b.freq_low_hz is None:
        return False
    return a.freq_low_hz < b.freq_high_hz and b.freq_low_hz < a.freq_high_hz


def _min_site_distance(a: LeaseRequest, b: LeaseRequest, topology: Topology) -> float:
    sa, sb = a.sites(topology), b.sites(topology)
    if not sa or not sb:
        return 0.0  # unknown geometry: assume co-located
    return min(topology.distance(x, y) for x in sa for y in sb)


def conflict_between(
    a: LeaseRequest,
    b: LeaseRequest,
    other_id: str,
    catalog: PlatformCatalog,
    topology: Topology,
) -> Conflict | None:
    """Why request ``a`` cannot coexist with granted request ``b``."""
    if not _time_overlap(a, b):
        return None
    shared = set(a.resources) & set(b.resources)
    if shared:
        return Conflict("resource", other_id, f"shared resources: {sorted(shared)}")
    if _freq_overlap(a, b):
        reach = max(
            catalog.get(a.platform).nominal_range_m,
            catalog.get(b.platform).nominal_range_m,
        )
        d = _min_site_distance(a, b, topology)
        if d <= reach:
            return Conflict(
                "spectrum",
                other_id,
                f"band overlap within {reach:.0f} m radio range (separation {d:.0f} m)",
            )
    return None


@dataclass
class Lease:
    id: str
    request: LeaseRequest
    state: str  # "granted" | "denied" | "released" | "revoked"
    granted_at_s: float
    conflicts: list[Conflict] = field(default_factory=list)

    @property
    def granted(self) -> bool:
        return self.state == "granted"

    def active_at(self, t_s: float) -> bool:
        return self.granted and self.request.start_s <= t_s < self.request.end_s


@dataclass(frozen=True)
class ExperimentSpec:
    lease_id: str
    image_bytes: float = 2.5e9
    duration_s: float = 600.0
    config: dict = field(default_factory=dict)


@dataclass
class Experiment:
    id: str
    spec: ExperimentSpec
    submitted_at_s: float
    fetch_s: float
    launch_s: float

    @property
    def ready_at_s(self) -> float:
        return self.submitted_at_s + self.fetch_s + self.launch_s

    @property
    def ends_at_s(self) -> float:
        return self.ready_at_s + self.spec.duration_s

    @property
    def fetch_fraction_of_launch(self) -> float:
        # launch_s is constructed as an exact binary fraction of fetch_s,
        # so the ratio form keeps the split exact for every image size.
        return 1.0 / (1.0 + self.launch_s / self.fetch_s)

    def phase(self, now_s: float) -> str:
        if now_s < self.submitted_at_s + self.fetch_s:
            return "fetching"
        if now_s < self.ready_at_s:
            return "launching"
        if now_s < self.ends_at_s:
            return "running"
        return "completed"


@dataclass(frozen=True)
class TxConfig:
    freq_low_hz: float
    freq_high_hz: float
    tx_power_w: float


@dataclass(frozen=True)
class GuardEvent:
    t_s: float
    kind: str  # "config_denied" | "unauthorized_transmission" | "lease_revoked"
    lease_id: str | None
    detail: str
    revoke_at_s: float | None = None


@dataclass
class GuardDecision:
    allowed: bool
    violations: list[str]


class Orchestrator:
    """Single-authority scheduler for leases, experiments, and the guard."""

    def __init__(
        self,
        catalog: PlatformCatalog,
        topology: Topology,
        state_dir: str | Path | None = None,
        clock: SimClock | None = None,
        fetch_rate_bps: float = 1e9,
    ):
        self.catalog = catalog
        self.topology = topology
        self.clock = clock or SimClock()
        self.fetch_rate_bps = fetch_rate_bps
        self.leases: dict[str, Lease] = {}
        self.experiments: dict[str, Experiment] = {}
        self.guard_events: list[GuardEvent] = []
        # Admission-window index: granted leases sorted by start time, with
        # the widest granted span, so each admission only examines leases
        # whose windows can overlap the request (released/revoked entries
        # are skipped lazily).
        self._granted_idx: list[tuple[float, str]] = []
        self._max_granted_span_s: float = 0.0
        self._state_dir = Path(state_dir) if state_dir is not None else None
        if self._state_dir is not None:
            self._state_dir.mkdir(parents=True, exist_ok=True)
            self._replay()

    # -- persistence --------------------------------------------------

    @property
    def calendar_path(self) -> Path | None:
        return self._state_dir / "calendar.jsonl" if self._state_dir else None

    @property
    def guard_log_path(self) -> Path | None:
        return self._state_dir / "guard_events.jsonl" if self._state_dir else None

    def _append(self, path: Path | None, record: dict) -> None:
        if path is None:
            return
        with open(path, "a") as fp:
            fp.write(json.dumps(record, sort_keys=True) + "\n")

    def _replay(self) -> None:
        cal = self.calendar_path
        if cal is not None and cal.exists():
            with open(cal) as fp:
                for line in fp:
                    rec = json.loads(line)
                    if rec["event"] in ("granted", "denied"):
                        req = LeaseRequest(
                            **{**rec["request"], "resources": tuple(rec["request"]["resources"])}
                        )
                        lease = Lease(
                            id=rec["lease_id"],
                            request=req,
                            state="granted" if rec["event"] == "granted" else "denied",
                            granted_at_s=rec["t_s"],
                            conflicts=[Conflict(**c) for c in rec.get("conflicts", [])],
                        )
                        self.leases[lease.id] = lease
                        if lease.granted:
                            self._index_granted(lease)
                    elif rec["event"] in ("released", "revoked"):
                        if rec["lease_id"] in self.leases:
                            self.leases[rec["lease_id"]].state = rec["event"]
        glog = self.guard_log_path
        if glog is not None and glog.exists():
            with open(glog) as fp:
                for line in fp:
                    self.guard_events.append(GuardEvent(**json.loads(line)))

    # -- leases -------------------------------------------------------

    def _index_granted(self, lease: Lease) -> None:
        bisect.insort(self._granted_idx, (lease.request.start_s, lease.id))
        span = lease.request.end_s - lease.request.start_s
        if span > self._max_granted_span_s:
            self._max_granted_span_s = span

    def _granted_candidates(self, request: LeaseRequest) -> Iterator[Lease]:
        """Granted leases whose time windows can overlap the request."""
        lo = bisect.bisect_left(
            self._granted_idx, (request.start_s - self._max_granted_span_s, "")
        )
        for i in range(lo, len(self._granted_idx)):
            start, lease_id = self._granted_idx[i]
            if start >= request.end_s:
                break
            lease = self.leases[lease_id]
            if lease.state == "granted":
                yield lease

    def request_lease(self, request: LeaseRequest) -> Lease:
        """Admit or deny in arrival order. Malformed requests raise."""
        request.validate(self.catalog, self.topology)
        conflicts = []
        for other in self._granted_candidates(request):
            c = conflict_between(request, other.request, other.id, self.catalog, self.topology)
            if c is not None:
                conflicts.append(c)
        lease = Lease(
            id=f"L-{len(self.leases) + 1:04d}",
            request=request,
            state="denied" if conflicts else "granted",
            granted_at_s=self.clock.now_s,
            conflicts=conflicts,
        )
        self.leases[lease.id] = lease
        if lease.granted:
            self._index_granted(lease)
        self._append(
            self.calendar_path,
            {
                "event": "granted" if lease.granted else "denied",
                "t_s": self.clock.now_s,
                "lease_id": lease.id,
                "request": asdict(request),
                "conflicts": [asdict(c) for c in conflicts],
            },
        )
        return lease

    def get_lease(self, lease_id: str) -> Lease:
        return self.leases[lease_id]

    def release_lease(self, lease_id: str) -> Lease:
        lease = self.leases[lease_id]
        if lease.state == "granted":
            lease.state = "released"
            self._append(
                self.calendar_path,
                {"event": "released", "t_s": self.clock.now_s, "lease_id": lease_id},
            )
        return lease

    def _revoke(self, lease_id: str, detail: str, revoke_at_s: float) -> None:
        lease = self.leases[lease_id]
        if lease.state == "granted":
            lease.state = "revoked"
            self._append(
                self.calendar_path,
                {"event": "revoked", "t_s": revoke_at_s, "lease_id": lease_id},
            )
            ev = GuardEvent(
                t_s=self.clock.now_s,
                kind="lease_revoked",
                lease_id=lease_id,
                detail=detail,
                revoke_at_s=revoke_at_s,
            )
            self.guard_events.append(ev)
            self._append(self.guard_log_path, asdict(ev))

    def active_leases(self, t_s: float | None = None) -> list[Lease]:
        t = self.clock.now_s if t_s is None else t_s
        return [l for l in self.leases.values() if l.active_at(t)]

    # -- experiments --------------------------------------------------

    def launch_experiment(self, spec: ExperimentSpec) -> Experiment:
        lease = self.leases.get(spec.lease_id)
        if lease is None or not lease.granted:
            raise LeaseValidationError(f"experiment needs a granted lease, got {spec.lease_id!r}")
        fetch_s = spec.image_bytes * 8.0 / self.fetch_rate_bps
        exp = Experiment(
            id=f"E-{len(self.experiments) + 1:04d}",
            spec=spec,
            submitted_at_s=self.clock.now_s,
            fetch_s=fetch_s,
            launch_s=_LAUNCH_OVERHEAD_FRAC * fetch_s,
        )
        self.experiments[exp.id] = exp
        return exp

    def get_experiment(self, experiment_id: str) -> Experiment:
        return self.experiments[experiment_id]

    # -- guard --------------------------------------------------------

    def config_check(self, lease_id: str, tx: TxConfig) -> GuardDecision:
        """Pre-launch screening. A deny is advice, never an exception."""
        lease = self.leases.get(lease_id)
        violations: list[str] = []
        if lease is None or not lease.granted:
            violations.append("no_active_lease")
        else:
            req = lease.request
            plat = self.catalog.get(req.platform)
            band_lo = req.freq_low_hz if req.freq_low_hz is not None else plat.freq_low_hz
            band_hi = req.freq_high_hz if req.freq_high_hz is not None else plat.freq_high_hz
            if tx.freq_low_hz < band_lo or tx.freq_high_hz > band_hi:
                violations.append("out_of_band")
            limit = req.tx_power_w if req.tx_power_w > 0 else plat.max_tx_power_w
            if tx.tx_power_w > limit:
                violations.append("over_power")
        decision = GuardDecision(allowed=not violations, violations=violations)
        if violations:
            ev = GuardEvent(
                t_s=self.clock.now_s,
                kind="config_denied",
                lease_id=lease_id,
                detail=",".join(violations),
            )
            self.guard_events.append(ev)
            self._append(self.guard_log_path, asdict(ev))
        return decision

    def report_transmission(
        self,
        site: str,
        freq_low_hz: float,
        freq_high_hz: float,
        tx_power_w: float,
        lease_id: str | None = None,
    ) -> GuardEvent | None:
        """Runtime spectrum sensing: flag and revoke unauthorized use.

        Revocation lands on the next enforcement-slot boundary, at most
        one slot after detection.
        """
        now = self.clock.now_s
        authorized = False
        offender = lease_id
        for lease in self.active_leases(now):
            req = lease.request
            if lease_id is not None and lease.id != lease_id:
                continue
            if site not in req.resources:
                continue
            if req.freq_low_hz is None:
                continue
            in_band = freq_low_hz >= req.freq_low_hz and freq_high_hz <= req.freq_high_hz
            limit = req.tx_power_w if req.tx_power_w > 0 else math.inf
            if in_band and tx_power_w <= limit:
                authorized = True
                break
            offender = lease.id
        if authorized:
            return None
        revoke_at = math.floor(now / GUARD_SLOT_S) * GUARD_SLOT_S + GUARD_SLOT_S
        ev = GuardEvent(
            t_s=now,
            kind="unauthorized_transmission",
            lease_id=offender,
            detail=f"site={site} band=[{freq_low_hz:.0f},{freq_high_hz:.0f}] power={tx_power_w}",
            revoke_at_s=revoke_at,
        )
        self.guard_events.append(ev)
        self._append(self.guard_log_path, asdict(ev))
        if offender is not None and offender in self.leases:
            self._revoke(offender, detail=ev.detail, revoke_at_s=revoke_at)
        return ev
