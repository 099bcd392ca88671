"""Pydantic request/response schemas for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .orchestrator import Conflict, Experiment, GuardEvent, Lease, LeaseRequest


class HealthResponse(BaseModel):
    status: str
    version: str


class PipelineListResponse(BaseModel):
    pipelines: list[str]


class ScenarioValidateRequest(BaseModel):
    config: dict


class ScenarioValidateResponse(BaseModel):
    valid: bool
    problems: list[str]


class ScenarioRunRequest(BaseModel):
    config: dict
    output_root: str | None = None


class ScenarioRunResponse(BaseModel):
    pipeline: str
    seed: int
    out_dir: str
    manifest: dict


class ConflictModel(BaseModel):
    reason: str
    other_lease_id: str
    detail: str

    @classmethod
    def of(cls, c: Conflict) -> "ConflictModel":
        return cls(reason=c.reason, other_lease_id=c.other_lease_id, detail=c.detail)


class LeaseRequestModel(BaseModel):
    requester: str
    start_s: float
    end_s: float
    resources: list[str]
    platform: str
    freq_low_hz: float | None = None
    freq_high_hz: float | None = None
    tx_power_w: float = 0.0

    def to_domain(self) -> LeaseRequest:
        return LeaseRequest(
            requester=self.requester,
            start_s=self.start_s,
            end_s=self.end_s,
            resources=tuple(self.resources),
            platform=self.platform,
            freq_low_hz=self.freq_low_hz,
            freq_high_hz=self.freq_high_hz,
            tx_power_w=self.tx_power_w,
        )


class LeaseModel(BaseModel):
    id: str
    state: str
    granted_at_s: float
    request: LeaseRequestModel
    conflicts: list[ConflictModel] = Field(default_factory=list)

    @classmethod
    def of(cls, lease: Lease) -> "LeaseModel":
        r = lease.request
        return cls(
            id=lease.id,
            state=lease.state,
            granted_at_s=lease.granted_at_s,
            request=LeaseRequestModel(
                requester=r.requester,
                start_s=r.start_s,
                end_s=r.end_s,
                resources=list(r.resources),
                platform=r.platform,
                freq_low_hz=r.freq_low_hz,
                freq_high_hz=r.freq_high_hz,
                tx_power_w=r.tx_power_w,
            ),
            conflicts=[ConflictModel.of(c) for c in lease.conflicts],
        )


class ExperimentRequestModel(BaseModel):
    lease_id: str
    image_bytes: float = 2.5e9
    duration_s: float = 600.0
    config: dict = Field(default_factory=dict)


class ExperimentModel(BaseModel):
    id: str
    lease_id: str
    phase: str
    submitted_at_s: float
    fetch_s: float
    launch_s: float
    ready_at_s: float
    ends_at_s: float
    fetch_fraction_of_launch: float

    @classmethod
    def of(cls, exp: Experiment, now_s: float) -> "ExperimentModel":
        return cls(
            id=exp.id,
            lease_id=exp.spec.lease_id,
            phase=exp.phase(now_s),
            submitted_at_s=exp.submitted_at_s,
            fetch_s=exp.fetch_s,
            launch_s=exp.launch_s,
            ready_at_s=exp.ready_at_s,
            ends_at_s=exp.ends_at_s,
            fetch_fraction_of_launch=exp.fetch_fraction_of_launch,
        )


class GuardCheckRequest(BaseModel):
    lease_id: str
    freq_low_hz: float
    freq_high_hz: float
    tx_power_w: float


class GuardDecisionModel(BaseModel):
    allowed: bool
    violations: list[str]


class TransmissionReportModel(BaseModel):
    site: str
    freq_low_hz: float
    freq_high_hz: float
    tx_power_w: float
    lease_id: str | None = None


class GuardEventModel(BaseModel):
    t_s: float
    kind: str
    lease_id: str | None
    detail: str
    revoke_at_s: float | None = None

    @classmethod
    def of(cls, ev: GuardEvent) -> "GuardEventModel":
        return cls(t_s=ev.t_s, kind=ev.kind, lease_id=ev.lease_id, detail=ev.detail, revoke_at_s=ev.revoke_at_s)


class ClockModel(BaseModel):
    now_s: float


class ClockAdvanceRequest(BaseModel):
    dt_s: float
