"""HTTP facade over the simulator and orchestrator.

One process owns a single orchestrator (clock, leases, guard log) plus
the scenario runner. State persists as JSONL under the service's state
directory, so a restarted service replays its calendar.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from . import __version__
from .api_models import (
    ClockAdvanceRequest,
    ClockModel,
    ExperimentModel,
    ExperimentRequestModel,
    GuardCheckRequest,
    GuardDecisionModel,
    GuardEventModel,
    HealthResponse,
    LeaseModel,
    LeaseRequestModel,
    PipelineListResponse,
    ScenarioRunRequest,
    ScenarioRunResponse,
    ScenarioValidateRequest,
    ScenarioValidateResponse,
    TransmissionReportModel,
)
from .catalog import default_catalog_path, load_platform_catalog
from .orchestrator import LeaseValidationError, Orchestrator, TxConfig
from .scenarios import PIPELINES, ScenarioError, run_scenario, validate_scenario_config
from .topology import default_topology_path, load_topology

__all__ = ["create_app"]


def create_app(
    state_dir: str | Path | None = None,
    catalog_path: str | Path | None = None,
    topology_path: str | Path | None = None,
) -> FastAPI:
    catalog = load_platform_catalog(catalog_path or default_catalog_path())
    topology = load_topology(topology_path or default_topology_path())
    orc = Orchestrator(catalog, topology, state_dir=state_dir)

    app = FastAPI(title="ara-lab", version=__version__)
    app.state.orchestrator = orc

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    # -- scenarios ----------------------------------------------------

    @app.get("/scenarios/pipelines", response_model=PipelineListResponse)
    def pipelines() -> PipelineListResponse:
        return PipelineListResponse(pipelines=sorted(PIPELINES))

    @app.post("/scenarios/validate", response_model=ScenarioValidateResponse)
    def validate(req: ScenarioValidateRequest) -> ScenarioValidateResponse:
        problems = validate_scenario_config(req.config)
        return ScenarioValidateResponse(valid=not problems, problems=problems)

    @app.post("/scenarios/run", response_model=ScenarioRunResponse)
    def run(req: ScenarioRunRequest) -> ScenarioRunResponse:
        try:
            result = run_scenario(req.config, output_root=req.output_root)
        except ScenarioError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return ScenarioRunResponse(
            pipeline=result.pipeline,
            seed=result.seed,
            out_dir=str(result.out_dir),
            manifest=result.manifest,
        )

    # -- leases -------------------------------------------------------

    @app.post("/leases", response_model=LeaseModel)
    def request_lease(req: LeaseRequestModel) -> LeaseModel:
        try:
            lease = orc.request_lease(req.to_domain())
        except LeaseValidationError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return LeaseModel.of(lease)

    @app.get("/leases", response_model=list[LeaseModel])
    def list_leases() -> list[LeaseModel]:
        return [LeaseModel.of(l) for l in orc.leases.values()]

    @app.get("/leases/{lease_id}", response_model=LeaseModel)
    def get_lease(lease_id: str) -> LeaseModel:
        if lease_id not in orc.leases:
            raise HTTPException(status_code=404, detail=f"no lease {lease_id}")
        return LeaseModel.of(orc.leases[lease_id])

    @app.delete("/leases/{lease_id}", response_model=LeaseModel)
    def release_lease(lease_id: str) -> LeaseModel:
        if lease_id not in orc.leases:
            raise HTTPException(status_code=404, detail=f"no lease {lease_id}")
        return LeaseModel.of(orc.release_lease(lease_id))

    # -- experiments --------------------------------------------------

    @app.post("/experiments", response_model=ExperimentModel)
    def launch(req: ExperimentRequestModel) -> ExperimentModel:
        from .orchestrator import ExperimentSpec

        try:
            exp = orc.launch_experiment(
                ExperimentSpec(
                    lease_id=req.lease_id,
                    image_bytes=req.image_bytes,
                    duration_s=req.duration_s,
                    config=req.config,
                )
            )
        except LeaseValidationError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return ExperimentModel.of(exp, orc.clock.now_s)

    @app.get("/experiments/{experiment_id}", response_model=ExperimentModel)
    def experiment_status(experiment_id: str) -> ExperimentModel:
        if experiment_id not in orc.experiments:
            raise HTTPException(status_code=404, detail=f"no experiment {experiment_id}")
        return ExperimentModel.of(orc.experiments[experiment_id], orc.clock.now_s)

    # -- guard --------------------------------------------------------

    @app.post("/guard/config-check", response_model=GuardDecisionModel)
    def config_check(req: GuardCheckRequest) -> GuardDecisionModel:
        decision = orc.config_check(
            req.lease_id, TxConfig(req.freq_low_hz, req.freq_high_hz, req.tx_power_w)
        )
        return GuardDecisionModel(allowed=decision.allowed, violations=decision.violations)

    @app.post("/guard/transmission", response_model=GuardEventModel | None)
    def report_transmission(req: TransmissionReportModel) -> GuardEventModel | None:
        ev = orc.report_transmission(
            req.site, req.freq_low_hz, req.freq_high_hz, req.tx_power_w, lease_id=req.lease_id
        )
        return GuardEventModel.of(ev) if ev is not None else None

    @app.get("/guard/events", response_model=list[GuardEventModel])
    def guard_events() -> list[GuardEventModel]:
        return [GuardEventModel.of(e) for e in orc.guard_events]

    # -- clock --------------------------------------------------------

    @app.get("/clock", response_model=ClockModel)
    def get_clock() -> ClockModel:
        return ClockModel(now_s=orc.clock.now_s)

    @app.post("/clock/advance", response_model=ClockModel)
    def advance(req: ClockAdvanceRequest) -> ClockModel:
        try:
            orc.clock.advance(req.dt_s)
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return ClockModel(now_s=orc.clock.now_s)

    return app
