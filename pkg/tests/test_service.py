"""HTTP facade: scenario endpoints, lease lifecycle, guard, and clock."""

import pytest
from fastapi.testclient import TestClient

from aralab.service import create_app

LEASE_BODY = {
    "requester": "alice",
    "start_s": 0.0,
    "end_s": 3600.0,
    "resources": ["wilson-hall"],
    "platform": "AraMIMO-TVWS",
    "freq_low_hz": 470e6,
    "freq_high_hz": 476e6,
    "tx_power_w": 5.0,
}


@pytest.fixture()
def client(tmp_path):
    app = create_app(state_dir=tmp_path / "state")
    with TestClient(app) as c:
        yield c


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["version"]


def test_pipeline_listing(client):
    body = client.get("/scenarios/pipelines").json()
    assert len(body["pipelines"]) == 9
    assert "capacity_profile" in body["pipelines"]
    assert body["pipelines"] == sorted(body["pipelines"])


def test_scenario_validation_endpoint(client):
    good = client.post(
        "/scenarios/validate", json={"config": {"pipeline": "delay_cdf", "seed": 1}}
    ).json()
    assert good == {"valid": True, "problems": []}
    bad = client.post("/scenarios/validate", json={"config": {"seed": 1}}).json()
    assert not bad["valid"]
    assert any("pipeline" in p for p in bad["problems"])


def test_scenario_run_endpoint(client, tmp_path):
    config = {"pipeline": "delay_cdf", "seed": 3, "params": {"packets": 30, "log_packets": 3}}
    resp = client.post(
        "/scenarios/run", json={"config": config, "output_root": str(tmp_path / "out")}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["pipeline"] == "delay_cdf"
    assert body["seed"] == 3
    assert "summary" in body["manifest"]["outputs"]
    bad = client.post("/scenarios/run", json={"config": {"pipeline": "nope", "seed": 1}})
    assert bad.status_code == 400


def test_lease_lifecycle_over_http(client):
    created = client.post("/leases", json=LEASE_BODY)
    assert created.status_code == 200
    lease = created.json()
    assert lease["id"] == "L-0001"
    assert lease["state"] == "granted"

    conflicting = client.post("/leases", json={**LEASE_BODY, "requester": "bob"}).json()
    assert conflicting["state"] == "denied"
    assert conflicting["conflicts"][0]["reason"] == "resource"

    listing = client.get("/leases").json()
    assert [l["id"] for l in listing] == ["L-0001", "L-0002"]

    fetched = client.get("/leases/L-0001").json()
    assert fetched["request"]["requester"] == "alice"

    released = client.delete("/leases/L-0001").json()
    assert released["state"] == "released"

    assert client.get("/leases/L-9999").status_code == 404
    assert client.delete("/leases/L-9999").status_code == 404

    malformed = client.post("/leases", json={**LEASE_BODY, "requester": ""})
    assert malformed.status_code == 400


def test_experiment_lifecycle_over_http(client):
    lease = client.post("/leases", json=LEASE_BODY).json()
    exp = client.post(
        "/experiments",
        json={"lease_id": lease["id"], "image_bytes": 2.5e9, "duration_s": 60.0},
    ).json()
    assert exp["id"] == "E-0001"
    assert exp["phase"] == "fetching"
    assert exp["fetch_s"] == pytest.approx(20.0)
    assert exp["fetch_fraction_of_launch"] == 0.8

    client.post("/clock/advance", json={"dt_s": 30.0})
    status = client.get("/experiments/E-0001").json()
    assert status["phase"] == "running"

    assert client.get("/experiments/E-9999").status_code == 404
    orphan = client.post("/experiments", json={"lease_id": "L-9999"})
    assert orphan.status_code == 400


def test_guard_endpoints(client):
    lease = client.post("/leases", json=LEASE_BODY).json()
    check = client.post(
        "/guard/config-check",
        json={
            "lease_id": lease["id"],
            "freq_low_hz": 471e6,
            "freq_high_hz": 475e6,
            "tx_power_w": 2.0,
        },
    ).json()
    assert check == {"allowed": True, "violations": []}

    denied = client.post(
        "/guard/config-check",
        json={
            "lease_id": lease["id"],
            "freq_low_hz": 480e6,
            "freq_high_hz": 490e6,
            "tx_power_w": 2.0,
        },
    ).json()
    assert denied["violations"] == ["out_of_band"]

    ok = client.post(
        "/guard/transmission",
        json={
            "site": "wilson-hall",
            "freq_low_hz": 471e6,
            "freq_high_hz": 475e6,
            "tx_power_w": 2.0,
        },
    )
    assert ok.json() is None

    rogue = client.post(
        "/guard/transmission",
        json={
            "site": "ue-3",
            "freq_low_hz": 470e6,
            "freq_high_hz": 476e6,
            "tx_power_w": 1.0,
        },
    ).json()
    assert rogue["kind"] == "unauthorized_transmission"
    assert rogue["revoke_at_s"] == 1.0

    kinds = [e["kind"] for e in client.get("/guard/events").json()]
    assert kinds == ["config_denied", "unauthorized_transmission"]


def test_clock_endpoints(client):
    assert client.get("/clock").json() == {"now_s": 0.0}
    assert client.post("/clock/advance", json={"dt_s": 12.5}).json() == {"now_s": 12.5}
    assert client.post("/clock/advance", json={"dt_s": -1.0}).status_code == 400


def test_state_survives_service_restart(tmp_path):
    state = tmp_path / "state"
    with TestClient(create_app(state_dir=state)) as first:
        first.post("/leases", json=LEASE_BODY)
    with TestClient(create_app(state_dir=state)) as second:
        lease = second.get("/leases/L-0001").json()
        assert lease["state"] == "granted"
        assert lease["request"]["requester"] == "alice"
