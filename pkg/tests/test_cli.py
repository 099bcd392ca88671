"""Command line client, exercised against an in-process service."""

import json

import pytest
import yaml
from click.testing import CliRunner
from fastapi.testclient import TestClient

from aralab import cli
from aralab.service import create_app

LEASE_ARGS = [
    "lease", "request",
    "--requester", "alice",
    "--start", "0", "--end", "3600",
    "--resource", "wilson-hall",
    "--platform", "AraMIMO-TVWS",
    "--freq-low", "470e6", "--freq-high", "476e6",
    "--power", "5.0",
]


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def wired_app(tmp_path, monkeypatch):
    """In-process service; the CLI's HTTP client factory is pointed at it."""
    app = create_app(state_dir=tmp_path / "state")
    monkeypatch.setattr(cli, "_make_client", lambda base_url: TestClient(app))
    return app


def test_pipelines_listing(runner, wired_app):
    result = runner.invoke(cli.main, ["pipelines"])
    assert result.exit_code == 0
    names = result.output.split()
    assert len(names) == 9
    assert "delay_cdf" in names
    assert names == sorted(names)


def test_validate_command(runner, wired_app, tmp_path):
    good = tmp_path / "good.yaml"
    good.write_text(yaml.safe_dump({"pipeline": "delay_cdf", "seed": 1}))
    result = runner.invoke(cli.main, ["validate", str(good)])
    assert result.exit_code == 0
    assert result.output.strip() == "valid"

    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"pipeline": "delay_cdf"}))
    result = runner.invoke(cli.main, ["validate", str(bad)])
    assert result.exit_code == 1
    assert "problem:" in result.output
    assert "seed" in result.output


def test_run_command(runner, wired_app, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        yaml.safe_dump(
            {"pipeline": "delay_cdf", "seed": 5, "params": {"packets": 30, "log_packets": 3}}
        )
    )
    result = runner.invoke(
        cli.main, ["run", str(cfg), "--output-root", str(tmp_path / "out")]
    )
    assert result.exit_code == 0
    assert "pipeline: delay_cdf  seed: 5" in result.output
    assert "summary:" in result.output
    assert "sha256=" in result.output


def test_lease_commands(runner, wired_app):
    result = runner.invoke(cli.main, LEASE_ARGS)
    assert result.exit_code == 0
    assert "L-0001: granted" in result.output

    clash = [a if a != "alice" else "bob" for a in LEASE_ARGS]
    result = runner.invoke(cli.main, clash)
    assert result.exit_code == 0
    assert "L-0002: denied" in result.output
    assert "conflict[resource] with L-0001" in result.output

    result = runner.invoke(cli.main, ["lease", "list"])
    assert result.exit_code == 0
    assert "L-0001" in result.output and "alice" in result.output
    assert "L-0002" in result.output and "bob" in result.output

    result = runner.invoke(cli.main, ["lease", "release", "L-0001"])
    assert result.exit_code == 0
    assert "L-0001: released" in result.output

    result = runner.invoke(cli.main, ["lease", "release", "L-9999"])
    assert result.exit_code != 0
    assert "404" in result.output


def test_experiment_commands(runner, wired_app):
    runner.invoke(cli.main, LEASE_ARGS)
    result = runner.invoke(
        cli.main,
        ["exp", "launch", "--lease", "L-0001", "--image-bytes", "2.5e9", "--duration", "60"],
    )
    assert result.exit_code == 0
    assert "E-0001: fetching" in result.output
    assert "fetch 20.0s + launch 5.0s (fetch fraction 0.80)" in result.output

    result = runner.invoke(cli.main, ["exp", "status", "E-0001"])
    assert result.exit_code == 0
    assert json.loads(result.output)["phase"] == "fetching"

    result = runner.invoke(cli.main, ["exp", "status", "E-9999"])
    assert result.exit_code != 0
    assert "404" in result.output


def test_guard_commands(runner, wired_app):
    runner.invoke(cli.main, LEASE_ARGS)
    result = runner.invoke(
        cli.main,
        ["guard", "check", "--lease", "L-0001",
         "--freq-low", "471e6", "--freq-high", "475e6", "--power", "2.0"],
    )
    assert result.exit_code == 0
    assert result.output.strip() == "allowed"

    result = runner.invoke(
        cli.main,
        ["guard", "check", "--lease", "L-0001",
         "--freq-low", "480e6", "--freq-high", "490e6", "--power", "2.0"],
    )
    assert result.exit_code == 0
    assert "denied: out_of_band" in result.output

    result = runner.invoke(
        cli.main,
        ["guard", "report", "--site", "wilson-hall",
         "--freq-low", "471e6", "--freq-high", "475e6", "--power", "2.0"],
    )
    assert result.exit_code == 0
    assert result.output.strip() == "authorized"

    result = runner.invoke(
        cli.main,
        ["guard", "report", "--site", "ue-3",
         "--freq-low", "470e6", "--freq-high", "476e6", "--power", "1.0"],
    )
    assert result.exit_code == 0
    assert "unauthorized_transmission" in result.output
    assert "revoke_at=1.0" in result.output

    result = runner.invoke(cli.main, ["guard", "events"])
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert len(lines) == 2
    assert "config_denied" in lines[0]
    assert "unauthorized_transmission" in lines[1]


def test_clock_commands(runner, wired_app):
    result = runner.invoke(cli.main, ["clock", "show"])
    assert result.exit_code == 0
    assert result.output.strip() == "t=0.0"

    result = runner.invoke(cli.main, ["clock", "advance", "5.5"])
    assert result.exit_code == 0
    assert result.output.strip() == "t=5.5"

    result = runner.invoke(cli.main, ["clock", "advance", "--", "-1.0"])
    assert result.exit_code != 0
    assert "400" in result.output
