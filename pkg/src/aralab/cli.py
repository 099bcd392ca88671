"""Command line client for the lab service.

Every subcommand except ``serve`` is a thin HTTP client: it talks to a
running service (``ara-lab serve``) and prints what came back. Nothing
here reimplements simulator logic.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
import yaml

DEFAULT_BASE_URL = "http://127.0.0.1:8421"


def _make_client(base_url: str) -> httpx.Client:
    """Build the HTTP client; tests swap this for an in-process one."""
    return httpx.Client(base_url=base_url, timeout=300.0)


def _client(ctx: click.Context) -> httpx.Client:
    return _make_client(ctx.obj["base_url"])


def _fail_on_error(resp: httpx.Response) -> None:
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise click.ClickException(f"{resp.status_code}: {detail}")


def _print_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


@click.group()
@click.option("--base-url", default=DEFAULT_BASE_URL, show_default=True, help="Service address.")
@click.pass_context
def main(ctx: click.Context, base_url: str) -> None:
    """Desk-scale wireless living lab: scenarios, leases, guard."""
    ctx.ensure_object(dict)
    ctx.obj["base_url"] = base_url


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8421, show_default=True, type=int)
@click.option("--state-dir", type=click.Path(path_type=Path), default=None, help="JSONL persistence directory.")
def serve(host: str, port: int, state_dir: Path | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(state_dir=state_dir), host=host, port=port)


@main.command()
@click.argument("config", type=click.Path(exists=True, path_type=Path))
@click.option("--output-root", default=None, help="Results root (defaults to service-side resolution).")
@click.pass_context
def run(ctx: click.Context, config: Path, output_root: str | None) -> None:
    """Run a scenario config and print its manifest."""
    cfg = yaml.safe_load(config.read_text())
    with _client(ctx) as client:
        resp = client.post("/scenarios/run", json={"config": cfg, "output_root": output_root})
        _fail_on_error(resp)
        body = resp.json()
    click.echo(f"pipeline: {body['pipeline']}  seed: {body['seed']}")
    click.echo(f"results:  {body['out_dir']}")
    for name, meta in sorted(body["manifest"]["outputs"].items()):
        click.echo(f"  {name}: {meta['file']}  sha256={meta['sha256'][:12]}")


@main.command()
@click.argument("config", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def validate(ctx: click.Context, config: Path) -> None:
    """Validate a scenario config without running it."""
    cfg = yaml.safe_load(config.read_text())
    with _client(ctx) as client:
        resp = client.post("/scenarios/validate", json={"config": cfg})
        _fail_on_error(resp)
        body = resp.json()
    if body["valid"]:
        click.echo("valid")
    else:
        for p in body["problems"]:
            click.echo(f"problem: {p}")
        sys.exit(1)


@main.command()
@click.pass_context
def pipelines(ctx: click.Context) -> None:
    """List available scenario pipelines."""
    with _client(ctx) as client:
        resp = client.get("/scenarios/pipelines")
        _fail_on_error(resp)
    for name in resp.json()["pipelines"]:
        click.echo(name)


# ---------------------------------------------------------------------------
# Leases

@main.group()
def lease() -> None:
    """Reserve and inspect resource leases."""


@lease.command("request")
@click.option("--requester", required=True)
@click.option("--start", "start_s", type=float, required=True)
@click.option("--end", "end_s", type=float, required=True)
@click.option("--resource", "resources", multiple=True, required=True)
@click.option("--platform", required=True)
@click.option("--freq-low", "freq_low_hz", type=float, default=None)
@click.option("--freq-high", "freq_high_hz", type=float, default=None)
@click.option("--power", "tx_power_w", type=float, default=0.0)
@click.pass_context
def lease_request(ctx: click.Context, **kwargs) -> None:
    """Submit a lease request; prints the admission decision."""
    kwargs["resources"] = list(kwargs["resources"])
    with _client(ctx) as client:
        resp = client.post("/leases", json=kwargs)
        _fail_on_error(resp)
        body = resp.json()
    click.echo(f"{body['id']}: {body['state']}")
    for c in body["conflicts"]:
        click.echo(f"  conflict[{c['reason']}] with {c['other_lease_id']}: {c['detail']}")


@lease.command("list")
@click.pass_context
def lease_list(ctx: click.Context) -> None:
    with _client(ctx) as client:
        resp = client.get("/leases")
        _fail_on_error(resp)
    for l in resp.json():
        r = l["request"]
        click.echo(
            f"{l['id']} {l['state']:8s} {r['requester']:12s} "
            f"[{r['start_s']:.0f}, {r['end_s']:.0f}) {r['platform']} {','.join(r['resources'])}"
        )


@lease.command("release")
@click.argument("lease_id")
@click.pass_context
def lease_release(ctx: click.Context, lease_id: str) -> None:
    with _client(ctx) as client:
        resp = client.delete(f"/leases/{lease_id}")
        _fail_on_error(resp)
    click.echo(f"{lease_id}: {resp.json()['state']}")


# ---------------------------------------------------------------------------
# Experiments

@main.group()
def exp() -> None:
    """Launch and track experiments inside a lease."""


@exp.command("launch")
@click.option("--lease", "lease_id", required=True)
@click.option("--image-bytes", type=float, default=2.5e9, show_default=True)
@click.option("--duration", "duration_s", type=float, default=600.0, show_default=True)
@click.pass_context
def exp_launch(ctx: click.Context, lease_id: str, image_bytes: float, duration_s: float) -> None:
    with _client(ctx) as client:
        resp = client.post(
            "/experiments",
            json={"lease_id": lease_id, "image_bytes": image_bytes, "duration_s": duration_s},
        )
        _fail_on_error(resp)
        body = resp.json()
    click.echo(f"{body['id']}: {body['phase']}")
    click.echo(
        f"  fetch {body['fetch_s']:.1f}s + launch {body['launch_s']:.1f}s "
        f"(fetch fraction {body['fetch_fraction_of_launch']:.2f}), ready at t={body['ready_at_s']:.1f}s"
    )


@exp.command("status")
@click.argument("experiment_id")
@click.pass_context
def exp_status(ctx: click.Context, experiment_id: str) -> None:
    with _client(ctx) as client:
        resp = client.get(f"/experiments/{experiment_id}")
        _fail_on_error(resp)
    _print_json(resp.json())


# ---------------------------------------------------------------------------
# Guard

@main.group()
def guard() -> None:
    """Compliance guard: config screening and the event log."""


@guard.command("check")
@click.option("--lease", "lease_id", required=True)
@click.option("--freq-low", "freq_low_hz", type=float, required=True)
@click.option("--freq-high", "freq_high_hz", type=float, required=True)
@click.option("--power", "tx_power_w", type=float, required=True)
@click.pass_context
def guard_check(ctx: click.Context, **kwargs) -> None:
    with _client(ctx) as client:
        resp = client.post("/guard/config-check", json=kwargs)
        _fail_on_error(resp)
        body = resp.json()
    click.echo("allowed" if body["allowed"] else f"denied: {','.join(body['violations'])}")


@guard.command("report")
@click.option("--site", required=True)
@click.option("--freq-low", "freq_low_hz", type=float, required=True)
@click.option("--freq-high", "freq_high_hz", type=float, required=True)
@click.option("--power", "tx_power_w", type=float, required=True)
@click.option("--lease", "lease_id", default=None)
@click.pass_context
def guard_report(ctx: click.Context, **kwargs) -> None:
    """Report an observed transmission for authorization screening."""
    with _client(ctx) as client:
        resp = client.post("/guard/transmission", json=kwargs)
        _fail_on_error(resp)
        body = resp.json()
    if body is None:
        click.echo("authorized")
    else:
        click.echo(f"{body['kind']} lease={body['lease_id']} revoke_at={body['revoke_at_s']}")


@guard.command("events")
@click.pass_context
def guard_events(ctx: click.Context) -> None:
    with _client(ctx) as client:
        resp = client.get("/guard/events")
        _fail_on_error(resp)
    for ev in resp.json():
        extra = f" revoke_at={ev['revoke_at_s']}" if ev.get("revoke_at_s") is not None else ""
        click.echo(f"t={ev['t_s']:.3f} {ev['kind']} lease={ev['lease_id']} {ev['detail']}{extra}")


# ---------------------------------------------------------------------------
# Clock

@main.group()
def clock() -> None:
    """Inspect or advance the service simulation clock."""


@clock.command("show")
@click.pass_context
def clock_show(ctx: click.Context) -> None:
    with _client(ctx) as client:
        resp = client.get("/clock")
        _fail_on_error(resp)
    click.echo(f"t={resp.json()['now_s']}")


@clock.command("advance")
@click.argument("dt_s", type=float)
@click.pass_context
def clock_advance(ctx: click.Context, dt_s: float) -> None:
    with _client(ctx) as client:
        resp = client.post("/clock/advance", json={"dt_s": dt_s})
        _fail_on_error(resp)
    click.echo(f"t={resp.json()['now_s']}")


if __name__ == "__main__":
    main()
