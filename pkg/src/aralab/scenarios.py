"""Reproducible experiment pipelines over the simulator modules.

A scenario is a small YAML/dict config naming a pipeline, a seed, and
parameters. Running one produces a self-describing results directory:
data files plus a manifest recording the config hash, seed, package
version, and a checksum for every output. Reruns of the same config
are byte-identical (the manifest's created_at timestamp aside), which
is the property the archive layer leans on.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from . import __version__, coverage, fsoc, mimo, radio, stack_delay, telemetry, transport, xhaul
from .catalog import PlatformCatalog, default_catalog_path, load_platform_catalog
from .orchestrator import LeaseRequest, LeaseValidationError, Orchestrator, conflict_between
from .rng import RngStream
from .topology import Topology, default_topology_path, load_topology
from .weather import CLEAR, Weather

__all__ = [
    "ScenarioError",
    "ScenarioResult",
    "PIPELINES",
    "load_scenario_config",
    "validate_scenario_config",
    "run_scenario",
    "example_config_dir",
    "example_configs",
]

OUTPUT_ROOT_ENV = "ARA_LAB_OUTPUT_ROOT"


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioResult:
    pipeline: str
    seed: int
    out_dir: Path
    manifest: dict


# ---------------------------------------------------------------------------
# Small deterministic writers

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def _load_world(params: dict) -> tuple[PlatformCatalog, Topology]:
    cat_path = params.get("catalog", default_catalog_path())
    topo_path = params.get("topology", default_topology_path())
    return load_platform_catalog(cat_path), load_topology(topo_path)


# ---------------------------------------------------------------------------
# Pipelines

def _pipe_capacity_profile(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    catalog, topo = _load_world(params)
    platform_ids = params.get("platforms", ["AraMIMO-TVWS", "AraMIMO-C", "AraMIMO-mm", "AraSDR"])
    src = params.get("from_site", "wilson-hall")
    dst = params.get("to_site", "ue-7")
    step = float(params.get("step_m", 50.0))
    rain = float(params.get("rain_mm_h", 0.0))
    weather = Weather(rain_rate_mm_h=rain)

    _, profile = topo.distance_and_profile(src, dst)
    route = profile.points(step)
    columns: dict[str, dict[float, float]] = {}
    for pid in platform_ids:
        plat = catalog.get(pid)
        columns[pid] = dict(radio.capacity_profile(plat, radio.deployed_config(plat), route, weather))

    rows = []
    for pt in route:
        if pt.distance_m <= 0:
            continue
        rows.append(
            [pt.distance_m, pt.state]
            + [columns[pid].get(pt.distance_m, 0.0) for pid in platform_ids]
        )
    csv_path = _write_csv(outdir / "capacity_profile.csv", ["distance_m", "terrain"] + [f"{p}_bps" for p in platform_ids], rows)

    ue_sites = [s.id for s in topo.ue_sites()]
    ue_rows = {}
    for ue in ue_sites:
        d, prof = topo.distance_and_profile(src, ue)
        state = prof.state_at(max(d - 1e-9, 0.0))
        ue_rows[ue] = {
            "distance_m": d,
            "terrain": state,
            **{
                pid: radio.ran_capacity(
                    catalog.get(pid), radio.deployed_config(catalog.get(pid)), d, weather, state
                )
                for pid in platform_ids
            },
        }
    summary = {
        "platforms": platform_ids,
        "route": {"from": src, "to": dst, "points": len(rows)},
        "rain_mm_h": rain,
        "ue_capacity_bps": ue_rows,
        "range_with_service_m": {
            pid: max((d for d, c in columns[pid].items() if c > 1e6), default=0.0) for pid in platform_ids
        },
    }
    summary_path = _write_json(outdir / "summary.json", summary)
    return {"profile": csv_path, "summary": summary_path}


def _pipe_coverage_map(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    catalog, topo = _load_world(params)
    pid = params.get("platform", "AraMIMO-TVWS")
    n_samples = int(params.get("samples", 160))
    cell = float(params.get("cell_size_m", 250.0))
    half = float(params.get("half_width_m", 4000.0))
    shadow_db = float(params.get("shadowing_sigma_db", 3.0))
    plat = catalog.get(pid)
    cfg = radio.RanLinkConfig(bandwidth_hz=plat.max_bandwidth_hz, tx_power_w=plat.max_tx_power_w)
    rng = RngStream(seed, "scenario/coverage")

    samples = []
    gen = rng.generator
    for _ in range(n_samples):
        x = gen.uniform(-half, half)
        y = gen.uniform(-half, half)
        d = math.hypot(x, y)
        snr = radio.ran_snr_db(plat, cfg, max(d, 25.0)) + gen.normal(0.0, shadow_db)
        samples.append((x, y, snr))
    fit = coverage.fit_coverage_map(samples, (-half, -half, half, half), cell)
    grid_path = outdir / "coverage_grid.csv"
    grid_path.write_text(coverage.grid_to_csv(fit.grid))

    thr = plat.cal("demod_threshold_db", radio.DEFAULT_DEMOD_THRESHOLD_DB)
    frac = float(np.mean(fit.grid.values >= thr))
    summary = {
        "platform": pid,
        "samples": n_samples,
        "cell_size_m": cell,
        "residual": fit.residual,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "demod_threshold_db": thr,
        "fraction_above_threshold": frac,
        "value_range_db": [float(fit.grid.values.min()), float(fit.grid.values.max())],
    }
    return {"grid": grid_path, "summary": _write_json(outdir / "summary.json", summary)}


def _pipe_mimo_sets(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    greedy = mimo.seven_ue_scenario(seed, policy="greedy")
    forced = mimo.seven_ue_scenario(seed, policy="force_all")
    sets = mimo.set_comparison(seed)
    rows = [
        [rb, len(g), cap]
        for rb, (g, cap) in enumerate(zip(greedy.rb_groups, greedy.rb_capacities_bps))
    ]
    csv_path = _write_csv(outdir / "rb_schedule.csv", ["rb", "group_size", "capacity_bps"], rows)
    summary = {
        "greedy_aggregate_bps": mimo.aggregate_capacity(greedy),
        "force_all_aggregate_bps": mimo.aggregate_capacity(forced),
        "greedy_histogram": greedy.group_size_histogram(),
        "spread_aggregate_bps": mimo.aggregate_capacity(sets["spread"]),
        "clustered_aggregate_bps": mimo.aggregate_capacity(sets["clustered"]),
        "spread_max_group": sets["spread"].max_group_size,
        "clustered_max_group": sets["clustered"].max_group_size,
    }
    return {"schedule": csv_path, "summary": _write_json(outdir / "summary.json", summary)}


def _pipe_xhaul_weather(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    catalog, topo = _load_world(params)
    a = params.get("site_a", "wilson-hall")
    b = params.get("site_b", "agronomy-farm")
    rains = params.get("rain_mm_h", [0.0, 1.0, 2.5, 5.0, 10.0, 15.0, 25.0, 40.0, 60.0])
    d = topo.distance(a, b)

    micro = catalog.get("AraHaul-micro")
    mm = catalog.get("AraHaul-mm")
    opt = fsoc.OpticalLinkSpec.from_platform(catalog.get("AraOptical"))
    micro_cfg = xhaul.XhaulLinkConfig(bandwidth_hz=100e6, mcs="qam4096", tx_power_dbm=26.0)
    mm_cfg = xhaul.XhaulLinkConfig(bandwidth_hz=2e9, mcs="qam32", tx_power_dbm=13.0)

    rows = []
    kill = {"microwave": None, "mmwave": None, "optical": None}
    for r in rains:
        w = Weather(rain_rate_mm_h=float(r))
        sm = xhaul.xhaul_link_state(micro, micro_cfg, d, w)
        sx = xhaul.xhaul_link_state(mm, mm_cfg, d, w)
        so = fsoc.fsoc_link_state(opt, d, weather=w, locked=True)
        rows.append([float(r), sm.throughput_bps, int(sm.available), sx.throughput_bps, int(sx.available), so.throughput_bps, int(so.available)])
        for name, avail in (("microwave", sm.available), ("mmwave", sx.available), ("optical", so.available)):
            if not avail and kill[name] is None:
                kill[name] = float(r)
    csv_path = _write_csv(
        outdir / "xhaul_weather.csv",
        ["rain_mm_h", "microwave_bps", "microwave_up", "mmwave_bps", "mmwave_up", "optical_bps", "optical_up"],
        rows,
    )
    clear_total = rows[0][1] + rows[0][3] + rows[0][5]
    summary = {
        "span_m": d,
        "first_rain_down_mm_h": kill,
        "clear_aggregate_bps": clear_total,
        "microwave_clear_bps": rows[0][1],
        "mmwave_clear_bps": rows[0][3],
        "optical_clear_bps": rows[0][5],
    }
    return {"sweep": csv_path, "summary": _write_json(outdir / "summary.json", summary)}


def _pipe_fsoc_align(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    catalog, topo = _load_world(params)
    opt = fsoc.OpticalLinkSpec.from_platform(catalog.get("AraOptical"))
    d = float(params.get("distance_m", topo.distance("wilson-hall", "agronomy-farm")))
    offset_deg = params.get("initial_offset_deg", [1.0, 0.0])
    err0 = (math.radians(float(offset_deg[0])), math.radians(float(offset_deg[1])))
    trace = fsoc.run_alignment(opt, err0, distance_m=d)
    rows = [[t, mode, apd, rx, err * 1e6] for t, mode, apd, rx, err in trace.rows]
    trace_path = _write_csv(outdir / "alignment_trace.csv", ["t_s", "mode", "apd_v", "rx_dbm", "err_urad"], rows)

    scint_rows = []
    for r in params.get("scint_rain_mm_h", [0.0, 5.0, 12.5, 25.0]):
        series = fsoc.scintillation_series(RngStream(seed, f"scenario/scint/{r}"), float(r), 20.0)
        scint_rows.append(
            [float(r), float(series.fade_db.std()), float(series.cmos_mean_pixel.mean()), float(series.cmos_mean_pixel.var()), float(series.apd_voltage_v.mean())]
        )
    scint_path = _write_csv(
        outdir / "scintillation.csv",
        ["rain_mm_h", "fade_std_db", "pixel_mean", "pixel_var", "apd_mean_v"],
        scint_rows,
    )
    transitions = [[step, mode, err * 1e6] for step, mode, err in trace.mode_transitions]
    errs = [e for _, _, e in trace.mode_transitions]
    summary = {
        "distance_m": d,
        "converged": trace.converged,
        "frames_to_lock": trace.steps,
        "final_error_urad": trace.final_error_rad * 1e6,
        "transitions": transitions,
        "error_strictly_decreasing": all(y < x for x, y in zip(errs, errs[1:])),
        "locked_rx_dbm": fsoc.fsoc_rx_power(opt, d, trace.final_error_rad),
    }
    return {
        "trace": trace_path,
        "scintillation": scint_path,
        "summary": _write_json(outdir / "summary.json", summary),
    }


def _pipe_delay_cdf(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    n = int(params.get("packets", 2000))
    bound = float(params.get("bound_ms", 10.0))
    clear = stack_delay.simulate_stream(RngStream(seed, "scenario/delay/clear"), n, stack_delay.profile_clear)
    rain = stack_delay.simulate_stream(RngStream(seed, "scenario/delay/rain"), n, stack_delay.profile_heavy_rain)

    def cdf_rows(journeys):
        totals = np.sort([j.total_ms for j in journeys])
        return [[float(t), (i + 1) / len(totals)] for i, t in enumerate(totals)]

    clear_csv = _write_csv(outdir / "delay_cdf_clear.csv", ["total_ms", "cdf"], cdf_rows(clear))
    rain_csv = _write_csv(outdir / "delay_cdf_rain.csv", ["total_ms", "cdf"], cdf_rows(rain))

    sample = clear[: int(params.get("log_packets", 50))]
    log_path = outdir / "events.log"
    with open(log_path, "w") as fp:
        stack_delay.write_event_log(sample, fp)
    with open(log_path) as fp:
        recon = stack_delay.reconstruct_journeys(stack_delay.parse_event_log(fp))
    exact = all(
        r.total_ms == j.total_ms and r.layer_ms == j.layer_ms and r.segments == j.segments
        for r, j in zip(recon, sample)
    )

    summary = {
        "packets": n,
        "bound_ms": bound,
        "clear": {k: v for k, v in stack_delay.delay_cdf(clear, bound).items() if k != "totals_ms"},
        "rain": {k: v for k, v in stack_delay.delay_cdf(rain, bound).items() if k != "totals_ms"},
        "clear_layers": stack_delay.layer_contributions(clear),
        "rain_layers": stack_delay.layer_contributions(rain),
        "event_log_reconstruction_exact": exact,
    }
    return {
        "cdf_clear": clear_csv,
        "cdf_rain": rain_csv,
        "events": log_path,
        "summary": _write_json(outdir / "summary.json", summary),
    }


def _pipe_ltl_qoe(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    trace_path = Path(params.get("trace", transport.default_loss_trace_path()))
    trace = transport.load_loss_trace(trace_path)
    reports = {t: transport.run_stream_session(trace, t, seed=seed) for t in ("ltl", "udp")}
    n_sec = len(reports["ltl"].fps_per_second)
    rows = [
        [s, trace.rate_at(s + 0.5), reports["ltl"].fps_per_second[s], reports["udp"].fps_per_second[s]]
        for s in range(n_sec)
    ]
    fps_csv = _write_csv(outdir / "fps_timeline.csv", ["second", "loss_rate", "ltl_fps", "udp_fps"], rows)
    summary = {
        t: {
            "frames": r.frames,
            "on_time": r.on_time,
            "late": r.late,
            "lost": r.lost,
            "on_time_fraction": r.on_time_fraction,
            "delivered_fraction": r.delivered_fraction,
            "stall_total_ms": r.stall_total_ms,
            "stall_ratio": r.stall_ratio,
            "mean_displayed_fps": r.mean_displayed_fps,
            "overhead_fraction": r.overhead_fraction,
        }
        for t, r in reports.items()
    }
    return {"fps": fps_csv, "summary": _write_json(outdir / "summary.json", summary)}


def _pipe_orchestrator_fuzz(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    catalog, topo = _load_world(params)
    n = int(params.get("requests", 150))
    horizon = float(params.get("horizon_s", 7200.0))
    rng = RngStream(seed, "scenario/fuzz").generator
    orc = Orchestrator(catalog, topo, state_dir=outdir / "state")

    sites = [s.id for s in topo.bs_sites()]
    pids = [p.id for p in catalog if p.kind == "ran"]
    granted, denied, invalid = 0, 0, 0
    for i in range(n):
        pid = pids[rng.integers(len(pids))]
        plat = catalog.get(pid)
        start = float(rng.uniform(0, horizon))
        dur = float(rng.uniform(300, 1800))
        width = float(rng.uniform(0.2, 0.8)) * (plat.freq_high_hz - plat.freq_low_hz)
        lo = plat.freq_low_hz + float(rng.uniform(0, 1)) * (plat.freq_high_hz - plat.freq_low_hz - width)
        power = float(rng.uniform(0.1, 1.2)) * plat.max_tx_power_w
        req = LeaseRequest(
            requester=f"user-{i:03d}",
            start_s=start,
            end_s=start + dur,
            resources=(sites[rng.integers(len(sites))],),
            platform=pid,
            freq_low_hz=lo,
            freq_high_hz=lo + width,
            tx_power_w=power,
        )
        try:
            lease = orc.request_lease(req)
        except LeaseValidationError:
            invalid += 1
            continue
        if lease.granted:
            granted += 1
        else:
            denied += 1

    # Safety audit: no two granted leases may conflict pairwise.
    live = [l for l in orc.leases.values() if l.granted]
    violations = []
    for i, la in enumerate(live):
        for lb in live[i + 1 :]:
            c = conflict_between(la.request, lb.request, lb.id, catalog, topo)
            if c is not None:
                violations.append([la.id, lb.id, c.reason])
    summary = {
        "requests": n,
        "granted": granted,
        "denied": denied,
        "invalid": invalid,
        "pairwise_violations": violations,
        "safe": not violations,
    }
    return {"summary": _write_json(outdir / "summary.json", summary)}


def _pipe_telemetry(params: dict, seed: int, outdir: Path) -> dict[str, Path]:
    catalog, topo = _load_world(params)
    sites = params.get("sites", [s.id for s in topo.bs_sites()][:3])
    ws = telemetry.weather_feed(RngStream(seed, "scenario/wx"), sites, float(params.get("weather_duration_s", 21600.0)))
    wrows = [
        [float(t)] + [float(ws.rain_mm_h[s][i]) for s in sites]
        for i, t in enumerate(ws.t_s)
    ]
    weather_csv = _write_csv(outdir / "weather.csv", ["t_s"] + [f"{s}_rain_mm_h" for s in sites], wrows)

    pt = telemetry.power_series(
        RngStream(seed, "scenario/power"),
        float(params.get("power_duration_s", 600.0)),
        tx_windows=[(120.0, 480.0)],
        n_ues=int(params.get("n_ues", 6)),
    )
    prow = [
        [float(t), float(w), float(a), int(x)]
        for t, w, a, x in zip(pt.t_s, pt.power_w, pt.current_a, pt.transmitting)
    ]
    power_csv = _write_csv(outdir / "power.csv", ["t_s", "power_w", "current_a", "transmitting"], prow)

    scan = telemetry.spectrum_scan(RngStream(seed, "scenario/scan"))
    occ = scan.occupancy_fraction()
    free = set(scan.free_channels())
    srows = [
        [scan.channel_start + i, float(occ[i]), int(scan.channel_start + i in free)]
        for i in range(scan.n_channels)
    ]
    scan_csv = _write_csv(outdir / "spectrum_occupancy.csv", ["channel", "occupancy", "free"], srows)

    r0 = np.array([ws.rain_mm_h[sites[0]], ws.rain_mm_h[sites[1]]])
    corr = float(np.corrcoef(np.log(r0[0] + 1e-6), np.log(r0[1] + 1e-6))[0, 1])
    idle_mask = pt.t_s < 120.0
    tx_mask = (pt.t_s > 130.0) & (pt.t_s < 470.0)
    summary = {
        "sites": list(sites),
        "rain_corr_first_pair": corr,
        "baseline_total_w": telemetry.BASELINE_TOTAL_W,
        "baseline_total_a": telemetry.BASELINE_TOTAL_A,
        "tvws_share": telemetry.subsystem_share("tvws"),
        "transmit_factor": telemetry.transmit_factor(int(params.get("n_ues", 6))),
        "idle_mean_w": float(pt.power_w[idle_mask].mean()),
        "tx_mean_w": float(pt.power_w[tx_mask].mean()),
        "keying_dip_w": float(pt.power_w[int(120.0)]),
        "noise_floor_dbm": scan.noise_floor_dbm(),
        "free_channels": sorted(free),
    }
    return {
        "weather": weather_csv,
        "power": power_csv,
        "spectrum": scan_csv,
        "summary": _write_json(outdir / "summary.json", summary),
    }


PIPELINES: dict[str, Callable[[dict, int, Path], dict[str, Path]]] = {
    "capacity_profile": _pipe_capacity_profile,
    "coverage_map": _pipe_coverage_map,
    "mimo_sets": _pipe_mimo_sets,
    "xhaul_weather": _pipe_xhaul_weather,
    "fsoc_align": _pipe_fsoc_align,
    "delay_cdf": _pipe_delay_cdf,
    "ltl_qoe": _pipe_ltl_qoe,
    "orchestrator_fuzz": _pipe_orchestrator_fuzz,
    "telemetry": _pipe_telemetry,
}


# ---------------------------------------------------------------------------
# Config handling and the runner

def load_scenario_config(path: str | Path) -> dict:
    with open(path) as fp:
        cfg = yaml.safe_load(fp)
    if not isinstance(cfg, dict):
        raise ScenarioError(f"scenario config must be a mapping: {path}")
    return cfg


def validate_scenario_config(cfg: dict) -> list[str]:
    problems = []
    if not isinstance(cfg, dict):
        return ["config must be a mapping"]
    pipeline = cfg.get("pipeline")
    if pipeline is None:
        problems.append("missing required key 'pipeline'")
    elif pipeline not in PIPELINES:
        problems.append(f"unknown pipeline {pipeline!r}; known: {sorted(PIPELINES)}")
    seed = cfg.get("seed")
    if seed is None:
        problems.append("missing required key 'seed'")
    elif not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append("'seed' must be a non-negative integer")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        problems.append("'params' must be a mapping when present")
    for key in cfg:
        if key not in ("pipeline", "seed", "params", "description"):
            problems.append(f"unknown key {key!r}")
    return problems


def _config_hash(cfg: dict) -> str:
    canon = json.dumps(_jsonable(cfg), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def run_scenario(config: dict | str | Path, output_root: str | Path | None = None) -> ScenarioResult:
    cfg = load_scenario_config(config) if isinstance(config, (str, Path)) else dict(config)
    problems = validate_scenario_config(cfg)
    if problems:
        raise ScenarioError("; ".join(problems))
    pipeline = cfg["pipeline"]
    seed = int(cfg["seed"])
    params = cfg.get("params", {})

    root = Path(output_root or os.environ.get(OUTPUT_ROOT_ENV) or "results")
    h = _config_hash(cfg)
    outdir = root / f"{pipeline}-seed{seed}-{h[:8]}"
    outdir.mkdir(parents=True, exist_ok=True)

    outputs = PIPELINES[pipeline](params, seed, outdir)

    manifest = {
        "pipeline": pipeline,
        "seed": seed,
        "version": __version__,
        "config_sha256": h,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "outputs": {
            name: {
                "file": str(path.relative_to(outdir)),
                "sha256": hashlib.sha256(path.read_bytes()).hexdigest(),
            }
            for name, path in sorted(outputs.items())
        },
    }
    _write_json(outdir / "manifest.json", manifest)
    return ScenarioResult(pipeline=pipeline, seed=seed, out_dir=outdir, manifest=manifest)


def example_config_dir() -> Path:
    return Path(__file__).parent / "data" / "scenarios"


def example_configs() -> list[Path]:
    return sorted(example_config_dir().glob("*.yaml"))
