"""Point-to-point x-haul: link budgets, rain fading, adaptive MCS, routing.

Two radio families are modeled after the deployed hardware: licensed
microwave around 11 GHz (narrow channels, very dense QAM) and E-band
around 80 GHz (multi-GHz channels, moderate QAM). Throughput is the
family's spectral efficiency times channel bandwidth, derated by a
fixed framing overhead; a link is up whenever SNR clears the MCS
demodulation requirement.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .catalog import PlatformCatalog, PlatformSpec
from .topology import LinkSpec, Topology
from .units import fspl_db, thermal_noise_dbm, watts_to_dbm
from .weather import CLEAR, Weather

__all__ = [
    "McsEntry",
    "MICROWAVE_MCS",
    "MMWAVE_MCS",
    "MICROWAVE_BANDWIDTHS_HZ",
    "MMWAVE_BANDWIDTHS_HZ",
    "mcs_family_for",
    "rain_specific_attenuation_db_km",
    "rain_attenuation_db",
    "XhaulConfigError",
    "XhaulLinkConfig",
    "LinkState",
    "xhaul_link_state",
    "adapt_mcs",
    "Demand",
    "FlowAssignment",
    "route_flows",
]


@dataclass(frozen=True)
class McsEntry:
    name: str
    bits_per_symbol: int
    efficiency_bps_hz: float
    required_snr_db: float


# Licensed microwave: QPSK through 4096QAM. Efficiencies follow the
# vendor rate tables (4096QAM on a 100 MHz channel tops out at 925 Mbps
# before framing overhead).
MICROWAVE_MCS: tuple[McsEntry, ...] = (
    McsEntry("qpsk", 2, 1.54, 8.0),
    McsEntry("qam16", 4, 3.08, 14.0),
    McsEntry("qam64", 6, 4.63, 20.0),
    McsEntry("qam256", 8, 6.17, 26.0),
    McsEntry("qam1024", 10, 7.71, 31.0),
    McsEntry("qam4096", 12, 9.25, 36.0),
)

# E-band: QPSK through 256QAM; 128QAM on the full 2 GHz channel gives
# the 10 Gbps ceiling.
MMWAVE_MCS: tuple[McsEntry, ...] = (
    McsEntry("qpsk", 2, 10.0 / 7.0, 9.0),
    McsEntry("qam16", 4, 20.0 / 7.0, 15.0),
    McsEntry("qam32", 5, 25.0 / 7.0, 17.0),
    McsEntry("qam64", 6, 30.0 / 7.0, 21.0),
    McsEntry("qam128", 7, 5.0, 24.5),
    McsEntry("qam256", 8, 40.0 / 7.0, 28.0),
)

MICROWAVE_BANDWIDTHS_HZ: tuple[float, ...] = (
    3.75e6, 5e6, 10e6, 20e6, 25e6, 30e6, 40e6, 50e6, 60e6, 75e6, 80e6, 100e6,
)
MMWAVE_BANDWIDTHS_HZ: tuple[float, ...] = (250e6, 500e6, 750e6, 1e9, 1.5e9, 2e9)

# Boundary between the two radio families.
_MM_FAMILY_MIN_HZ = 30e9


class XhaulConfigError(ValueError):
    """Raised when a link configuration violates the platform envelope."""


def mcs_family_for(platform: PlatformSpec) -> tuple[McsEntry, ...]:
    if platform.center_freq_hz >= _MM_FAMILY_MIN_HZ:
        return MMWAVE_MCS
    return MICROWAVE_MCS


def _bandwidth_grid_for(platform: PlatformSpec) -> tuple[float, ...]:
    if platform.center_freq_hz >= _MM_FAMILY_MIN_HZ:
        return MMWAVE_BANDWIDTHS_HZ
    return MICROWAVE_BANDWIDTHS_HZ


def _mcs_entry(platform: PlatformSpec, name: str) -> McsEntry:
    for entry in mcs_family_for(platform):
        if entry.name == name:
            return entry
    raise XhaulConfigError(f"platform {platform.id!r} does not support mcs {name!r}")


# Specific rain attenuation power-law coefficients gamma = k * R^alpha
# (dB/km, R in mm/h), tabulated by frequency in GHz and interpolated in
# log-frequency. The 11 GHz row is a field calibration; the rest follow
# the standard tables.
_RAIN_COEFFS: tuple[tuple[float, float, float], ...] = (
    # (freq_ghz, k, alpha)
    (1.0, 0.0000387, 0.912),
    (4.0, 0.00065, 1.121),
    (6.0, 0.00175, 1.308),
    (8.0, 0.00454, 1.327),
    (10.0, 0.01217, 1.2571),
    (11.0, 0.0155, 1.08),
    (12.0, 0.02386, 1.1825),
    (15.0, 0.04481, 1.1233),
    (20.0, 0.09164, 1.0568),
    (25.0, 0.1571, 0.9991),
    (30.0, 0.2403, 0.9485),
    (40.0, 0.4001, 0.8816),
    (50.0, 0.5738, 0.8338),
    (60.0, 0.8606, 0.7656),
    (70.0, 0.97, 0.73),
    (80.0, 1.06, 0.70),
    (90.0, 1.16, 0.69),
    (100.0, 1.1946, 0.6876),
)


def _rain_k_alpha(freq_hz: float) -> tuple[float, float]:
    f = freq_hz / 1e9
    table = _RAIN_COEFFS
    if f <= table[0][0]:
        return table[0][1], table[0][2]
    if f >= table[-1][0]:
        return table[-1][1], table[-1][2]
    for (f0, k0, a0), (f1, k1, a1) in zip(table, table[1:]):
        if f0 <= f <= f1:
            t = (math.log(f) - math.log(f0)) / (math.log(f1) - math.log(f0))
            k = math.exp(math.log(k0) + t * (math.log(k1) - math.log(k0)))
            return k, a0 + t * (a1 - a0)
    raise AssertionError("unreachable")


def rain_specific_attenuation_db_km(freq_hz: float, rain_rate_mm_h: float) -> float:
    if rain_rate_mm_h < 0:
        raise ValueError("rain_rate_mm_h must be non-negative")
    if rain_rate_mm_h == 0:
        return 0.0
    k, alpha = _rain_k_alpha(freq_hz)
    return k * rain_rate_mm_h**alpha


def rain_attenuation_db(freq_hz: float, rain_rate_mm_h: float, path_m: float) -> float:
    return rain_specific_attenuation_db_km(freq_hz, rain_rate_mm_h) * (path_m / 1e3)


@dataclass(frozen=True)
class XhaulLinkConfig:
    bandwidth_hz: float
    mcs: str
    tx_power_dbm: float
    carrier_hz: float | None = None  # defaults to the platform center

    def validated(self, platform: PlatformSpec) -> "XhaulLinkConfig":
        problems = []
        grid = _bandwidth_grid_for(platform)
        if not any(math.isclose(self.bandwidth_hz, b) for b in grid):
            problems.append(f"bandwidth {self.bandwidth_hz:.3g} Hz not in supported grid")
        if self.bandwidth_hz > platform.max_bandwidth_hz:
            problems.append("bandwidth exceeds platform maximum")
        try:
            _mcs_entry(platform, self.mcs)
        except XhaulConfigError as exc:
            problems.append(str(exc))
        max_dbm = watts_to_dbm(platform.max_tx_power_w)
        if self.tx_power_dbm > max_dbm + 1e-9:
            problems.append(f"tx power {self.tx_power_dbm} dBm exceeds platform max {max_dbm:.2f} dBm")
        carrier = self.carrier_hz if self.carrier_hz is not None else platform.center_freq_hz
        if not platform.freq_low_hz <= carrier <= platform.freq_high_hz:
            problems.append("carrier outside platform frequency range")
        if problems:
            raise XhaulConfigError(f"platform {platform.id!r}: " + "; ".join(problems))
        return self


@dataclass(frozen=True)
class LinkState:
    rsl_dbm: float
    snr_db: float
    available: bool
    throughput_bps: float
    limit_bps: float
    rain_attenuation_db: float
    mcs: str


def xhaul_link_state(
    platform: PlatformSpec,
    config: XhaulLinkConfig,
    distance_m: float,
    weather: Weather = CLEAR,
) -> LinkState:
    config.validated(platform)
    entry = _mcs_entry(platform, config.mcs)
    carrier = config.carrier_hz if config.carrier_hz is not None else platform.center_freq_hz
    gain = platform.cal("antenna_gain_dbi")
    rain_att = rain_attenuation_db(carrier, weather.rain_rate_mm_h, distance_m)
    rsl = config.tx_power_dbm + 2.0 * gain - fspl_db(carrier, distance_m) - rain_att
    noise = thermal_noise_dbm(config.bandwidth_hz, platform.cal("noise_figure_db", 6.0))
    snr = rsl - noise
    available = snr >= entry.required_snr_db
    limit = entry.efficiency_bps_hz * config.bandwidth_hz
    overhead = platform.cal("throughput_overhead", 0.964)
    throughput = overhead * limit if available else 0.0
    return LinkState(
        rsl_dbm=rsl,
        snr_db=snr,
        available=available,
        throughput_bps=throughput,
        limit_bps=limit,
        rain_attenuation_db=rain_att,
        mcs=entry.name,
    )


def adapt_mcs(
    platform: PlatformSpec,
    distance_m: float,
    weather: Weather = CLEAR,
    bandwidth_hz: float | None = None,
    tx_power_dbm: float | None = None,
    margin_db: float = 3.0,
) -> str:
    """Highest MCS whose requirement plus margin fits the current SNR.

    Falls back to the lowest entry when nothing fits (for example an
    infinite margin), so callers always get a usable configuration.
    """
    family = mcs_family_for(platform)
    bw = bandwidth_hz if bandwidth_hz is not None else min(platform.max_bandwidth_hz, _bandwidth_grid_for(platform)[-1])
    tx = tx_power_dbm if tx_power_dbm is not None else watts_to_dbm(platform.max_tx_power_w)
    probe = XhaulLinkConfig(bandwidth_hz=bw, mcs=family[0].name, tx_power_dbm=tx)
    snr = xhaul_link_state(platform, probe, distance_m, weather).snr_db
    best = family[0].name
    for entry in family:
        if entry.required_snr_db + margin_db <= snr:
            best = entry.name
    return best


# ---------------------------------------------------------------------------
# Mesh routing


@dataclass(frozen=True)
class Demand:
    src: str
    dst: str
    offered_bps: float
    id: str = ""


@dataclass(frozen=True)
class FlowAssignment:
    demand: Demand
    path: tuple[str, ...]  # site ids, empty when unroutable
    edges: tuple[LinkSpec, ...]
    bottleneck_bps: float
    delivered_bps: float


def _edge_capacity(
    link: LinkSpec,
    catalog: PlatformCatalog,
    topo: Topology,
    weather: Weather,
) -> float:
    platform = catalog.get(link.platform)
    distance = topo.distance(link.a, link.b)
    if platform.kind == "optical":
        from .fsoc import OpticalLinkSpec, fsoc_link_state

        spec = OpticalLinkSpec.from_platform(platform, wdm_channels=link.wdm_channels or 16)
        state = fsoc_link_state(spec, distance, weather=weather, locked=True)
        return state.throughput_bps
    if platform.kind == "xhaul":
        config = XhaulLinkConfig(
            bandwidth_hz=link.bandwidth_hz or platform.max_bandwidth_hz,
            mcs=link.mcs or mcs_family_for(platform)[0].name,
            tx_power_dbm=link.tx_power_dbm if link.tx_power_dbm is not None else watts_to_dbm(platform.max_tx_power_w),
        )
        return xhaul_link_state(platform, config, distance, weather).throughput_bps
    raise XhaulConfigError(f"link {link.a}-{link.b}: platform kind {platform.kind!r} is not routable")


def _widest_path(
    adjacency: dict[str, list[tuple[str, int, float]]],
    src: str,
    dst: str,
) -> tuple[tuple[str, ...], tuple[int, ...], float]:
    """Maximize the bottleneck capacity; ties prefer fewer hops then
    lexicographically smaller node sequences. Returns (path, edge
    indices, bottleneck)."""
    # The heap orders by (-bottleneck, hops, path); the first pop for a
    # node is its widest path because bottlenecks only shrink along
    # extensions.
    heap: list[tuple[float, int, tuple[str, ...], tuple[int, ...]]] = [(-math.inf, 0, (src,), ())]
    settled: set[str] = set()
    while heap:
        neg_bn, hops, path, edge_ids = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return path, edge_ids, -neg_bn
        for nbr, edge_id, cap in adjacency.get(node, ()):
            if nbr in settled or cap <= 0:
                continue
            bn = min(-neg_bn, cap)
            heapq.heappush(heap, (-bn, hops + 1, path + (nbr,), edge_ids + (edge_id,)))
    return (), (), 0.0


def _fewest_hops_path(
    adjacency: dict[str, list[tuple[str, int, float]]],
    src: str,
    dst: str,
) -> tuple[tuple[str, ...], tuple[int, ...], float]:
    """BFS by hop count with lexicographic tie-break; among parallel
    edges picks the highest-capacity one."""
    from collections import deque

    queue = deque([(src, (src,), (), math.inf)])
    seen = {src}
    results = []
    while queue:
        node, path, edge_ids, bn = queue.popleft()
        if node == dst:
            results.append((len(path), path, edge_ids, bn))
            continue
        for nbr, edge_id, cap in sorted(
            adjacency.get(node, ()), key=lambda e: (e[0], -e[2], e[1])
        ):
            if nbr in seen or cap <= 0:
                continue
            seen.add(nbr)
            queue.append((nbr, path + (nbr,), edge_ids + (edge_id,), min(bn, cap)))
    if not results:
        return (), (), 0.0
    results.sort(key=lambda r: (r[0], r[1]))
    _, path, edge_ids, bn = results[0]
    return path, edge_ids, bn


def route_flows(
    topology: Topology,
    catalog: PlatformCatalog,
    demands: Iterable[Demand],
    weather: Weather = CLEAR,
    policy: str = "throughput_max",
    capacity_fn: Callable[[LinkSpec], float] | None = None,
) -> list[FlowAssignment]:
    """Assign each demand a path over the candidate links.

    throughput_max picks the widest (maximum-bottleneck) path; fixed
    picks the fewest-hops path. Capacity on shared links is split
    equally between the demands crossing them.
    """
    if policy not in ("throughput_max", "fixed"):
        raise ValueError(f"unknown policy {policy!r}")
    demands = list(demands)
    links = topology.links
    caps = []
    for link in links:
        if capacity_fn is not None:
            caps.append(float(capacity_fn(link)))
        else:
            caps.append(_edge_capacity(link, catalog, topology, weather))
    adjacency: dict[str, list[tuple[str, int, float]]] = {}
    for idx, link in enumerate(links):
        adjacency.setdefault(link.a, []).append((link.b, idx, caps[idx]))
        adjacency.setdefault(link.b, []).append((link.a, idx, caps[idx]))
    for nbrs in adjacency.values():
        # Deterministic relaxation order: widest first, then ids.
        nbrs.sort(key=lambda e: (-e[2], e[0], e[1]))

    chosen: list[tuple[tuple[str, ...], tuple[int, ...], float]] = []
    for demand in demands:
        topology.site(demand.src)
        topology.site(demand.dst)
        if policy == "throughput_max":
            chosen.append(_widest_path(adjacency, demand.src, demand.dst))
        else:
            chosen.append(_fewest_hops_path(adjacency, demand.src, demand.dst))

    # Equal split on shared edges.
    load: dict[int, int] = {}
    for _, edge_ids, _ in chosen:
        for eid in edge_ids:
            load[eid] = load.get(eid, 0) + 1
    out = []
    for demand, (path, edge_ids, _) in zip(demands, chosen):
        if not path or len(path) < 2:
            out.append(FlowAssignment(demand, (), (), 0.0, 0.0))
            continue
        shares = [caps[eid] / load[eid] for eid in edge_ids]
        bottleneck = min(caps[eid] for eid in edge_ids)
        delivered = min(demand.offered_bps, min(shares))
        out.append(
            FlowAssignment(
                demand,
                path,
                tuple(links[eid] for eid in edge_ids),
                bottleneck,
                delivered,
            )
        )
    return out
