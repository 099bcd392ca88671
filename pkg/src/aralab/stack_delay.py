"""Per-layer downlink latency decomposition for the 5G user plane.

Each packet is walked through SDAP, PDCP, RLC, MAC, and PHY with
per-layer residence times driven by the link SINR: the scheduler picks
a rate level, the transport-block size fixes how many RLC segments the
packet splinters into, and the block error rate drives HARQ
retransmissions. Every packet emits an enter/exit event pair per layer
(plus auxiliary pairs for segments and retransmissions), and the
journey can be reconstructed exactly from the event log alone.

Timestamps are kept on an integer nanosecond lattice so that
reconstruction from the text log is bit-exact, not merely close.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .rng import RngStream

__all__ = [
    "LAYERS",
    "RateLevel",
    "RATE_LEVELS",
    "prb_count",
    "tbs_bytes",
    "select_level",
    "block_error_rate",
    "StackConfig",
    "PacketJourney",
    "LayerEvent",
    "simulate_packet",
    "simulate_stream",
    "profile_clear",
    "profile_heavy_rain",
    "write_event_log",
    "parse_event_log",
    "reconstruct_journeys",
    "delay_cdf",
    "layer_contributions",
]

LAYERS = ("sdap", "pdcp", "rlc", "mac", "phy")

# 30 kHz subcarrier spacing: 0.5 ms slots, 12 subcarriers x 6 data
# symbols assumed usable per PRB per slot after control overhead.
SLOT_MS = 0.5
_RE_PER_PRB = 12 * 6
# HARQ round trip in slots (grant, NACK, regrant).
_HARQ_RTT_SLOTS = 8
_MAX_HARQ = 16

# Usable PRBs by channel bandwidth at 30 kHz spacing.
_PRB_BY_BW_HZ = {
    10e6: 24,
    20e6: 51,
    40e6: 106,
    60e6: 162,
    80e6: 217,
    100e6: 273,
}


def prb_count(bandwidth_hz: float) -> int:
    try:
        return _PRB_BY_BW_HZ[float(bandwidth_hz)]
    except KeyError:
        raise ValueError(f"no PRB entry for bandwidth {bandwidth_hz} Hz") from None


@dataclass(frozen=True)
class RateLevel:
    index: int
    efficiency_bits_re: float
    min_sinr_db: float
    bler_ref_db: float  # SINR where the block error rate hits 1.0
    phy_extra_ms: float


# Five-step link adaptation ladder. Block error falls one decade per
# 2 dB above the reference point of the active level.
RATE_LEVELS = (
    RateLevel(0, 0.665, -math.inf, 1.671, 0.0000),
    RateLevel(1, 1.5, 8.0, 6.0, 0.0002),
    RateLevel(2, 3.0, 12.0, 10.0, 0.0004),
    RateLevel(3, 5.0, 16.0, 14.0, 0.0006),
    RateLevel(4, 7.4, 20.0, 14.95, 0.0008),
)

_BLER_DECADE_DB = 2.0


def select_level(sinr_db: float) -> RateLevel:
    """Highest rate level whose SINR floor the link clears."""
    chosen = RATE_LEVELS[0]
    for level in RATE_LEVELS:
        if sinr_db >= level.min_sinr_db:
            chosen = level
    return chosen


def block_error_rate(sinr_db: float, level: RateLevel) -> float:
    return min(1.0, 10.0 ** (-(sinr_db - level.bler_ref_db) / _BLER_DECADE_DB))


def tbs_bytes(level: RateLevel, n_prb: int) -> int:
    """Transport block size per slot, in bytes."""
    return int(n_prb * _RE_PER_PRB * level.efficiency_bits_re) // 8


@dataclass(frozen=True)
class StackConfig:
    bandwidth_hz: float = 40e6
    packet_bytes: int = 102400  # one 100 KiB application burst
    # Fixed per-layer processing residences, ms.
    sdap_ms: float = 0.00355
    pdcp_ms: float = 0.0070
    rlc_per_segment_ms: float = 0.00893
    mac_base_ms: float = 0.080
    phy_base_ms: float = 0.0178
    jitter_frac: float = 0.10

    @property
    def n_prb(self) -> int:
        return prb_count(self.bandwidth_hz)


@dataclass(frozen=True)
class LayerEvent:
    timestamp_ms: float
    layer: str
    edge: str  # "in" | "out"
    packet_id: int
    segment_id: int

    def to_line(self) -> str:
        return f"{self.timestamp_ms:.6f} {self.layer} {self.edge} {self.packet_id} {self.segment_id}"

    @classmethod
    def from_line(cls, line: str) -> "LayerEvent":
        t, layer, edge, pkt, seg = line.split()
        return cls(float(t), layer, edge, int(pkt), int(seg))


@dataclass
class PacketJourney:
    packet_id: int
    sinr_db: float
    level: int
    segments: int
    harq_retx: int
    layer_ms: dict[str, float]
    transmission_time_ms: float
    total_ms: float
    events: list[LayerEvent] = field(default_factory=list)


def profile_clear(rng: RngStream) -> float:
    """Steady mid-cell link: 22 dB SINR every packet."""
    return 22.0


def profile_heavy_rain(rng: RngStream) -> float:
    """Heavy-rain link: 30 percent of packets arrive during deep fades."""
    return 4.0 if rng.random() < 0.3 else 22.0


def _quantize_ms(x: float) -> float:
    """Snap a millisecond value onto the nanosecond lattice."""
    return round(x * 1e6) / 1e6


def simulate_packet(
    rng: RngStream,
    packet_id: int = 0,
    sinr_db: float = 22.0,
    config: StackConfig = StackConfig(),
    start_ms: float = 0.0,
) -> PacketJourney:
    level = select_level(sinr_db)
    tbs = tbs_bytes(level, config.n_prb)
    segments = max(1, math.ceil(config.packet_bytes / tbs))
    bler = block_error_rate(sinr_db, level)
    retx = 0
    while retx < _MAX_HARQ and rng.random() < bler:
        retx += 1

    jitter = lambda: 1.0 + rng.uniform(-config.jitter_frac, config.jitter_frac)
    layer_ms = {
        "sdap": _quantize_ms(config.sdap_ms * jitter()),
        "pdcp": _quantize_ms(config.pdcp_ms * jitter()),
        # Segmentation cost plus one scheduling slot per segment.
        "rlc": _quantize_ms((config.rlc_per_segment_ms + SLOT_MS) * segments * jitter()),
        # Grant processing plus one HARQ round trip per retransmission.
        "mac": _quantize_ms((config.mac_base_ms + retx * _HARQ_RTT_SLOTS * SLOT_MS) * jitter()),
        "phy": _quantize_ms((config.phy_base_ms + level.phy_extra_ms) * jitter()),
    }
    transmission = SLOT_MS  # airtime of the final transport block

    events: list[LayerEvent] = []
    t = _quantize_ms(start_ms)
    for layer in LAYERS:
        d = layer_ms[layer]
        t_in, t_out = t, _quantize_ms(t + d)
        events.append(LayerEvent(t_in, layer, "in", packet_id, 0))
        if layer == "rlc":
            # Auxiliary pairs: each RLC segment occupies an equal slice.
            for s in range(1, segments + 1):
                a = _quantize_ms(t_in + d * (s - 1) / segments)
                b = _quantize_ms(t_in + d * s / segments)
                events.append(LayerEvent(a, "rlc", "in", packet_id, s))
                events.append(LayerEvent(b, "rlc", "out", packet_id, s))
        elif layer == "mac" and retx > 0:
            for r in range(1, retx + 1):
                a = _quantize_ms(t_in + d * (r - 1) / retx)
                b = _quantize_ms(t_in + d * r / retx)
                events.append(LayerEvent(a, "mac", "in", packet_id, r))
                events.append(LayerEvent(b, "mac", "out", packet_id, r))
        events.append(LayerEvent(t_out, layer, "out", packet_id, 0))
        t = t_out
    # Final airtime rides as an auxiliary PHY pair after processing.
    events.append(LayerEvent(t, "phy", "in", packet_id, 1))
    events.append(LayerEvent(_quantize_ms(t + transmission), "phy", "out", packet_id, 1))

    residence = sum(layer_ms.values())
    return PacketJourney(
        packet_id=packet_id,
        sinr_db=sinr_db,
        level=level.index,
        segments=segments,
        harq_retx=retx,
        layer_ms=layer_ms,
        transmission_time_ms=transmission,
        total_ms=_quantize_ms(residence + transmission),
        events=events,
    )


def simulate_stream(
    rng: RngStream,
    n_packets: int,
    profile: Callable[[RngStream], float] = profile_clear,
    config: StackConfig = StackConfig(),
    inter_arrival_ms: float = 100.0,
) -> list[PacketJourney]:
    """Independent packet journeys on a common arrival clock."""
    out = []
    for i in range(n_packets):
        sinr = profile(rng)
        out.append(simulate_packet(rng, i, sinr, config, start_ms=i * inter_arrival_ms))
    return out


# ---------------------------------------------------------------------------
# Event log round trip

def write_event_log(journeys: Iterable[PacketJourney], fp: TextIO) -> int:
    n = 0
    for j in journeys:
        for ev in j.events:
            fp.write(ev.to_line() + "\n")
            n += 1
    return n


def parse_event_log(fp: TextIO) -> list[LayerEvent]:
    out = []
    for line in fp:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(LayerEvent.from_line(line))
    return out


@dataclass
class ReconstructedJourney:
    packet_id: int
    layer_ms: dict[str, float]
    segments: int
    harq_retx: int
    transmission_time_ms: float
    total_ms: float


def _ns(t_ms: float) -> int:
    return round(t_ms * 1e6)


def reconstruct_journeys(events: Sequence[LayerEvent]) -> list[ReconstructedJourney]:
    """Rebuild per-packet layer residences from the raw event log.

    Works purely from event pairs: the segment-0 pair per layer bounds
    that layer's residence, auxiliary RLC pairs count segments,
    auxiliary MAC pairs count retransmissions, and the PHY segment-1
    pair is the final airtime.
    """
    by_packet: dict[int, dict[tuple[str, int, str], int]] = {}
    aux_rlc: dict[int, set[int]] = {}
    aux_mac: dict[int, set[int]] = {}
    for ev in events:
        slots = by_packet.setdefault(ev.packet_id, {})
        slots[(ev.layer, ev.segment_id, ev.edge)] = _ns(ev.timestamp_ms)
        if ev.segment_id > 0:
            if ev.layer == "rlc":
                aux_rlc.setdefault(ev.packet_id, set()).add(ev.segment_id)
            elif ev.layer == "mac":
                aux_mac.setdefault(ev.packet_id, set()).add(ev.segment_id)

    out = []
    for pkt in sorted(by_packet):
        slots = by_packet[pkt]
        layer_ms = {}
        for layer in LAYERS:
            try:
                t_in = slots[(layer, 0, "in")]
                t_out = slots[(layer, 0, "out")]
            except KeyError:
                raise ValueError(f"packet {pkt}: incomplete event pair for layer {layer!r}") from None
            layer_ms[layer] = (t_out - t_in) / 1e6
        tx = 0.0
        if ("phy", 1, "in") in slots and ("phy", 1, "out") in slots:
            tx = (slots[("phy", 1, "out")] - slots[("phy", 1, "in")]) / 1e6
        total = sum(layer_ms.values()) + tx
        out.append(
            ReconstructedJourney(
                packet_id=pkt,
                layer_ms=layer_ms,
                segments=len(aux_rlc.get(pkt, {1})),
                harq_retx=len(aux_mac.get(pkt, set())),
                transmission_time_ms=tx,
                total_ms=round(total * 1e6) / 1e6,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Summaries

def delay_cdf(journeys: Sequence[PacketJourney], bound_ms: float = 10.0) -> dict:
    totals = np.sort(np.array([j.total_ms for j in journeys]))
    within = float(np.mean(totals <= bound_ms)) if totals.size else 0.0
    q = lambda p: float(np.quantile(totals, p)) if totals.size else math.nan
    return {
        "count": int(totals.size),
        "bound_ms": bound_ms,
        "fraction_within_bound": within,
        "mean_ms": float(totals.mean()) if totals.size else math.nan,
        "p50_ms": q(0.50),
        "p95_ms": q(0.95),
        "p99_ms": q(0.99),
        "totals_ms": totals,
    }


def layer_contributions(journeys: Sequence[PacketJourney]) -> dict[str, dict[str, float]]:
    """Mean residence and share of the total, per layer plus airtime."""
    if not journeys:
        return {}
    means = {layer: float(np.mean([j.layer_ms[layer] for j in journeys])) for layer in LAYERS}
    means["transmission"] = float(np.mean([j.transmission_time_ms for j in journeys]))
    total = sum(means.values())
    return {k: {"mean_ms": v, "share": v / total if total > 0 else 0.0} for k, v in means.items()}
