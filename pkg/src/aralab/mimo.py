"""Massive-MIMO user grouping and per-resource-block scheduling.

Streams are grouped for spatial multiplexing by channel orthogonality:
one minus the multiple correlation coefficient of a stream's vector
against the rest of the group (amplitude convention; the squared
variant sits behind a flag). Group rates come from zero-forcing with
equal power split. The greedy scheduler grows groups by marginal
capacity subject to an orthogonality floor and always also considers
the everyone-together group, so it can never do worse than forcing all
streams into one group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .rng import RngStream

__all__ = [
    "RbPlan",
    "ChannelMatrix",
    "GroupOrthogonality",
    "GroupCapacity",
    "UnschedulableGroup",
    "orthogonality",
    "group_capacity",
    "Schedule",
    "schedule_rbs",
    "aggregate_capacity",
    "synth_channels",
    "seven_ue_scenario",
    "set_comparison",
]

# Ill-conditioning guard for the zero-forcing Gram inverse.
_MAX_CONDITION = 1e12


@dataclass(frozen=True)
class RbPlan:
    """Resource-block layout of the carrier."""

    n_rbs: int = 42
    rb_bandwidth_hz: float = 540e3

    @property
    def total_bandwidth_hz(self) -> float:
        return self.n_rbs * self.rb_bandwidth_hz


@dataclass
class ChannelMatrix:
    """Per-RB channel rows, one per stream, columns per BS antenna."""

    h: np.ndarray  # complex, shape (n_streams, n_antennas)
    stream_ues: tuple[int, ...] = ()  # owning UE index per stream

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim != 2:
            raise ValueError("channel matrix must be 2-D (streams x antennas)")
        if not self.stream_ues:
            self.stream_ues = tuple(range(self.h.shape[0]))

    @property
    def n_streams(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class GroupOrthogonality:
    min_value: float
    mean_value: float
    per_stream: tuple[float, ...]


class UnschedulableGroup(ValueError):
    """The group's channel rows are (numerically) linearly dependent."""


def _as_matrix(channel: ChannelMatrix | np.ndarray) -> np.ndarray:
    if isinstance(channel, ChannelMatrix):
        return channel.h
    return np.asarray(channel, dtype=complex)


def orthogonality(
    channel: ChannelMatrix | np.ndarray,
    group: Sequence[int],
    power: bool = False,
) -> GroupOrthogonality:
    """Group orthogonality: min over members of 1 - R_i, where R_i is
    the multiple correlation of stream i against the others.

    A singleton has orthogonality 1; a stream lying in the span of its
    peers scores 0. With power=True the squared coefficient is used.
    """
    h = _as_matrix(channel)
    group = list(group)
    if not group:
        raise ValueError("group must not be empty")
    if len(set(group)) != len(group):
        raise ValueError("group contains duplicate streams")
    for i in group:
        if not 0 <= i < h.shape[0]:
            raise ValueError(f"stream index {i} out of range")
    values = []
    for i in group:
        others = [j for j in group if j != i]
        hi = h[i]
        norm_i = np.linalg.norm(hi)
        if norm_i == 0:
            raise ValueError(f"stream {i} has a zero channel vector")
        if not others:
            values.append(1.0)
            continue
        basis, _ = np.linalg.qr(h[others].conj().T)  # (M, r) orthonormal columns
        proj = basis @ (basis.conj().T @ hi)
        r = float(np.linalg.norm(proj) / norm_i)
        r = min(max(r, 0.0), 1.0)
        values.append(1.0 - (r * r if power else r))
    values_t = tuple(values)
    return GroupOrthogonality(min(values_t), sum(values_t) / len(values_t), values_t)


@dataclass(frozen=True)
class GroupCapacity:
    sinr: tuple[float, ...]
    per_stream_bps: tuple[float, ...]
    total_bps: float


def group_capacity(
    channel: ChannelMatrix | np.ndarray,
    group: Sequence[int],
    rb_bandwidth_hz: float,
    tx_power: float = 1.0,
    noise_power: float = 1.0,
    se_cap: float | None = None,
) -> GroupCapacity:
    """Zero-forcing sum rate of a stream group on one resource block.

    Power is split equally; per-stream SINR follows the ZF post-
    processing gain 1/[(H H^H)^-1]_ii. Linearly dependent rows raise
    UnschedulableGroup.
    """
    h = _as_matrix(channel)
    group = list(group)
    if not group:
        raise ValueError("group must not be empty")
    H = h[group]
    if len(group) > h.shape[1]:
        raise UnschedulableGroup(
            f"{len(group)} streams cannot be zero-forced on {h.shape[1]} antennas"
        )
    gram = H @ H.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise UnschedulableGroup(f"group {tuple(group)} Gram matrix is singular (cond={cond:.2e})")
    inv_diag = np.real(np.diag(np.linalg.inv(gram)))
    per_power = tx_power / len(group)
    sinr = per_power / (noise_power * inv_diag)
    eff = np.log2(1.0 + sinr)
    if se_cap is not None:
        eff = np.minimum(eff, se_cap)
    rates = rb_bandwidth_hz * eff
    return GroupCapacity(tuple(float(s) for s in sinr), tuple(float(r) for r in rates), float(rates.sum()))


@dataclass
class Schedule:
    plan: RbPlan
    policy: str
    rb_groups: list[tuple[int, ...]]
    rb_capacities_bps: list[float]

    def group_size_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for g in self.rb_groups:
            hist[len(g)] = hist.get(len(g), 0) + 1
        return dict(sorted(hist.items()))

    @property
    def max_group_size(self) -> int:
        return max((len(g) for g in self.rb_groups), default=0)


def aggregate_capacity(schedule: Schedule) -> float:
    return float(sum(schedule.rb_capacities_bps))


def _capacity_or_zero(
    channel: ChannelMatrix,
    group: Sequence[int],
    plan: RbPlan,
    tx_power: float,
    noise_power: float,
    se_cap: float | None,
) -> float:
    try:
        return group_capacity(channel, group, plan.rb_bandwidth_hz, tx_power, noise_power, se_cap).total_bps
    except UnschedulableGroup:
        return 0.0


def _greedy_rb_group(
    channel: ChannelMatrix,
    plan: RbPlan,
    orth_threshold: float,
    tx_power: float,
    noise_power: float,
    se_cap: float | None,
) -> tuple[tuple[int, ...], float]:
    n = channel.n_streams
    singles = [
        (_capacity_or_zero(channel, [s], plan, tx_power, noise_power, se_cap), s) for s in range(n)
    ]
    best_cap, best_s = max(singles, key=lambda t: (t[0], -t[1]))
    group = [best_s]
    total = best_cap
    while True:
        best_gain = 0.0
        best_candidate: int | None = None
        best_total = total
        for s in range(n):
            if s in group:
                continue
            trial = group + [s]
            if orthogonality(channel, trial).min_value < orth_threshold:
                continue
            cap = _capacity_or_zero(channel, trial, plan, tx_power, noise_power, se_cap)
            gain = cap - total
            if gain > best_gain + 1e-12 or (
                gain > 1e-12 and best_candidate is not None and math.isclose(gain, best_gain) and s < best_candidate
            ):
                best_gain, best_candidate, best_total = gain, s, cap
        if best_candidate is None:
            break
        group.append(best_candidate)
        total = best_total
    # The all-stream group is always considered too; keep the winner.
    all_streams = tuple(range(n))
    all_cap = _capacity_or_zero(channel, all_streams, plan, tx_power, noise_power, se_cap)
    if all_cap > total:
        return all_streams, all_cap
    return tuple(sorted(group)), total


def schedule_rbs(
    channels: Sequence[ChannelMatrix],
    plan: RbPlan | None = None,
    policy: str = "greedy",
    orth_threshold: float = 0.25,
    tx_power: float = 1.0,
    noise_power: float = 1.0,
    se_cap: float | None = None,
) -> Schedule:
    """Build one stream group per resource block.

    greedy: grow by best marginal capacity subject to the orthogonality
    floor (and compare with the all-stream group). force_all: put every
    stream in the group regardless of orthogonality; capacity may
    collapse, and an unschedulable group scores zero.
    """
    if plan is None:
        plan = RbPlan()
    if policy not in ("greedy", "force_all"):
        raise ValueError(f"unknown policy {policy!r}")
    if len(channels) != plan.n_rbs:
        raise ValueError(f"expected {plan.n_rbs} per-RB channels, got {len(channels)}")
    groups: list[tuple[int, ...]] = []
    caps: list[float] = []
    for channel in channels:
        if policy == "force_all":
            group = tuple(range(channel.n_streams))
            cap = _capacity_or_zero(channel, group, plan, tx_power, noise_power, se_cap)
        else:
            group, cap = _greedy_rb_group(channel, plan, orth_threshold, tx_power, noise_power, se_cap)
        groups.append(group)
        caps.append(cap)
    return Schedule(plan=plan, policy=policy, rb_groups=groups, rb_capacities_bps=caps)


def synth_channels(
    rng: RngStream,
    n_ues: int = 7,
    streams_per_ue: int = 2,
    n_antennas: int = 14,
    n_rbs: int = 42,
    clusters: Sequence[Sequence[int]] = (),
    cluster_corr: float = 0.95,
) -> list[ChannelMatrix]:
    """Rayleigh channels per RB; UEs listed in a cluster share a spatial
    signature with pairwise correlation cluster_corr (co-location
    stand-in). Unlisted UEs are independent."""
    if not 0.0 <= cluster_corr < 1.0:
        raise ValueError("cluster_corr must lie in [0, 1)")
    gen = rng.generator
    cluster_of: dict[int, int] = {}
    for ci, members in enumerate(clusters):
        for ue in members:
            if ue in cluster_of:
                raise ValueError(f"UE {ue} listed in more than one cluster")
            if not 0 <= ue < n_ues:
                raise ValueError(f"cluster UE index {ue} out of range")
            cluster_of[ue] = ci

    def cgauss(size) -> np.ndarray:
        return (gen.standard_normal(size) + 1j * gen.standard_normal(size)) / math.sqrt(2.0)

    out = []
    stream_ues = tuple(ue for ue in range(n_ues) for _ in range(streams_per_ue))
    for _ in range(n_rbs):
        shared = {ci: cgauss(n_antennas) for ci in range(len(clusters))}
        rows = []
        for ue in range(n_ues):
            for _s in range(streams_per_ue):
                g = cgauss(n_antennas)
                if ue in cluster_of:
                    c = shared[cluster_of[ue]]
                    rows.append(math.sqrt(cluster_corr) * c + math.sqrt(1.0 - cluster_corr) * g)
                else:
                    rows.append(g)
        out.append(ChannelMatrix(np.stack(rows), stream_ues))
    return out


# Per-RB transmit SNR used by the calibrated demo scenarios; fitted so
# the seven-UE aggregate sits near 400 Mbps on the default plan.
SCENARIO_TX_POWER = 3.0
SCENARIO_NOISE = 1.0


def seven_ue_scenario(seed: int, policy: str = "greedy", orth_threshold: float = 0.25) -> Schedule:
    """Seven spread UEs, two RF chains each, on the default RB plan."""
    rng = RngStream(seed, "mimo/seven-ue")
    channels = synth_channels(rng, n_ues=7, streams_per_ue=2, n_antennas=14, n_rbs=42)
    return schedule_rbs(
        channels,
        RbPlan(),
        policy=policy,
        orth_threshold=orth_threshold,
        tx_power=SCENARIO_TX_POWER,
        noise_power=SCENARIO_NOISE,
    )


def set_comparison(seed: int, n_ues: int = 4) -> dict[str, Schedule]:
    """Spread vs clustered UE sets on identical plans.

    spread: independent UE signatures. clustered: all UEs share one
    signature at 0.95 correlation, the co-location case that suppresses
    group size and capacity.
    """
    plan = RbPlan()
    rng_spread = RngStream(seed, "mimo/spread")
    rng_clustered = RngStream(seed, "mimo/clustered")
    spread = synth_channels(rng_spread, n_ues=n_ues, n_rbs=plan.n_rbs)
    clustered = synth_channels(
        rng_clustered, n_ues=n_ues, n_rbs=plan.n_rbs, clusters=[list(range(n_ues))], cluster_corr=0.95
    )
    kwargs = dict(tx_power=SCENARIO_TX_POWER, noise_power=SCENARIO_NOISE)
    return {
        "spread": schedule_rbs(spread, plan, **kwargs),
        "clustered": schedule_rbs(clustered, plan, **kwargs),
    }
