"""User grouping and RB scheduling: orthogonality metric, ZF rates, schedulers."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aralab.mimo import (
    ChannelMatrix,
    RbPlan,
    SCENARIO_NOISE,
    SCENARIO_TX_POWER,
    UnschedulableGroup,
    aggregate_capacity,
    group_capacity,
    orthogonality,
    schedule_rbs,
    set_comparison,
    seven_ue_scenario,
    synth_channels,
)
from aralab.rng import RngStream


# --- orthogonality ----------------------------------------------------------


def test_singleton_is_fully_orthogonal():
    h = np.array([[1.0 + 1j, 2.0, 0.5]])
    result = orthogonality(h, [0])
    assert result.min_value == 1.0
    assert result.per_stream == (1.0,)


def test_orthogonality_statistics_are_consistent():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    result = orthogonality(h, [0, 1, 2, 3])
    assert len(result.per_stream) == 4
    assert result.min_value == min(result.per_stream)
    assert result.mean_value == pytest.approx(sum(result.per_stream) / 4)
    assert all(0.0 <= v <= 1.0 for v in result.per_stream)


def test_power_convention_squares_the_correlation():
    rng = np.random.default_rng(4)
    h = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    amp = orthogonality(h, [0, 1, 2]).per_stream
    pwr = orthogonality(h, [0, 1, 2], power=True).per_stream
    for a, p in zip(amp, pwr):
        # amplitude value 1-r corresponds to power value 1-r^2
        assert p == pytest.approx(1.0 - (1.0 - a) ** 2, abs=1e-12)


@given(scale=st.floats(min_value=0.01, max_value=100.0), seed=st.integers(0, 50))
def test_orthogonality_invariant_under_row_scaling(scale, seed):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
    scaled = h * np.array([[scale], [1.0], [1.0 / scale]])
    base = orthogonality(h, [0, 1, 2]).per_stream
    after = orthogonality(scaled, [0, 1, 2]).per_stream
    assert after == pytest.approx(base, abs=1e-9)


def test_orthogonality_input_validation():
    h = np.eye(3)
    with pytest.raises(ValueError, match="empty"):
        orthogonality(h, [])
    with pytest.raises(ValueError, match="duplicate"):
        orthogonality(h, [0, 0])
    with pytest.raises(ValueError, match="range"):
        orthogonality(h, [0, 5])
    with pytest.raises(ValueError, match="zero"):
        orthogonality(np.array([[0.0, 0.0], [1.0, 0.0]]), [0, 1])


# --- zero-forcing group capacity -------------------------------------------


def test_zf_rate_on_orthonormal_rows():
    # Orthogonal rows: no ZF penalty, each stream gets (tx/k)/noise.
    h = np.eye(2, 4)
    cap = group_capacity(h, [0, 1], rb_bandwidth_hz=540e3, tx_power=3.0, noise_power=1.0)
    assert cap.sinr == pytest.approx((1.5, 1.5))
    expected = 540e3 * math.log2(2.5)
    assert cap.per_stream_bps == pytest.approx((expected, expected))
    assert cap.total_bps == pytest.approx(2 * expected)


def test_zf_rate_on_correlated_pair():
    # Rows at 60 degrees: Gram [[1, .5], [.5, 1]], inverse diagonal
    # 1/(1-0.25), so each stream's SINR is (tx/2) * 0.75 / noise.
    h = np.array([[1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    cap = group_capacity(h, [0, 1], rb_bandwidth_hz=1.0, tx_power=2.0, noise_power=1.0)
    assert cap.sinr == pytest.approx((0.75, 0.75))
    assert cap.total_bps == pytest.approx(2 * math.log2(1.75))


def test_zf_rejects_more_streams_than_antennas():
    h = np.ones((3, 2)) + 1j * np.arange(6).reshape(3, 2)
    with pytest.raises(UnschedulableGroup, match="antennas"):
        group_capacity(h, [0, 1, 2], rb_bandwidth_hz=1.0)


def test_zf_rejects_singular_gram():
    h = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])  # duplicate direction
    with pytest.raises(UnschedulableGroup, match="singular"):
        group_capacity(h, [0, 1], rb_bandwidth_hz=1.0)


def test_spectral_efficiency_cap_clamps_rates():
    h = np.eye(2, 4)
    cap = group_capacity(
        h, [0, 1], rb_bandwidth_hz=540e3, tx_power=1e9, noise_power=1.0, se_cap=7.4
    )
    assert cap.per_stream_bps == pytest.approx((540e3 * 7.4, 540e3 * 7.4))


# --- schedulers -------------------------------------------------------------


def test_schedule_shape_and_histogram():
    schedule = seven_ue_scenario(42)
    assert len(schedule.rb_groups) == 42
    assert len(schedule.rb_capacities_bps) == 42
    hist = schedule.group_size_histogram()
    assert sum(hist.values()) == 42
    assert schedule.max_group_size == max(hist)
    assert aggregate_capacity(schedule) == pytest.approx(sum(schedule.rb_capacities_bps))


def test_greedy_groups_respect_orthogonality_floor():
    rng = RngStream(11, "mimo/floor-check")
    channels = synth_channels(rng, n_ues=4, n_rbs=8)
    schedule = schedule_rbs(
        channels, RbPlan(n_rbs=8), orth_threshold=0.25,
        tx_power=SCENARIO_TX_POWER, noise_power=SCENARIO_NOISE,
    )
    for channel, group in zip(channels, schedule.rb_groups):
        if len(group) < 2:
            continue
        all_streams = tuple(range(channel.n_streams))
        # The all-stream comparison group may legitimately ignore the floor.
        if group != all_streams:
            assert orthogonality(channel, group).min_value >= 0.25


def test_force_all_puts_every_stream_in_the_group():
    rng = RngStream(12, "mimo/force-all")
    channels = synth_channels(rng, n_ues=3, n_rbs=4)
    schedule = schedule_rbs(channels, RbPlan(n_rbs=4), policy="force_all")
    assert all(g == tuple(range(6)) for g in schedule.rb_groups)


def test_greedy_never_below_force_all_single_instance():
    rng = RngStream(13, "mimo/policy-compare")
    channels = synth_channels(rng, n_ues=5, n_rbs=10)
    kwargs = dict(tx_power=SCENARIO_TX_POWER, noise_power=SCENARIO_NOISE)
    greedy = schedule_rbs(channels, RbPlan(n_rbs=10), policy="greedy", **kwargs)
    forced = schedule_rbs(channels, RbPlan(n_rbs=10), policy="force_all", **kwargs)
    assert aggregate_capacity(greedy) >= aggregate_capacity(forced)


def test_schedule_validation():
    rng = RngStream(14, "mimo/validation")
    channels = synth_channels(rng, n_ues=2, n_rbs=3)
    with pytest.raises(ValueError, match="per-RB channels"):
        schedule_rbs(channels, RbPlan(n_rbs=4))
    with pytest.raises(ValueError, match="policy"):
        schedule_rbs(channels, RbPlan(n_rbs=3), policy="round_robin")


def test_scenario_is_deterministic():
    a = seven_ue_scenario(7)
    b = seven_ue_scenario(7)
    assert a.rb_groups == b.rb_groups
    assert a.rb_capacities_bps == b.rb_capacities_bps


# --- synthetic channels -----------------------------------------------------


def test_synth_channel_shapes_and_stream_owners():
    rng = RngStream(21, "mimo/shapes")
    channels = synth_channels(rng, n_ues=3, streams_per_ue=2, n_antennas=5, n_rbs=4)
    assert len(channels) == 4
    for ch in channels:
        assert ch.h.shape == (6, 5)
        assert ch.stream_ues == (0, 0, 1, 1, 2, 2)


def _mean_pair_correlation(channels, i, j):
    vals = []
    for ch in channels:
        a, b = ch.h[i], ch.h[j]
        vals.append(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return float(np.mean(vals))


def test_clustered_ues_share_a_spatial_signature():
    rng_c = RngStream(22, "mimo/clustered")
    rng_s = RngStream(22, "mimo/spread")
    clustered = synth_channels(rng_c, n_ues=2, n_rbs=42, clusters=[[0, 1]], cluster_corr=0.95)
    spread = synth_channels(rng_s, n_ues=2, n_rbs=42)
    # streams 0 and 2 belong to different UEs
    assert _mean_pair_correlation(clustered, 0, 2) > 0.8
    assert _mean_pair_correlation(spread, 0, 2) < 0.5


def test_synth_channel_validation():
    rng = RngStream(23, "mimo/validate")
    with pytest.raises(ValueError, match="cluster_corr"):
        synth_channels(rng, n_ues=2, clusters=[[0, 1]], cluster_corr=1.0)
    with pytest.raises(ValueError, match="more than one"):
        synth_channels(rng, n_ues=2, clusters=[[0], [0]])
    with pytest.raises(ValueError, match="range"):
        synth_channels(rng, n_ues=2, clusters=[[5]])


def test_set_comparison_orders_spread_above_clustered():
    schedules = set_comparison(3)
    assert set(schedules) == {"spread", "clustered"}
    assert aggregate_capacity(schedules["spread"]) > aggregate_capacity(
        schedules["clustered"]
    )


def test_channel_matrix_requires_2d():
    with pytest.raises(ValueError, match="2-D"):
        ChannelMatrix(np.ones(4))
