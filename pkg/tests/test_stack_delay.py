"""Per-layer downlink latency: rate ladder, HARQ, event log round trip."""

import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aralab.rng import RngStream
from aralab.stack_delay import (
    LAYERS,
    RATE_LEVELS,
    SLOT_MS,
    StackConfig,
    block_error_rate,
    delay_cdf,
    layer_contributions,
    parse_event_log,
    prb_count,
    profile_clear,
    profile_heavy_rain,
    reconstruct_journeys,
    select_level,
    simulate_packet,
    simulate_stream,
    tbs_bytes,
    write_event_log,
)

# --- rate ladder ------------------------------------------------------------


def test_prb_table():
    expected = {10e6: 24, 20e6: 51, 40e6: 106, 60e6: 162, 80e6: 217, 100e6: 273}
    for bw, n in expected.items():
        assert prb_count(bw) == n
    with pytest.raises(ValueError, match="PRB"):
        prb_count(15e6)


def test_transport_block_sizes_at_deployed_bandwidth():
    n_prb = prb_count(40e6)
    assert tbs_bytes(RATE_LEVELS[4], n_prb) == 7059
    assert tbs_bytes(RATE_LEVELS[0], n_prb) == 634


def test_select_level_thresholds():
    assert select_level(-5.0).index == 0
    assert select_level(7.9).index == 0
    assert select_level(8.0).index == 1
    assert select_level(12.0).index == 2
    assert select_level(16.0).index == 3
    assert select_level(20.0).index == 4
    assert select_level(22.0).index == 4


def test_block_error_rate_decade_slope():
    level = RATE_LEVELS[2]
    assert block_error_rate(level.bler_ref_db, level) == 1.0
    assert block_error_rate(level.bler_ref_db - 3.0, level) == 1.0  # clamped
    assert block_error_rate(level.bler_ref_db + 2.0, level) == pytest.approx(0.1)
    assert block_error_rate(level.bler_ref_db + 4.0, level) == pytest.approx(0.01)


def test_profiles():
    rng = RngStream(1, "delay/profiles")
    assert all(profile_clear(rng) == 22.0 for _ in range(10))
    draws = [profile_heavy_rain(rng) for _ in range(2000)]
    assert set(draws) == {4.0, 22.0}
    faded = sum(d == 4.0 for d in draws) / len(draws)
    assert 0.25 <= faded <= 0.35


# --- single packet ----------------------------------------------------------


def test_clear_sky_packet_structure():
    rng = RngStream(2, "delay/one-packet")
    j = simulate_packet(rng, packet_id=7, sinr_db=22.0)
    assert j.level == 4
    # 100 KiB burst over 7059-byte transport blocks
    assert j.segments == math.ceil(102400 / 7059) == 15
    assert j.transmission_time_ms == SLOT_MS
    assert j.total_ms == pytest.approx(sum(j.layer_ms.values()) + SLOT_MS, abs=1e-6)
    assert set(j.layer_ms) == set(LAYERS)
    # event stream is time-ordered and brackets every layer
    times = [e.timestamp_ms for e in j.events]
    assert times == sorted(times)
    assert j.events[0].layer == "sdap" and j.events[0].edge == "in"
    assert j.events[-1].layer == "phy" and j.events[-1].segment_id == 1
    expected_events = 2 * len(LAYERS) + 2 * j.segments + 2 * j.harq_retx + 2
    assert len(j.events) == expected_events


def test_deep_fade_packet_splinters_and_retransmits():
    rng = RngStream(3, "delay/fade-packet")
    j = simulate_packet(rng, sinr_db=4.0)
    assert j.level == 0
    assert j.segments == math.ceil(102400 / 634) == 162
    # one scheduling slot per segment dominates the RLC residence
    assert j.layer_ms["rlc"] > 0.9 * j.segments * SLOT_MS
    assert j.layer_ms["rlc"] > 50.0


def test_rain_multiplies_rlc_and_mac_residency():
    rng_a = RngStream(4, "delay/clear-stream")
    rng_b = RngStream(4, "delay/rain-stream")
    clear = layer_contributions(simulate_stream(rng_a, 200, profile_clear))
    rain = layer_contributions(simulate_stream(rng_b, 200, profile_heavy_rain))
    assert rain["rlc"]["mean_ms"] > 2.0 * clear["rlc"]["mean_ms"]
    assert rain["mac"]["mean_ms"] > 1.3 * clear["mac"]["mean_ms"]
    # fixed-cost layers barely move
    assert rain["sdap"]["mean_ms"] == pytest.approx(clear["sdap"]["mean_ms"], rel=0.1)
    assert rain["pdcp"]["mean_ms"] == pytest.approx(clear["pdcp"]["mean_ms"], rel=0.1)


# --- event log round trip ---------------------------------------------------


def _roundtrip(journeys):
    buf = io.StringIO()
    write_event_log(journeys, buf)
    buf.seek(0)
    return reconstruct_journeys(parse_event_log(buf))


def test_event_log_reconstruction_is_exact():
    rng = RngStream(5, "delay/log-roundtrip")
    journeys = simulate_stream(rng, 20, profile_heavy_rain)
    rebuilt = _roundtrip(journeys)
    assert len(rebuilt) == 20
    for j, r in zip(journeys, rebuilt):
        assert r.packet_id == j.packet_id
        assert r.layer_ms == j.layer_ms  # bit-exact, not approximate
        assert r.segments == j.segments
        assert r.harq_retx == j.harq_retx
        assert r.transmission_time_ms == j.transmission_time_ms
        assert r.total_ms == j.total_ms


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), rainy=st.booleans())
def test_reconstruction_identity_property(seed, rainy):
    rng = RngStream(seed, "delay/log-property")
    profile = profile_heavy_rain if rainy else profile_clear
    journeys = simulate_stream(rng, 3, profile)
    rebuilt = _roundtrip(journeys)
    for j, r in zip(journeys, rebuilt):
        assert r.layer_ms == j.layer_ms
        assert r.total_ms == j.total_ms


def test_parser_skips_comments_and_blanks():
    rng = RngStream(6, "delay/log-comments")
    journeys = simulate_stream(rng, 2)
    buf = io.StringIO()
    buf.write("# per-layer event log\n\n")
    write_event_log(journeys, buf)
    buf.seek(0)
    events = parse_event_log(buf)
    assert len(events) == sum(len(j.events) for j in journeys)


def test_reconstruction_rejects_incomplete_log():
    rng = RngStream(7, "delay/log-truncated")
    (journey,) = simulate_stream(rng, 1)
    events = [e for e in journey.events if not (e.layer == "pdcp" and e.edge == "out")]
    with pytest.raises(ValueError, match="incomplete"):
        reconstruct_journeys(events)


# --- summaries --------------------------------------------------------------


def test_delay_cdf_statistics():
    rng = RngStream(8, "delay/cdf")
    journeys = simulate_stream(rng, 100, profile_clear)
    cdf = delay_cdf(journeys, bound_ms=10.0)
    assert cdf["count"] == 100
    totals = cdf["totals_ms"]
    assert list(totals) == sorted(totals)
    assert cdf["fraction_within_bound"] == pytest.approx(
        sum(t <= 10.0 for t in totals) / 100
    )
    assert cdf["p50_ms"] <= cdf["p95_ms"] <= cdf["p99_ms"]


def test_delay_cdf_empty():
    cdf = delay_cdf([])
    assert cdf["count"] == 0
    assert cdf["fraction_within_bound"] == 0.0
    assert math.isnan(cdf["mean_ms"])


def test_layer_contribution_shares_sum_to_one():
    rng = RngStream(9, "delay/shares")
    contrib = layer_contributions(simulate_stream(rng, 50))
    assert set(contrib) == set(LAYERS) | {"transmission"}
    assert sum(v["share"] for v in contrib.values()) == pytest.approx(1.0)
    assert layer_contributions([]) == {}
