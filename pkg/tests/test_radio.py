"""Access-link path loss, SNR, and capacity mechanics."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aralab import radio
from aralab.radio import RanConfigError, RanLinkConfig
from aralab.weather import CLEAR, Weather


@pytest.fixture(scope="module")
def tvws(catalog):
    return catalog.get("AraMIMO-TVWS")


def test_path_loss_at_reference(tvws):
    assert radio.path_loss_db(tvws, radio.REFERENCE_DISTANCE_M) == pytest.approx(
        tvws.cal("ref_loss_db")
    )


def test_log_distance_slope(tvws):
    # Doubling distance adds 10 * n * log10(2) dB.
    n = tvws.cal("path_loss_exponent")
    delta = radio.path_loss_db(tvws, 2000.0) - radio.path_loss_db(tvws, 1000.0)
    assert delta == pytest.approx(10.0 * n * math.log10(2.0), abs=1e-9)


@given(
    d1=st.floats(min_value=100.0, max_value=20000.0),
    d2=st.floats(min_value=100.0, max_value=20000.0),
)
@settings(max_examples=50, deadline=None)
def test_path_loss_monotone(tvws, d1, d2):
    lo, hi = sorted((d1, d2))
    assert radio.path_loss_db(tvws, lo) <= radio.path_loss_db(tvws, hi) + 1e-9


def test_blockage_states(tvws):
    clear = radio.path_loss_db(tvws, 5000.0, "clear")
    partial = radio.path_loss_db(tvws, 5000.0, "partial")
    blocked = radio.path_loss_db(tvws, 5000.0, "blocked")
    assert partial == pytest.approx(clear + radio.PARTIAL_BLOCKAGE_DB)
    assert math.isinf(blocked)


def test_config_validation(catalog):
    plat = catalog.get("AraMIMO-C")
    with pytest.raises(RanConfigError):
        RanLinkConfig(bandwidth_hz=plat.max_bandwidth_hz * 2, tx_power_w=1.0).validated(plat)
    with pytest.raises(RanConfigError):
        RanLinkConfig(bandwidth_hz=plat.max_bandwidth_hz, tx_power_w=plat.max_tx_power_w * 2).validated(plat)
    with pytest.raises(RanConfigError):
        RanLinkConfig(
            bandwidth_hz=plat.max_bandwidth_hz, tx_power_w=1.0, carrier_hz=plat.freq_high_hz * 2
        ).validated(plat)
    ok = RanLinkConfig(bandwidth_hz=plat.max_bandwidth_hz, tx_power_w=plat.max_tx_power_w)
    assert ok.validated(plat) is ok


def test_deployed_config_uses_calibrated_bandwidth(catalog):
    sdr = catalog.get("AraSDR")
    assert radio.deployed_config(sdr).bandwidth_hz == sdr.cal("default_bandwidth_hz")
    mm = catalog.get("AraMIMO-mm")
    assert radio.deployed_config(mm).bandwidth_hz == mm.max_bandwidth_hz


def test_capacity_caps_and_floor(catalog):
    mm = catalog.get("AraMIMO-mm")
    cfg = radio.deployed_config(mm)
    assert radio.ran_capacity(mm, cfg, 100.0) == mm.max_capacity_bps
    assert radio.ran_capacity(mm, cfg, 100.0, blockage="blocked") == 0.0
    # Far beyond the demodulation floor the link yields nothing.
    assert radio.ran_capacity(mm, cfg, 50000.0) == 0.0


def test_snr_decreases_with_rain_at_high_band(catalog):
    mm = catalog.get("AraMIMO-mm")
    cfg = radio.deployed_config(mm)
    clear = radio.ran_snr_db(mm, cfg, 400.0, CLEAR)
    wet = radio.ran_snr_db(mm, cfg, 400.0, Weather(rain_rate_mm_h=25.0))
    assert wet < clear


def test_rain_spares_low_band(catalog):
    tvws = catalog.get("AraMIMO-TVWS")
    cfg = radio.deployed_config(tvws)
    clear = radio.ran_snr_db(tvws, cfg, 5000.0, CLEAR)
    wet = radio.ran_snr_db(tvws, cfg, 5000.0, Weather(rain_rate_mm_h=25.0))
    assert wet == pytest.approx(clear)


def test_capacity_profile_follows_route(catalog):
    tvws = catalog.get("AraMIMO-TVWS")
    cfg = radio.deployed_config(tvws)
    route = [(0.0, "clear"), (500.0, "clear"), (1000.0, "blocked"), (20000.0, "clear")]
    profile = radio.capacity_profile(tvws, cfg, route)
    assert [d for d, _ in profile] == [500.0, 1000.0, 20000.0]  # origin skipped
    caps = dict(profile)
    assert caps[1000.0] == 0.0
    # 500 m sits at the model cap; 20 km is range-limited but still connected.
    assert caps[500.0] > caps[20000.0] > 0.0
