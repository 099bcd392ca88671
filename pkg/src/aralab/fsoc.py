"""Free-space optical links: power budget, scintillation, alignment.

The budget treats the beam as fully captured inside the collimation
distance (aperture / divergence) and spreading quadratically beyond
it; a calibrated system gain absorbs optics and coupling losses.
Pointing error costs 8.686 * (err / divergence)^2 dB. Alignment runs a
three-stage acquisition loop (spiral search on the wide-angle APD,
camera-centroid correction, single-microstep power hill-climb) and a
locked state that demotes itself when the beacon or power disappears.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .catalog import PlatformSpec
from .rng import RngStream
from .weather import CLEAR, Weather

__all__ = [
    "OpticalLinkSpec",
    "pointing_loss_db",
    "optical_weather_attenuation_db",
    "fsoc_rx_power",
    "ScintillationSeries",
    "scintillation_series",
    "SensorFrame",
    "AlignmentParams",
    "AlignmentState",
    "MotorCommand",
    "step_alignment",
    "make_frame",
    "run_alignment",
    "AlignmentTrace",
    "OpticalLinkState",
    "fsoc_link_state",
    "BeaconResult",
    "beacon_roundtrip",
    "ook_ber",
]


@dataclass(frozen=True)
class OpticalLinkSpec:
    tx_power_dbm: float = 33.0
    divergence_rad: float = 35e-6
    aperture_m: float = 0.08
    # Net optics/coupling gain, calibrated at the 10.15 km clear-sky
    # reference so the received power lands at -6.86 dBm there.
    system_gain_db: float = -26.92
    rx_sensitivity_dbm: float = -24.0
    wdm_channels: int = 16
    channel_rate_bps: float = 1e10
    motor_step_rad: float = 0.23e-6

    @property
    def collimation_distance_m(self) -> float:
        return self.aperture_m / self.divergence_rad

    @classmethod
    def from_platform(cls, platform: PlatformSpec, wdm_channels: int | None = None) -> "OpticalLinkSpec":
        from .units import watts_to_dbm

        return cls(
            tx_power_dbm=watts_to_dbm(platform.max_tx_power_w),
            divergence_rad=platform.cal("divergence_rad", 35e-6),
            aperture_m=platform.cal("aperture_m", 0.08),
            system_gain_db=platform.cal("system_gain_db", -26.92),
            rx_sensitivity_dbm=platform.cal("rx_sensitivity_dbm", -24.0),
            wdm_channels=int(wdm_channels if wdm_channels is not None else platform.cal("wdm_channels", 16)),
            channel_rate_bps=platform.cal("channel_rate_bps", 1e10),
            motor_step_rad=platform.cal("motor_step_rad", 0.23e-6),
        )


def pointing_loss_db(pointing_error_rad: float, divergence_rad: float) -> float:
    if divergence_rad <= 0:
        raise ValueError("divergence_rad must be positive")
    return 8.686 * (pointing_error_rad / divergence_rad) ** 2


# Rain attenuation for near-IR beams, dB/km (power law in rain rate).
_OPT_RAIN_K = 1.076
_OPT_RAIN_ALPHA = 0.67
# Fog attenuation scale, dB/km for 1 km visibility at 1550 nm.
_OPT_FOG_DB_KM_AT_1KM_VIS = 13.0


def optical_weather_attenuation_db(weather: Weather, path_m: float) -> float:
    att = _OPT_RAIN_K * weather.rain_rate_mm_h**_OPT_RAIN_ALPHA * (path_m / 1e3)
    if weather.fog_visibility_m is not None:
        att += _OPT_FOG_DB_KM_AT_1KM_VIS / (weather.fog_visibility_m / 1e3) * (path_m / 1e3)
    return att


def fsoc_rx_power(
    spec: OpticalLinkSpec,
    distance_m: float,
    pointing_error_rad: float = 0.0,
    weather: Weather = CLEAR,
    scint_fade_db: float = 0.0,
) -> float:
    """Received optical power in dBm."""
    if distance_m <= 0:
        raise ValueError("distance_m must be positive")
    geo = 20.0 * math.log10(max(distance_m / spec.collimation_distance_m, 1.0))
    return (
        spec.tx_power_dbm
        + spec.system_gain_db
        - geo
        - pointing_loss_db(pointing_error_rad, spec.divergence_rad)
        - optical_weather_attenuation_db(weather, distance_m)
        - scint_fade_db
    )


# ---------------------------------------------------------------------------
# Scintillation and sensor statistics

# Clear-air log-intensity sigma and its growth per mm/h of rain.
_SCINT_SIGMA_CLEAR = 0.10
_SCINT_SIGMA_PER_MMH = 0.02
# Mean transmission factor exponent per mm/h (sensor-facing only).
_SENSOR_LOSS_PER_MMH = 0.02
_APD_VOLTS_AT_MEAN = 2.5
_CMOS_PIXEL_AT_MEAN = 200.0


@dataclass
class ScintillationSeries:
    t_s: np.ndarray
    fade_db: np.ndarray  # scintillation-only fade relative to the mean
    apd_voltage_v: np.ndarray
    cmos_mean_pixel: np.ndarray


def scintillation_series(
    rng: RngStream,
    rain_rate_mm_h: float,
    duration_s: float,
    dt_s: float = 0.01,
    ar_coeff: float = 0.9,
) -> ScintillationSeries:
    """Temporally correlated log-normal intensity process.

    The log-intensity is AR(1) with unit-mean intensity; its variance
    grows with rain rate. Sensor outputs additionally see the mean rain
    transmission loss, so heavier rain darkens the camera while
    widening the flicker.
    """
    if not 0 <= ar_coeff < 1:
        raise ValueError("ar_coeff must lie in [0, 1)")
    n = max(1, int(round(duration_s / dt_s)))
    sigma = _SCINT_SIGMA_CLEAR + _SCINT_SIGMA_PER_MMH * rain_rate_mm_h
    mu = -0.5 * sigma * sigma
    gen = rng.generator
    y = np.empty(n)
    y[0] = mu + sigma * gen.standard_normal()
    innov = math.sqrt(1.0 - ar_coeff * ar_coeff) * sigma
    eps = gen.standard_normal(n)
    for i in range(1, n):
        y[i] = mu + ar_coeff * (y[i - 1] - mu) + innov * eps[i]
    scint = np.exp(y)  # unit mean
    fade_db = -10.0 * np.log10(scint)
    transmission = math.exp(-_SENSOR_LOSS_PER_MMH * rain_rate_mm_h)
    seen = transmission * scint
    apd = _APD_VOLTS_AT_MEAN * seen
    pixel = np.clip(_CMOS_PIXEL_AT_MEAN * seen, 0.0, 255.0)
    t = np.arange(n) * dt_s
    return ScintillationSeries(t_s=t, fade_db=fade_db, apd_voltage_v=apd, cmos_mean_pixel=pixel)


# ---------------------------------------------------------------------------
# Alignment state machine

MODE_COARSE = "search_coarse"
MODE_FINE = "align_fine"
MODE_ULTRAFINE = "align_ultrafine"
MODE_LOCKED = "locked"


@dataclass(frozen=True)
class AlignmentParams:
    # APD cone: beacon detectable within half of this full angle.
    apd_fov_rad: float = 2.0 * math.radians(0.5)
    apd_volts_peak: float = 2.5
    # Mechanical search range (half-angle) covered by the spiral.
    scan_range_rad: float = math.radians(6.0)
    # Camera: centroid scale and the exit threshold into ultrafine.
    cmos_rad_per_px: float = 15e-6
    cmos_noise_px: float = 0.0
    fine_exit_rad: float = 30e-6
    motor_step_rad: float = 0.23e-6
    # Locked-state supervision.
    relock_power_dbm: float = -18.0
    relock_hold_frames: int = 3

    @property
    def apd_detect_rad(self) -> float:
        return 0.5 * self.apd_fov_rad

    @property
    def scan_step_rad(self) -> float:
        # Quarter-FOV pitch guarantees overlapping APD footprints.
        return self.apd_fov_rad / 4.0

    @property
    def apd_threshold_v(self) -> float:
        return self.apd_volts_peak * math.exp(-1.0)


@dataclass(frozen=True)
class SensorFrame:
    apd_voltage_v: float
    cmos_centroid_px: tuple[float, float] | None
    rx_power_dbm: float


@dataclass(frozen=True)
class MotorCommand:
    d_az_steps: int = 0
    d_el_steps: int = 0


@dataclass
class AlignmentState:
    mode: str = MODE_COARSE
    # Cumulative motor position in microsteps (azimuth, elevation).
    motor_steps: tuple[int, int] = (0, 0)
    # Controller scratch: spiral progress and hill-climb bookkeeping.
    scan_index: int = 0
    scan_origin_steps: tuple[int, int] = (0, 0)
    uf_axis: int = 0
    uf_dir: int = 1
    uf_best_power: float | None = None
    uf_fails: int = 0
    uf_pending: bool = False
    low_frames: int = 0


_SPIRAL_CACHE: list[tuple[int, int]] = [(0, 0)]
_SPIRAL_WALK = {"x": 0, "y": 0, "dx": 1, "dy": 0, "leg": 1, "steps_in_leg": 0, "legs_done": 0}


def _spiral_offset(index: int) -> tuple[int, int]:
    """Outward square spiral lattice walk: 0 -> origin, then rings.

    Positions are memoized; the walk is extended on demand so repeated
    scans cost O(1) per lookup.
    """
    while index >= len(_SPIRAL_CACHE):
        w = _SPIRAL_WALK
        w["x"] += w["dx"]
        w["y"] += w["dy"]
        _SPIRAL_CACHE.append((w["x"], w["y"]))
        w["steps_in_leg"] += 1
        if w["steps_in_leg"] == w["leg"]:
            w["steps_in_leg"] = 0
            w["dx"], w["dy"] = -w["dy"], w["dx"]  # turn left: R, U, L, D
            w["legs_done"] += 1
            if w["legs_done"] % 2 == 0:
                w["leg"] += 1
    return _SPIRAL_CACHE[index]


def _steps(rad: float, params: AlignmentParams) -> int:
    return int(round(rad / params.motor_step_rad))


def step_alignment(
    state: AlignmentState,
    frame: SensorFrame,
    params: AlignmentParams = AlignmentParams(),
) -> tuple[AlignmentState, MotorCommand]:
    """One controller cycle: consume a sensor frame, emit a motor move.

    The controller sees only the frame and its own scratch state, never
    the true pointing error.
    """
    s = replace(state)
    mode = s.mode

    if mode == MODE_COARSE:
        if frame.apd_voltage_v >= params.apd_threshold_v:
            s.mode = MODE_FINE
            s.scan_index = 0
            return s, MotorCommand()
        if s.scan_index == 0:
            s.scan_origin_steps = s.motor_steps
        s.scan_index += 1
        max_ring = int(math.ceil(params.scan_range_rad / params.scan_step_rad))
        side = 2 * max_ring + 1
        if s.scan_index >= side * side:
            s.scan_index = 0  # wrap and sweep again
        ox, oy = _spiral_offset(s.scan_index)
        pitch = _steps(params.scan_step_rad, params)
        target = (s.scan_origin_steps[0] + ox * pitch, s.scan_origin_steps[1] + oy * pitch)
        cmd = MotorCommand(target[0] - s.motor_steps[0], target[1] - s.motor_steps[1])
        s.motor_steps = target
        return s, cmd

    if mode == MODE_FINE:
        if frame.cmos_centroid_px is None:
            s.mode = MODE_COARSE
            s.scan_index = 0
            return s, MotorCommand()
        est_az = frame.cmos_centroid_px[0] * params.cmos_rad_per_px
        est_el = frame.cmos_centroid_px[1] * params.cmos_rad_per_px
        if math.hypot(est_az, est_el) < params.fine_exit_rad:
            s.mode = MODE_ULTRAFINE
            s.uf_best_power = None
            s.uf_axis = 0
            s.uf_dir = 1
            s.uf_fails = 0
            s.uf_pending = False
            return s, MotorCommand()
        cmd = MotorCommand(_steps(est_az, params), _steps(est_el, params))
        s.motor_steps = (s.motor_steps[0] + cmd.d_az_steps, s.motor_steps[1] + cmd.d_el_steps)
        return s, cmd

    if mode == MODE_ULTRAFINE:
        power = frame.rx_power_dbm

        def probe(direction_axis: int, direction: int) -> MotorCommand:
            if direction_axis == 0:
                return MotorCommand(d_az_steps=direction)
            return MotorCommand(d_el_steps=direction)

        if s.uf_best_power is None:
            # First frame: baseline, then probe +1 on the azimuth axis.
            s.uf_best_power = power
            s.uf_pending = True
            cmd = probe(s.uf_axis, s.uf_dir)
        elif power > s.uf_best_power + 1e-12:
            # Last probe improved: keep walking the same direction.
            s.uf_best_power = power
            s.uf_fails = 0
            cmd = probe(s.uf_axis, s.uf_dir)
        else:
            # Failed probe: step back, then flip direction or rotate axis.
            back = probe(s.uf_axis, -s.uf_dir)
            s.uf_fails += 1
            if s.uf_fails >= 4:
                s.mode = MODE_LOCKED
                s.low_frames = 0
                s.motor_steps = (s.motor_steps[0] + back.d_az_steps, s.motor_steps[1] + back.d_el_steps)
                return s, back
            if s.uf_fails % 2 == 1:
                s.uf_dir = -s.uf_dir
            else:
                s.uf_axis = 1 - s.uf_axis
                s.uf_dir = 1
            # Combine the back-step with the next probe.
            nxt = probe(s.uf_axis, s.uf_dir)
            cmd = MotorCommand(back.d_az_steps + nxt.d_az_steps, back.d_el_steps + nxt.d_el_steps)
        s.motor_steps = (s.motor_steps[0] + cmd.d_az_steps, s.motor_steps[1] + cmd.d_el_steps)
        return s, cmd

    if mode == MODE_LOCKED:
        if frame.apd_voltage_v < params.apd_threshold_v:
            s.mode = MODE_COARSE
            s.scan_index = 0
            return s, MotorCommand()
        if frame.rx_power_dbm < params.relock_power_dbm:
            s.low_frames += 1
            if s.low_frames >= params.relock_hold_frames:
                s.mode = MODE_FINE
                s.low_frames = 0
        else:
            s.low_frames = 0
        return s, MotorCommand()

    raise ValueError(f"unknown alignment mode {mode!r}")


def make_frame(
    pointing_error_rad: tuple[float, float],
    link: OpticalLinkSpec,
    distance_m: float,
    params: AlignmentParams = AlignmentParams(),
    weather: Weather = CLEAR,
    scint_fade_db: float = 0.0,
    rng: RngStream | None = None,
) -> SensorFrame:
    """Synthesize what the sensors would report at a true pointing error."""
    r = math.hypot(*pointing_error_rad)
    apd = params.apd_volts_peak * math.exp(-((r / params.apd_detect_rad) ** 2))
    centroid = None
    if r < params.apd_detect_rad:
        naz = nel = 0.0
        if rng is not None and params.cmos_noise_px > 0:
            naz, nel = rng.normal(0.0, params.cmos_noise_px, 2)
        # Integer pixel readout: the camera cannot resolve sub-pixel
        # offsets, which is what the power hill-climb stage is for.
        centroid = (
            float(round(pointing_error_rad[0] / params.cmos_rad_per_px + naz)),
            float(round(pointing_error_rad[1] / params.cmos_rad_per_px + nel)),
        )
    rx = fsoc_rx_power(link, distance_m, r, weather, scint_fade_db)
    return SensorFrame(apd_voltage_v=apd, cmos_centroid_px=centroid, rx_power_dbm=rx)


@dataclass
class AlignmentTrace:
    converged: bool
    steps: int
    state: AlignmentState
    final_error_rad: float
    mode_transitions: list[tuple[int, str, float]]  # (step, new mode, |error|)
    rows: list[tuple[float, str, float, float, float]]  # t, mode, apd, rx, |err|


def run_alignment(
    link: OpticalLinkSpec,
    initial_error_rad: tuple[float, float],
    distance_m: float = 10150.0,
    params: AlignmentParams = AlignmentParams(),
    max_steps: int = 6000,
    frame_dt_s: float = 0.01,
    weather: Weather = CLEAR,
    rng: RngStream | None = None,
) -> AlignmentTrace:
    """Closed acquisition loop from a true initial offset to lock."""
    state = AlignmentState()
    err = initial_error_rad
    transitions: list[tuple[int, str, float]] = []
    rows: list[tuple[float, str, float, float, float]] = []
    for step in range(max_steps):
        frame = make_frame(err, link, distance_m, params, weather, rng=rng)
        rows.append((step * frame_dt_s, state.mode, frame.apd_voltage_v, frame.rx_power_dbm, math.hypot(*err)))
        prev_mode = state.mode
        state, cmd = step_alignment(state, frame, params)
        err = (
            err[0] - cmd.d_az_steps * params.motor_step_rad,
            err[1] - cmd.d_el_steps * params.motor_step_rad,
        )
        if state.mode != prev_mode:
            transitions.append((step, state.mode, math.hypot(*err)))
        if state.mode == MODE_LOCKED:
            return AlignmentTrace(True, step + 1, state, math.hypot(*err), transitions, rows)
    return AlignmentTrace(False, max_steps, state, math.hypot(*err), transitions, rows)


# ---------------------------------------------------------------------------
# Link state

@dataclass(frozen=True)
class OpticalLinkState:
    rx_power_dbm: float
    available: bool
    throughput_bps: float
    margin_db: float


def fsoc_link_state(
    spec: OpticalLinkSpec,
    distance_m: float,
    weather: Weather = CLEAR,
    locked: bool = True,
    pointing_error_rad: float = 0.0,
    scint_fade_db: float = 0.0,
) -> OpticalLinkState:
    rx = fsoc_rx_power(spec, distance_m, pointing_error_rad, weather, scint_fade_db)
    available = locked and rx >= spec.rx_sensitivity_dbm
    throughput = spec.wdm_channels * spec.channel_rate_bps if available else 0.0
    return OpticalLinkState(
        rx_power_dbm=rx,
        available=available,
        throughput_bps=throughput,
        margin_db=rx - spec.rx_sensitivity_dbm,
    )


# ---------------------------------------------------------------------------
# Out-of-band OOK beacon

_PREAMBLE = np.array([1, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 1, 0], dtype=np.uint8)
BEACON_RATE_BPS = 1e6


def ook_ber(snr_db: float) -> float:
    """Analytic OOK bit error rate with a midpoint threshold."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    snr = 10.0 ** (snr_db / 10.0)
    return 0.5 * math.erfc(math.sqrt(snr) / 2.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class BeaconResult:
    frame_found: bool
    crc_ok: bool
    payload: bytes | None
    reported_rx_power_dbm: float | None
    measured_ber: float
    duration_s: float


def _bits_from_bytes(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def _bytes_from_bits(bits: np.ndarray) -> bytes:
    return np.packbits(bits.astype(np.uint8)).tobytes()


def beacon_roundtrip(
    payload: bytes,
    snr_db: float,
    rng: RngStream,
    rx_power_report_dbm: float = -6.86,
    amplitude: float = 1.0,
) -> BeaconResult:
    """Send one handshake frame over the 1 Mb/s OOK beacon channel.

    The frame is preamble + length + rx-power report + payload + CRC32.
    Loss of the preamble is reported as a lost frame, never raised.
    """
    if len(payload) > 65535:
        raise ValueError("payload too long for a single beacon frame")
    report_centi = int(round(rx_power_report_dbm * 100.0))
    header = len(payload).to_bytes(2, "big") + report_centi.to_bytes(2, "big", signed=True)
    body = header + payload
    crc = zlib.crc32(body).to_bytes(4, "big")
    bits = np.concatenate([_PREAMBLE, _bits_from_bytes(body + crc)])

    tx = amplitude * bits.astype(float)
    if math.isinf(snr_db) and snr_db > 0:
        rx = tx
    else:
        sigma = 1.0 / math.sqrt(10.0 ** (snr_db / 10.0))
        rx = tx + rng.normal(0.0, sigma, size=bits.size)
    decided = (rx > amplitude / 2.0 if amplitude > 0 else rx > 0.5).astype(np.uint8)

    measured_ber = float(np.mean(decided != bits))
    duration = bits.size / BEACON_RATE_BPS

    if not np.array_equal(decided[: _PREAMBLE.size], _PREAMBLE):
        return BeaconResult(False, False, None, None, measured_ber, duration)
    rest = decided[_PREAMBLE.size:]
    data = _bytes_from_bits(rest)
    length = int.from_bytes(data[0:2], "big")
    report = int.from_bytes(data[2:4], "big", signed=True) / 100.0
    got_payload = data[4 : 4 + length]
    got_crc = data[4 + length : 8 + length]
    crc_ok = len(got_crc) == 4 and zlib.crc32(data[: 4 + length]) == int.from_bytes(got_crc, "big")
    return BeaconResult(True, crc_ok, got_payload, report, measured_ber, duration)
