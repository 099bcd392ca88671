"""Block-coded transport and streaming quality accounting.

A source block of K equal-size symbols is expanded with random linear
repair symbols over GF(256). Source symbols go out systematically;
repair coefficients are drawn from a counter-seeded stream keyed by
(session seed, block id, symbol id), so any receiver reconstructs the
same vectors regardless of which subset of symbols survives.

On top of the codec sits a frame-deadline streaming model used to
compare a loss-tolerant coded transport ("ltl") against plain
systematic datagrams ("udp") on recorded loss traces.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import gf256
from .rng import RngStream, symbol_fate

__all__ = [
    "CodedSymbol",
    "BlockEncoder",
    "BlockDecoder",
    "repair_coefficients",
    "LossTrace",
    "load_loss_trace",
    "save_loss_trace",
    "default_loss_trace_path",
    "StreamConfig",
    "FrameOutcome",
    "QoEReport",
    "run_stream_session",
]


@dataclass(frozen=True)
class CodedSymbol:
    block_id: int
    symbol_id: int
    coeffs: bytes | None  # None marks a systematic symbol
    payload: bytes

    @property
    def is_systematic(self) -> bool:
        return self.coeffs is None


def repair_coefficients(seed: int, block_id: int, symbol_id: int, k: int) -> np.ndarray:
    """Deterministic nonzero coefficient vector for one repair symbol."""
    rng = RngStream(seed, f"repair/{block_id}/{symbol_id}")
    while True:
        coeffs = np.frombuffer(rng.bytes(k), dtype=np.uint8)
        if coeffs.any():
            return coeffs.copy()


class BlockEncoder:
    """Systematic random-linear encoder for one source block."""

    def __init__(self, block_id: int, symbols: Sequence[bytes], seed: int = 0):
        if not symbols:
            raise ValueError("need at least one source symbol")
        size = len(symbols[0])
        if any(len(s) != size for s in symbols):
            raise ValueError("source symbols must share one size")
        if len(symbols) > 256:
            raise ValueError("block supports at most 256 source symbols")
        self.block_id = block_id
        self.seed = seed
        self.k = len(symbols)
        self.symbol_size = size
        self._data = np.array([np.frombuffer(s, dtype=np.uint8) for s in symbols])

    def symbol(self, symbol_id: int) -> CodedSymbol:
        """Symbol ids below K are systematic; the rest are repairs."""
        if symbol_id < 0:
            raise ValueError("symbol_id must be non-negative")
        if symbol_id < self.k:
            return CodedSymbol(self.block_id, symbol_id, None, self._data[symbol_id].tobytes())
        coeffs = repair_coefficients(self.seed, self.block_id, symbol_id, self.k)
        out = np.zeros(self.symbol_size, dtype=np.uint8)
        for i in range(self.k):
            c = int(coeffs[i])
            if c:
                out ^= gf256.gf_mul_vec(self._data[i], c)
        return CodedSymbol(self.block_id, symbol_id, coeffs.tobytes(), out.tobytes())


class BlockDecoder:
    """Incremental Gaussian elimination decoder.

    Feed symbols in any order; ``complete`` flips once K independent
    combinations have arrived, after which ``decode`` returns the
    source symbols exactly.
    """

    def __init__(self, k: int, symbol_size: int):
        self.k = k
        self.symbol_size = symbol_size
        self._coeff = np.zeros((k, k), dtype=np.uint8)
        self._payload = np.zeros((k, symbol_size), dtype=np.uint8)
        self._have_pivot = [False] * k
        self.rank = 0
        self.received = 0

    @property
    def complete(self) -> bool:
        return self.rank == self.k

    def _vector_for(self, sym: CodedSymbol) -> np.ndarray:
        if sym.is_systematic:
            v = np.zeros(self.k, dtype=np.uint8)
            v[sym.symbol_id] = 1
            return v
        v = np.frombuffer(sym.coeffs, dtype=np.uint8)
        if v.size != self.k:
            raise ValueError("coefficient vector length mismatch")
        return v.copy()

    def add(self, sym: CodedSymbol) -> bool:
        """Returns True when the symbol increased the decoder rank."""
        if len(sym.payload) != self.symbol_size:
            raise ValueError("payload size mismatch")
        self.received += 1
        coeff = self._vector_for(sym)
        payload = np.frombuffer(sym.payload, dtype=np.uint8).copy()
        # Reduce against established pivots.
        for col in range(self.k):
            c = int(coeff[col])
            if c and self._have_pivot[col]:
                coeff ^= gf256.gf_mul_vec(self._coeff[col], c)
                payload ^= gf256.gf_mul_vec(self._payload[col], c)
        nz = np.nonzero(coeff)[0]
        if nz.size == 0:
            return False  # linearly dependent
        lead = int(nz[0])
        inv = gf256.gf_inv(int(coeff[lead]))
        coeff = gf256.gf_mul_vec(coeff, inv)
        payload = gf256.gf_mul_vec(payload, inv)
        # Back-substitute into existing rows to keep them fully reduced.
        for col in range(self.k):
            if self._have_pivot[col] and self._coeff[col][lead]:
                c = int(self._coeff[col][lead])
                self._coeff[col] ^= gf256.gf_mul_vec(coeff, c)
                self._payload[col] ^= gf256.gf_mul_vec(payload, c)
        self._coeff[lead] = coeff
        self._payload[lead] = payload
        self._have_pivot[lead] = True
        self.rank += 1
        return True

    def decode(self) -> list[bytes]:
        if not self.complete:
            raise ValueError(f"decoder rank {self.rank} of {self.k}; block incomplete")
        return [self._payload[i].tobytes() for i in range(self.k)]


# ---------------------------------------------------------------------------
# Loss traces

@dataclass
class LossTrace:
    t_s: np.ndarray
    loss_rate: np.ndarray

    def rate_at(self, t: float) -> float:
        idx = int(np.searchsorted(self.t_s, t, side="right")) - 1
        idx = min(max(idx, 0), self.loss_rate.size - 1)
        return float(self.loss_rate[idx])

    @property
    def duration_s(self) -> float:
        return float(self.t_s[-1]) + float(self.t_s[1] - self.t_s[0]) if self.t_s.size > 1 else 0.0


def load_loss_trace(path: str | Path) -> LossTrace:
    t, p = [], []
    with open(path, newline="") as fp:
        for row in csv.reader(fp):
            if not row or row[0].lstrip().startswith("#"):
                continue
            t.append(float(row[0]))
            p.append(float(row[1]))
    if not t:
        raise ValueError(f"empty loss trace: {path}")
    return LossTrace(np.array(t), np.clip(np.array(p), 0.0, 1.0))


def save_loss_trace(trace: LossTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fp:
        fp.write("# t_s,loss_rate\n")
        w = csv.writer(fp)
        for t, p in zip(trace.t_s, trace.loss_rate):
            w.writerow([f"{t:.3f}", f"{p:.4f}"])


def default_loss_trace_path() -> Path:
    return Path(__file__).parent / "data" / "bad_connectivity.csv"


# ---------------------------------------------------------------------------
# Streaming session

@dataclass(frozen=True)
class StreamConfig:
    fps: float = 30.0
    bitrate_bps: float = 30e6
    symbol_size: int = 15625
    repair_overhead: float = 0.20  # extra coded symbols per block, ltl only
    deadline_budget_ms: float = 200.0
    retx_rtt_ms: float = 60.0

    @property
    def frame_bytes(self) -> int:
        return int(self.bitrate_bps / self.fps / 8)

    @property
    def symbols_per_frame(self) -> int:
        return math.ceil(self.frame_bytes / self.symbol_size)


@dataclass(frozen=True)
class FrameOutcome:
    frame_id: int
    status: str  # "on_time" | "late" | "lost"
    stall_ms: float
    rounds: int  # retransmission rounds used
    symbols_sent: int


@dataclass
class QoEReport:
    transport: str
    frames: int
    on_time: int
    late: int
    lost: int
    stall_total_ms: float
    stall_ratio: float
    delivered_fraction: float
    on_time_fraction: float
    mean_displayed_fps: float
    fps_per_second: list[float]
    symbols_sent: int
    overhead_fraction: float
    outcomes: list[FrameOutcome] = field(default_factory=list)


def _frame_decodable(k: int, received_systematic: list[int], repair_ids: list[int], seed: int, frame_id: int) -> bool:
    """Rank test on the surviving coefficient vectors."""
    if len(received_systematic) + len(repair_ids) < k:
        return False
    if len(received_systematic) == k:
        return True
    rows = []
    for sid in received_systematic:
        v = np.zeros(k, dtype=np.uint8)
        v[sid] = 1
        rows.append(v)
    for rid in repair_ids:
        rows.append(repair_coefficients(seed, frame_id, rid, k))
    return gf256.gf_rank(np.array(rows)) == k


def _decode_with_payloads(enc: BlockEncoder, survivors: list[int]) -> bool:
    dec = BlockDecoder(enc.k, enc.symbol_size)
    for sid in survivors:
        dec.add(enc.symbol(sid))
        if dec.complete:
            break
    if not dec.complete:
        return False
    return dec.decode() == [enc._data[i].tobytes() for i in range(enc.k)]


def run_stream_session(
    trace: LossTrace,
    transport: str = "ltl",
    seed: int = 0,
    config: StreamConfig = StreamConfig(),
    verify_payload: bool = False,
) -> QoEReport:
    """Play one video session against a recorded loss trace.

    Each frame is a source block. ``ltl`` ships the systematic symbols
    plus proactive repair symbols and falls back to retransmission
    rounds; ``udp`` ships systematic symbols only and can only
    retransmit. A frame missing its deadline stalls playback by the
    retransmission rounds it needed, up to the deadline budget; a frame
    still undecodable at the budget is dropped and charged the full
    budget.
    """
    if transport not in ("ltl", "udp"):
        raise ValueError("transport must be 'ltl' or 'udp'")
    k = config.symbols_per_frame
    n_frames = int(round(trace.duration_s * config.fps))
    n_repair = math.ceil(config.repair_overhead * k) if transport == "ltl" else 0
    max_rounds = int(config.deadline_budget_ms // config.retx_rtt_ms)

    outcomes: list[FrameOutcome] = []
    symbols_sent = 0
    payload_rng = RngStream(seed, "stream/payload") if verify_payload else None

    for f in range(n_frames):
        p = trace.rate_at(f / config.fps)
        # First shot: systematic symbols plus proactive repairs.
        sys_ok = [s for s in range(k) if symbol_fate(seed, f, s, 0) >= p]
        rep_ok = [r for r in range(k, k + n_repair) if symbol_fate(seed, f, r, 0) >= p]
        symbols_sent += k + n_repair
        rounds = 0
        next_repair = k + n_repair
        while not _frame_decodable(k, sys_ok, rep_ok, seed, f) and rounds < max_rounds:
            rounds += 1
            if transport == "udp":
                resend = [s for s in range(k) if s not in sys_ok]
                symbols_sent += len(resend)
                for s in resend:
                    if symbol_fate(seed, f, s, rounds) >= p:
                        sys_ok.append(s)
            else:
                deficit = k - len(sys_ok) - len(rep_ok)
                burst = max(deficit + 1, 2)
                symbols_sent += burst
                for r in range(next_repair, next_repair + burst):
                    if symbol_fate(seed, f, r, rounds) >= p:
                        rep_ok.append(r)
                next_repair += burst

        decodable = _frame_decodable(k, sys_ok, rep_ok, seed, f)
        if decodable and verify_payload:
            frame_payloads = [payload_rng.bytes(config.symbol_size) for _ in range(k)]
            enc = BlockEncoder(f, frame_payloads, seed=seed)
            if not _decode_with_payloads(enc, sorted(sys_ok) + sorted(rep_ok)):
                decodable = False

        if decodable and rounds == 0:
            outcomes.append(FrameOutcome(f, "on_time", 0.0, 0, k + n_repair))
        elif decodable:
            stall = min(rounds * config.retx_rtt_ms, config.deadline_budget_ms)
            outcomes.append(FrameOutcome(f, "late", stall, rounds, 0))
        else:
            outcomes.append(FrameOutcome(f, "lost", config.deadline_budget_ms, rounds, 0))

    on_time = sum(1 for o in outcomes if o.status == "on_time")
    late = sum(1 for o in outcomes if o.status == "late")
    lost = sum(1 for o in outcomes if o.status == "lost")
    stall_total = sum(o.stall_ms for o in outcomes)
    duration_ms = n_frames / config.fps * 1e3

    fps_buckets: list[float] = []
    per_sec = int(config.fps)
    for s in range(n_frames // per_sec):
        window = outcomes[s * per_sec : (s + 1) * per_sec]
        fps_buckets.append(sum(1 for o in window if o.status != "lost") / 1.0)

    baseline = n_frames * k
    return QoEReport(
        transport=transport,
        frames=n_frames,
        on_time=on_time,
        late=late,
        lost=lost,
        stall_total_ms=stall_total,
        stall_ratio=stall_total / duration_ms if duration_ms else 0.0,
        delivered_fraction=(on_time + late) / n_frames if n_frames else 0.0,
        on_time_fraction=on_time / n_frames if n_frames else 0.0,
        mean_displayed_fps=float(np.mean(fps_buckets)) if fps_buckets else 0.0,
        fps_per_second=fps_buckets,
        symbols_sent=symbols_sent,
        overhead_fraction=symbols_sent / baseline - 1.0 if baseline else 0.0,
        outcomes=outcomes,
    )
