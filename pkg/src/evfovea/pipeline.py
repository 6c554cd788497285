"""End-to-end wiring: serial word merging, handshake link, saliency, fovea.

Events enter as interleaved row/column words (the camera-side serial
framing), cross a transaction-level 4-phase handshake link, are merged
back into 2-D events, optionally biased top-down, run through the saliency
engine, and leave through a fovea filter that forwards only events inside
the current focus window.  Every stage is sequential and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional

from . import fixedpoint as fp
from .events import Event
from .saliency import AttentionConfig, FocusSample, SaliencyState, foa_window
from .topdown import TopDownConfig, gate, modulation_gain

__all__ = [
    "AerWord",
    "HandshakeChannel",
    "HandshakeError",
    "PipelineOutput",
    "PipelineStats",
    "WordMerger",
    "fovea_filter",
    "format_stats",
    "merge_words",
    "run_pipeline",
    "split_words",
]


class AerWord(NamedTuple):
    """One serial coordinate word; polarity rides on the column word."""

    kind: str   # "y" (row) or "x" (column)
    coord: int
    p: int      # +1/-1 on x words, 0 on y words
    t: int


def split_words(events: Iterable[Event], order: str = "yx") -> Iterator[AerWord]:
    """Serialize events into row/column word pairs (inverse of merge_words)."""
    if order not in ("yx", "xy"):
        raise ValueError("order must be 'yx' or 'xy'")
    for e in events:
        yw = AerWord("y", e.y, 0, e.t)
        xw = AerWord("x", e.x, e.p, e.t)
        if order == "yx":
            yield yw
            yield xw
        else:
            yield xw
            yield yw


class WordMerger:
    """Recombine serial words into events, counting framing slips.

    In "yx" order a row word latches; the next column word emits the event
    (timestamped from the emitting word) and consumes the latch.  A second
    latch word overwrites and counts a protocol error; an emitting word
    with nothing latched is dropped and counted.  "xy" order swaps roles.
    """

    def __init__(self, order: str = "yx"):
        if order not in ("yx", "xy"):
            raise ValueError("order must be 'yx' or 'xy'")
        self.order = order
        self.protocol_errors = 0
        self._latched: Optional[AerWord] = None
        self._first = "y" if order == "yx" else "x"

    def push(self, word: AerWord) -> Optional[Event]:
        if word.kind == self._first:
            if self._latched is not None:
                self.protocol_errors += 1
            self._latched = word
            return None
        if self._latched is None:
            self.protocol_errors += 1
            return None
        latched, self._latched = self._latched, None
        if self.order == "yx":
            return Event(word.t, word.coord, latched.coord, word.p)
        return Event(word.t, latched.coord, word.coord, latched.p)


def merge_words(words: Iterable[AerWord], order: str = "yx") -> tuple[list[Event], int]:
    """Merge a word sequence into events; returns (events, protocol_errors)."""
    merger = WordMerger(order)
    events = [e for w in words if (e := merger.push(w)) is not None]
    return events, merger.protocol_errors


class HandshakeError(RuntimeError):
    """A send or receive was attempted in the wrong phase."""


IDLE = "idle"
REQ_UP = "req_up"
ACK_UP = "ack_up"
REQ_DOWN = "req_down"


class HandshakeChannel:
    """Transaction-level 4-phase request/acknowledge link, capacity one.

    send() raises the request with its datum; receive() acknowledges,
    takes the datum, and walks the release phases back to idle.  With
    tracing enabled every phase transition is recorded for protocol-order
    checks; without it the release phases complete atomically.
    """

    __slots__ = ("state", "transferred", "protocol_errors", "_slot", "_trace")

    def __init__(self, record_trace: bool = False):
        self.state = IDLE
        self.transferred = 0
        self.protocol_errors = 0
        self._slot = None
        self._trace: Optional[list[str]] = [] if record_trace else None

    @property
    def trace(self) -> list[str]:
        return list(self._trace or [])

    def send(self, datum) -> None:
        if self.state != IDLE:
            self.protocol_errors += 1
            raise HandshakeError(f"send while channel is {self.state}")
        self._slot = datum
        self.state = REQ_UP
        if self._trace is not None:
            self._trace.append(REQ_UP)

    def receive(self):
        if self.state != REQ_UP:
            self.protocol_errors += 1
            raise HandshakeError(f"receive while channel is {self.state}")
        datum, self._slot = self._slot, None
        if self._trace is not None:
            # receiver latches and acknowledges, sender drops the request,
            # receiver drops the acknowledge
            for phase in (ACK_UP, REQ_DOWN, IDLE):
                self.state = phase
                self._trace.append(phase)
        else:
            self.state = IDLE
        self.transferred += 1
        return datum


def fovea_filter(e: Event, winner: Optional[tuple[int, int]], cfg: AttentionConfig) -> Optional[Event]:
    """Pass the event iff it falls inside the focus window of ``winner``."""
    if winner is None:
        return None
    x0, y0, x1, y1 = foa_window(*winner, cfg.foa_width, cfg.foa_height, cfg.resolution)
    if x0 <= e.x <= x1 and y0 <= e.y <= y1:
        return e
    return None


@dataclass
class PipelineStats:
    """Exact event bookkeeping: in == gated + no_winner + outside + out."""

    events_in: int = 0
    events_gated: int = 0
    events_dropped_no_winner: int = 0
    events_dropped_outside_foa: int = 0
    events_out: int = 0
    winner_switches: int = 0


def format_stats(stats: PipelineStats) -> str:
    return "".join(
        f"{name}={getattr(stats, name)}\n"
        for name in (
            "events_in",
            "events_gated",
            "events_dropped_no_winner",
            "events_dropped_outside_foa",
            "events_out",
            "winner_switches",
        )
    )


@dataclass
class PipelineOutput:
    events: list[Event] = field(default_factory=list)
    trajectory: list[FocusSample] = field(default_factory=list)
    stats: PipelineStats = field(default_factory=PipelineStats)


def run_pipeline(
    events: Iterable[Event],
    cfg: AttentionConfig,
    td: Optional[TopDownConfig] = None,
    word_order: str = "yx",
) -> PipelineOutput:
    """Drive a monotonic event stream through the full stage chain.

    Stage order: word serialization -> handshake link -> word merge ->
    top-down gate/modulation -> saliency -> fovea filter -> output link.
    The fovea filter sees the winner after the same event has updated it,
    so the event that causes a switch is itself inside the new window.
    """
    if td is not None and td.roi is not None and not td.roi.within(cfg.resolution):
        raise ValueError("top-down region of interest exceeds the resolution")
    if word_order not in ("yx", "xy"):
        raise ValueError("word_order must be 'yx' or 'xy'")
    out = PipelineOutput()
    stats = out.stats
    state = SaliencyState(cfg)
    in_link = HandshakeChannel()
    out_link = HandshakeChannel()
    merger = WordMerger(word_order)
    gating = td is not None and td.mode == "gating"
    modulating = td is not None and td.mode == "modulation"
    yx = word_order == "yx"
    window = None  # focus window, re-derived only on a switch

    # Hot loop: counters and bound methods are kept local.
    n_in = n_gated = n_no_winner = n_outside = n_out = 0
    send_in, recv_in = in_link.send, in_link.receive
    send_out, recv_out = out_link.send, out_link.receive
    push = merger.push
    process = state.process_event
    emit_sample = out.trajectory.append
    emit_event = out.events.append

    for e in events:
        n_in += 1
        if yx:
            first = AerWord("y", e.y, 0, e.t)
            second = AerWord("x", e.x, e.p, e.t)
        else:
            first = AerWord("x", e.x, e.p, e.t)
            second = AerWord("y", e.y, 0, e.t)
        send_in(first)
        push(recv_in())
        send_in(second)
        merged = push(recv_in())
        if merged is None:
            continue  # unreachable with well-formed framing
        if gating and gate(merged, td) is None:
            n_gated += 1
            continue
        gain = modulation_gain(merged, td) if modulating else fp.GAIN_ONE
        sample = process(merged, gain)
        if sample is not None:
            emit_sample(sample)
            window = foa_window(sample.x, sample.y, cfg.foa_width, cfg.foa_height, cfg.resolution)
        if window is None:
            n_no_winner += 1
            continue
        x0, y0, x1, y1 = window
        if x0 <= merged.x <= x1 and y0 <= merged.y <= y1:
            send_out(merged)
            emit_event(recv_out())
            n_out += 1
        else:
            n_outside += 1

    stats.events_in = n_in
    stats.events_gated = n_gated
    stats.events_dropped_no_winner = n_no_winner
    stats.events_dropped_outside_foa = n_outside
    stats.events_out = n_out
    stats.winner_switches = len(out.trajectory)
    return out
