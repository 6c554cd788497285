"""Event data model, CSV and raw AER stream I/O, and synthetic stimuli.

The canonical interchange format is a plain CSV: optional ``#`` comment
lines followed by ``t_us,x,y,p`` records with p in {1,-1}.  The raw binary
reader handles the common logger layout of ``#`` header lines followed by
fixed 8-byte big-endian (address, timestamp) records, with configurable
bit fields for the address word and 32-to-64-bit timestamp unwrapping.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np


class Event(NamedTuple):
    """One address-event: timestamp (us), pixel column/row, polarity (+1/-1)."""

    t: int
    x: int
    y: int
    p: int


@dataclass(frozen=True)
class Resolution:
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("resolution must be at least 1x1")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


DAVIS240 = Resolution(240, 180)
DVS128 = Resolution(128, 128)


class StreamError(ValueError):
    """Base class for event-stream ingestion failures."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif offset is not None:
            where = f" (byte offset {offset})"
        super().__init__(message + where)


class StreamParseError(StreamError):
    """Malformed text record."""


class StreamFormatError(StreamError):
    """Malformed binary framing (e.g. a truncated record)."""


class StreamRangeError(StreamError):
    """Coordinate outside the configured sensor resolution."""


class StreamOrderError(StreamError):
    """Timestamp went backwards within a stream."""


def _text_lines(source) -> Iterator[str]:
    for line in source:
        yield line.decode("utf-8") if isinstance(line, bytes) else line


def read_csv_stream(source, resolution: Resolution | None = None) -> Iterator[Event]:
    """Yield events from a ``t_us,x,y,p`` CSV file path or file object.

    Lines starting with ``#`` and blank lines are skipped.  Raises
    StreamParseError / StreamRangeError / StreamOrderError with the
    offending line number.
    """
    if hasattr(source, "read"):
        yield from _parse_csv(_text_lines(source), resolution)
    else:
        with open(source, "r", encoding="utf-8") as f:
            yield from _parse_csv(f, resolution)


def _parse_csv(lines: Iterable[str], resolution: Resolution | None) -> Iterator[Event]:
    prev_t = -1
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise StreamParseError(f"expected 4 fields, got {len(fields)}", line=lineno)
        try:
            t, x, y, p = (int(f) for f in fields)
        except ValueError:
            raise StreamParseError(f"non-integer field in {line!r}", line=lineno) from None
        if t < 0:
            raise StreamParseError("negative timestamp", line=lineno)
        if p not in (1, -1):
            raise StreamParseError(f"polarity must be 1 or -1, got {p}", line=lineno)
        if resolution is not None and not resolution.contains(x, y):
            raise StreamRangeError(
                f"pixel ({x},{y}) outside {resolution.width}x{resolution.height}",
                line=lineno,
            )
        if t < prev_t:
            raise StreamOrderError(f"timestamp {t} decreases from {prev_t}", line=lineno)
        prev_t = t
        yield Event(t, x, y, p)


def write_csv_stream(events: Iterable[Event], sink, header: str | None = None) -> None:
    """Write events as CSV; the exact inverse of read_csv_stream.

    With the default ``header=None`` an empty stream produces empty output;
    pass a header string to emit a leading ``# ...`` comment line.
    """
    if hasattr(sink, "write"):
        _write_csv(events, sink, header)
    else:
        with open(sink, "w", encoding="utf-8") as f:
            _write_csv(events, f, header)


def _write_csv(events: Iterable[Event], f: IO[str], header: str | None) -> None:
    if header is not None:
        f.write(f"# {header}\n")
    for e in events:
        f.write(f"{e.t},{e.x},{e.y},{e.p}\n")


@dataclass(frozen=True)
class AddressDecode:
    """Bit-field extractors for a 32-bit AER address word.

    ``x = (addr >> x_shift) & x_mask`` and likewise for y; the single bit at
    ``pol_shift`` selects ON (+1) when set, OFF (-1) when clear.  Datasets
    differ in their wire layout, so this is configuration, not code.
    """

    x_shift: int
    x_mask: int
    y_shift: int
    y_mask: int
    pol_shift: int

    def unpack(self, addr: int) -> tuple[int, int, int]:
        x = (addr >> self.x_shift) & self.x_mask
        y = (addr >> self.y_shift) & self.y_mask
        p = 1 if (addr >> self.pol_shift) & 1 else -1
        return x, y, p


# jAER-style layouts for the two common sensors.
DAVIS240_DECODE = AddressDecode(x_shift=12, x_mask=0x3FF, y_shift=22, y_mask=0x1FF, pol_shift=11)
DVS128_DECODE = AddressDecode(x_shift=1, x_mask=0x7F, y_shift=8, y_mask=0x7F, pol_shift=0)

_WRAP = 1 << 32
_WRAP_JUMP = 1 << 31
_RECORD = struct.Struct(">II")


def read_raw_aer_stream(
    source,
    decode: AddressDecode = DAVIS240_DECODE,
    resolution: Resolution | None = None,
) -> Iterator[Event]:
    """Yield events from raw binary AER: ``#`` header lines, then 8-byte records.

    Each record is a 32-bit big-endian address word followed by a 32-bit
    big-endian timestamp in microseconds.  32-bit timestamps are unwrapped
    to 64-bit monotonic time: a backward jump of more than 2^31 us counts
    as a wrap and adds 2^32.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    yield from _parse_raw(data, decode, resolution)


def _parse_raw(data: bytes, decode: AddressDecode, resolution: Resolution | None) -> Iterator[Event]:
    pos = 0
    while pos < len(data) and data[pos : pos + 1] == b"#":
        nl = data.find(b"\n", pos)
        pos = len(data) if nl < 0 else nl + 1
    body = len(data) - pos
    if body % _RECORD.size != 0:
        raise StreamFormatError(
            f"trailing {body % _RECORD.size} bytes do not form an 8-byte record",
            offset=pos + body - body % _RECORD.size,
        )
    wraps = 0
    prev_raw_t = None
    prev_t = -1
    for i, (addr, raw_t) in enumerate(_RECORD.iter_unpack(data[pos:])):
        if prev_raw_t is not None and prev_raw_t - raw_t > _WRAP_JUMP:
            wraps += 1
        prev_raw_t = raw_t
        t = raw_t + wraps * _WRAP
        x, y, p = decode.unpack(addr)
        if resolution is not None and not resolution.contains(x, y):
            raise StreamRangeError(
                f"pixel ({x},{y}) outside {resolution.width}x{resolution.height}",
                offset=pos + i * _RECORD.size,
            )
        if t < prev_t:
            raise StreamOrderError(
                f"unwrapped timestamp {t} decreases from {prev_t}",
                offset=pos + i * _RECORD.size,
            )
        prev_t = t
        yield Event(t, x, y, p)


@dataclass(frozen=True)
class PointSource:
    """A pixel firing at a fixed rate over [start_us, stop_us], inclusive."""

    x: int
    y: int
    rate_hz: float
    start_us: int
    stop_us: int
    polarity: int = 1


@dataclass(frozen=True)
class StimulusSpec:
    """Synthetic stimulus: point sources plus optional uniform Poisson noise."""

    resolution: Resolution
    duration_us: int
    sources: tuple[PointSource, ...] = ()
    noise_rate_hz: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.duration_us < 0:
            raise ValueError("duration_us must be non-negative")
        if self.noise_rate_hz < 0:
            raise ValueError("noise_rate_hz must be non-negative")
        for i, s in enumerate(self.sources):
            if s.rate_hz < 0:
                raise ValueError(f"source {i}: rate_hz must be non-negative")
            if s.stop_us < s.start_us:
                raise ValueError(f"source {i}: stop_us before start_us")
            if not self.resolution.contains(s.x, s.y):
                raise ValueError(f"source {i}: pixel ({s.x},{s.y}) out of range")
            if s.polarity not in (1, -1):
                raise ValueError(f"source {i}: polarity must be 1 or -1")


def _source_events(src: PointSource, idx: int, duration_us: int):
    period = round(1_000_000 / src.rate_hz)
    period = max(period, 1)
    stop = min(src.stop_us, duration_us)
    t = src.start_us
    while t <= stop:
        yield (t, idx, Event(t, src.x, src.y, src.polarity))
        t += period


def _noise_events(spec: StimulusSpec, idx: int):
    rng = np.random.default_rng(spec.seed)
    w, h = spec.resolution.width, spec.resolution.height
    scale = 1_000_000 / spec.noise_rate_hz
    t = 0
    while True:
        t += int(round(rng.exponential(scale)))
        if t > spec.duration_us:
            return
        x = int(rng.integers(0, w))
        y = int(rng.integers(0, h))
        p = 1 if rng.integers(0, 2) else -1
        yield (t, idx, Event(t, x, y, p))


def generate_stimulus(spec: StimulusSpec) -> list[Event]:
    """Deterministically expand a StimulusSpec into a sorted event stream.

    Point sources tick at exactly their period (1/rate rounded to whole
    microseconds); simultaneous events are ordered by source declaration,
    with noise last.  The seed only feeds the noise process.
    """
    spec.validate()
    streams = [
        _source_events(s, i, spec.duration_us)
        for i, s in enumerate(spec.sources)
        if s.rate_hz > 0
    ]
    if spec.noise_rate_hz > 0:
        streams.append(_noise_events(spec, len(spec.sources)))
    return [ev for _, _, ev in heapq.merge(*streams)]
