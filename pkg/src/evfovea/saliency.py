"""Per-event saliency state with lazy decay, winner tracking, and IOR.

Every pixel stores a Q12.8 activity value and the timestamp of its last
update; decay is applied lazily, only when a pixel is next touched.  A
single running winner is tracked by comparing each updated pixel against
the winner's freshly decayed value.  On a winner switch the window gaining
focus is excited and the window losing it is inhibited (inhibition of
return), so attention can move on rather than lock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import fixedpoint as fp
from .events import Event, Resolution
from .fixedpoint import PwlTable

_DECAY_BITS = fp.DECAY_BITS
_RAW_MIN = fp.RAW_MIN
_RAW_MAX = fp.RAW_MAX


class OrderingError(ValueError):
    """An event arrived with a timestamp earlier than one already processed."""


class FocusSample(NamedTuple):
    """One point of the attention trajectory: time and winner coordinates."""

    t: int
    x: int
    y: int


def write_trajectory_csv(samples, sink, header: str | None = None) -> None:
    """Write focus samples as ``t_us,cx,cy`` CSV lines."""
    if hasattr(sink, "write"):
        _write_trajectory(samples, sink, header)
    else:
        with open(sink, "w", encoding="utf-8") as f:
            _write_trajectory(samples, f, header)


def _write_trajectory(samples, f, header) -> None:
    if header is not None:
        f.write(f"# {header}\n")
    for s in samples:
        f.write(f"{s.t},{s.x},{s.y}\n")


def read_trajectory_csv(source) -> list[FocusSample]:
    """Read ``t_us,cx,cy`` CSV lines back into focus samples."""
    if hasattr(source, "read"):
        lines = source
    else:
        lines = open(source, "r", encoding="utf-8")
    try:
        out = []
        for lineno, line in enumerate(lines, 1):
            if isinstance(line, bytes):
                line = line.decode("utf-8")
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise ValueError(f"trajectory line {lineno}: expected 3 fields")
            t, x, y = (int(f) for f in fields)
            out.append(FocusSample(t, x, y))
        return out
    finally:
        if lines is not source:
            lines.close()


@dataclass(frozen=True)
class AttentionConfig:
    """All tunables of the attention engine.

    ``excite`` is added to every pixel of the window gaining focus and
    ``inhibit`` subtracted from every pixel of the window losing it, both
    quantized to Q12.8.  The focus window is ``foa_width`` x ``foa_height``
    pixels (positive, even) centered on the winner.
    """

    resolution: Resolution = Resolution(240, 180)
    tau_us: int = 10_000
    excite: float = 1.0
    inhibit: float = 1.0
    foa_width: int = 16
    foa_height: int = 16
    pwl: PwlTable = field(default_factory=PwlTable)
    excite_raw: int = field(init=False, repr=False)
    inhibit_raw: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.tau_us <= 0:
            raise ValueError("tau_us must be positive")
        if self.excite < 0 or self.inhibit < 0:
            raise ValueError("excite and inhibit must be non-negative")
        for name, m, limit in (
            ("foa_width", self.foa_width, self.resolution.width),
            ("foa_height", self.foa_height, self.resolution.height),
        ):
            if m < 2 or m % 2 != 0:
                raise ValueError(f"{name} must be a positive even integer")
            if m > limit:
                raise ValueError(f"{name} exceeds the sensor dimension")
        object.__setattr__(self, "excite_raw", fp.fixed_from_real(self.excite))
        object.__setattr__(self, "inhibit_raw", fp.fixed_from_real(self.inhibit))


def foa_window(
    cx: int, cy: int, foa_width: int, foa_height: int, resolution: Resolution
) -> tuple[int, int, int, int]:
    """Inclusive (x0, y0, x1, y1) of the focus window centered on (cx, cy).

    With an even window size the center sits at index m/2, i.e. the window
    is biased one pixel toward negative coordinates.  Clamping at the
    sensor border truncates the window; it does not shift it.
    """
    half_w = foa_width // 2
    half_h = foa_height // 2
    x0 = max(cx - half_w, 0)
    y0 = max(cy - half_h, 0)
    x1 = min(cx + half_w - 1, resolution.width - 1)
    y1 = min(cy + half_h - 1, resolution.height - 1)
    return x0, y0, x1, y1


class SaliencyState:
    """Dense per-pixel activity store plus the tracked focus winner.

    Grids start at zero with timestamp zero (the cleared-memory state) and
    there is no winner until the first event.  ``values`` (raw Q12.8) and
    ``last_time`` (microseconds) are flat row-major lists: per-event scalar
    access dominates the engine, and list indexing beats ndarray item
    access by ~3x.  Use values_grid()/last_time_grid() for array views.

    A state instance is single-writer: process_event calls must arrive in
    timestamp order.
    """

    def __init__(self, cfg: AttentionConfig):
        self.cfg = cfg
        w, h = cfg.resolution.width, cfg.resolution.height
        self._w = w
        self._h = h
        self.values: list[int] = [0] * (w * h)
        self.last_time: list[int] = [0] * (w * h)
        self.winner: Optional[tuple[int, int]] = None
        self._clock = 0
        self._tau = cfg.tau_us
        self._pwl_eval = cfg.pwl.eval_q16

    def values_grid(self) -> np.ndarray:
        """Copy of the state values as an (height, width) int64 array."""
        return np.asarray(self.values, dtype=np.int64).reshape(self._h, self._w)

    def last_time_grid(self) -> np.ndarray:
        """Copy of the last-update timestamps as an (height, width) array."""
        return np.asarray(self.last_time, dtype=np.int64).reshape(self._h, self._w)

    @property
    def winner_value(self) -> Optional[int]:
        """Raw state of the winner as of its own last update, if any."""
        if self.winner is None:
            return None
        wx, wy = self.winner
        return self.values[wy * self._w + wx]

    def update_pixel_state(self, x: int, y: int, t: int, gain: int = fp.GAIN_ONE) -> int:
        """Decay pixel (x, y) to time t, add ``gain``, store and return the result."""
        if not (0 <= x < self._w and 0 <= y < self._h):
            raise IndexError(f"pixel ({x},{y}) outside the configured resolution")
        return self._update(y * self._w + x, t, gain)

    def _update(self, idx: int, t: int, gain: int) -> int:
        t_old = self.last_time[idx]
        if t < t_old:
            raise OrderingError(f"event at t={t} precedes the pixel update at {t_old}")
        factor = self._pwl_eval(((t - t_old) << _DECAY_BITS) // self._tau)
        # Saturating gain + state*factor, truncated toward zero (inlined
        # fixed_mul/fixed_add_sat: this runs once per event).
        p = self.values[idx] * factor
        s = gain + (-(-p >> _DECAY_BITS) if p < 0 else p >> _DECAY_BITS)
        if s > _RAW_MAX:
            s = _RAW_MAX
        elif s < _RAW_MIN:
            s = _RAW_MIN
        self.values[idx] = s
        self.last_time[idx] = t
        return s

    def refresh_winner_state(self, t: int) -> Optional[int]:
        """Decay the winner to time t (no increment), write back, return it.

        Returns None when no winner exists yet.
        """
        if self.winner is None:
            return None
        return self._refresh(t)

    def _refresh(self, t: int) -> int:
        wx, wy = self.winner
        idx = wy * self._w + wx
        t_old = self.last_time[idx]
        if t < t_old:
            raise OrderingError(f"refresh at t={t} precedes the winner update at {t_old}")
        factor = self._pwl_eval(((t - t_old) << _DECAY_BITS) // self._tau)
        p = self.values[idx] * factor
        s = -(-p >> _DECAY_BITS) if p < 0 else p >> _DECAY_BITS
        self.values[idx] = s
        self.last_time[idx] = t
        return s

    def apply_ior(
        self,
        old_winner: Optional[tuple[int, int]],
        new_winner: tuple[int, int],
    ) -> None:
        """Excite the window around the new winner, inhibit the old one.

        Each adjustment saturates independently; pixels in both windows get
        both.  Last-update timestamps are untouched, so the adjustment
        decays from each pixel's own reference time like any stored value.
        """
        self._adjust_window(new_winner, self.cfg.excite_raw)
        if old_winner is not None:
            self._adjust_window(old_winner, -self.cfg.inhibit_raw)

    def _adjust_window(self, center: tuple[int, int], delta: int) -> None:
        if delta == 0:
            return
        cfg = self.cfg
        x0, y0, x1, y1 = foa_window(*center, cfg.foa_width, cfg.foa_height, cfg.resolution)
        values = self.values
        w = self._w
        for yy in range(y0, y1 + 1):
            base = yy * w
            for i in range(base + x0, base + x1 + 1):
                v = values[i] + delta
                if v > _RAW_MAX:
                    v = _RAW_MAX
                elif v < _RAW_MIN:
                    v = _RAW_MIN
                values[i] = v

    def process_event(self, e: Event, gain: int = fp.GAIN_ONE) -> Optional[FocusSample]:
        """Run one event through the update/compare/switch sequence.

        Returns a FocusSample when the focus moves (including the very first
        event), otherwise None.  An event on the current winner pixel only
        updates its state; no comparison, switch, or IOR happens.
        """
        t = e.t
        if t < self._clock:
            raise OrderingError(f"event at t={t} precedes the stream clock {self._clock}")
        self._clock = t
        x, y = e.x, e.y
        if not (0 <= x < self._w and 0 <= y < self._h):
            raise IndexError(f"pixel ({x},{y}) outside the configured resolution")
        s_new = self._update(y * self._w + x, t, gain)
        old = self.winner
        if old == (x, y):
            return None
        if old is not None and s_new <= self._refresh(t):
            return None
        new = (x, y)
        self.winner = new
        self.apply_ior(old, new)
        return FocusSample(t, x, y)
