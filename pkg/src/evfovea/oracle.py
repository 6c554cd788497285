"""Reference implementations used for verification, not in the pipeline.

Two deliberately naive replays of the per-event attention procedure:

* ``FloatState`` / ``reference_process_event`` — exact real arithmetic with
  a true exponential.  Quantization-free, so it can disagree with the
  fixed-point engine only at comparisons closer than the quantization
  error; test generators are expected to keep margins above that.
* ``QuantizedReference`` — an independent integer replay (sparse dict
  state, explicit window loops) that routes every number through the same
  fixed-point and decay-table primitives as the engine.  Its switch
  sequence must match the engine's exactly, on any stream.

``global_argmax`` is the brute-force definition the lazy winner tracking
approximates; after inhibition the two may legitimately diverge, which is
measured, not asserted.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import fixedpoint as fp
from .events import Event
from .saliency import AttentionConfig, FocusSample, OrderingError


class FloatState:
    """Real-valued double of the engine state: dense grids, one winner."""

    def __init__(self, cfg: AttentionConfig):
        self.cfg = cfg
        h, w = cfg.resolution.height, cfg.resolution.width
        self.values = np.zeros((h, w), dtype=np.float64)
        self.last_time = np.zeros((h, w), dtype=np.int64)
        self.winner: Optional[tuple[int, int]] = None


def _window(cx, cy, mw, mh, res):
    x0 = max(cx - mw // 2, 0)
    y0 = max(cy - mh // 2, 0)
    x1 = min(cx + mw // 2 - 1, res.width - 1)
    y1 = min(cy + mh // 2 - 1, res.height - 1)
    return x0, y0, x1, y1


def reference_process_event(
    state: FloatState,
    e: Event,
    gain: float = 1.0,
    margin_log: Optional[list[float]] = None,
) -> Optional[FocusSample]:
    """Replay one event in exact real arithmetic.

    Same contract as SaliencyState.process_event; values are clamped to the
    representable state range but never rounded.  When ``margin_log`` is
    given, |candidate - winner| is appended for every comparison actually
    performed, so generators can enforce tie-free streams.
    """
    cfg = state.cfg
    tau = cfg.tau_us
    x, y, t = e.x, e.y, e.t
    t_old = int(state.last_time[y, x])
    if t < t_old:
        raise OrderingError(f"event at t={t} precedes pixel update at {t_old}")
    s_new = gain + state.values[y, x] * math.exp((t_old - t) / tau)
    s_new = min(max(s_new, fp.MIN_VALUE), fp.MAX_VALUE)
    state.values[y, x] = s_new
    state.last_time[y, x] = t

    old = state.winner
    if old == (x, y):
        return None
    if old is not None:
        wx, wy = old
        t_old = int(state.last_time[wy, wx])
        if t < t_old:
            raise OrderingError(f"refresh at t={t} precedes winner update at {t_old}")
        s_star = state.values[wy, wx] * math.exp((t_old - t) / tau)
        state.values[wy, wx] = s_star
        state.last_time[wy, wx] = t
        if margin_log is not None:
            margin_log.append(abs(s_new - s_star))
        if s_new <= s_star:
            return None

    state.winner = (x, y)
    res = cfg.resolution
    x0, y0, x1, y1 = _window(x, y, cfg.foa_width, cfg.foa_height, res)
    region = state.values[y0 : y1 + 1, x0 : x1 + 1]
    np.clip(region + cfg.excite, fp.MIN_VALUE, fp.MAX_VALUE, out=region)
    if old is not None:
        x0, y0, x1, y1 = _window(*old, cfg.foa_width, cfg.foa_height, res)
        region = state.values[y0 : y1 + 1, x0 : x1 + 1]
        np.clip(region - cfg.inhibit, fp.MIN_VALUE, fp.MAX_VALUE, out=region)
    return FocusSample(t, x, y)


def global_argmax(state: FloatState, t: int) -> tuple[int, int]:
    """Coordinate of the maximum once every pixel is decayed to time t.

    Read-only; ties resolve to the smallest y, then the smallest x.  This is
    the definition the lazy winner approximates: after an inhibition step a
    pixel outside both windows can silently hold the true maximum.
    """
    decayed = state.values * np.exp((state.last_time - t) / state.cfg.tau_us)
    flat = int(np.argmax(decayed))
    h, w = decayed.shape
    return flat % w, flat // w


class QuantizedReference:
    """Independent fixed-point replay for differential testing.

    Keeps state in a dict keyed by pixel and walks inhibition windows with
    plain loops; shares only the Q12.8/decay-table primitives with the
    engine.  Any bookkeeping or windowing bug in either implementation
    shows up as a switch-sequence mismatch.
    """

    def __init__(self, cfg: AttentionConfig):
        self.cfg = cfg
        self.state: dict[tuple[int, int], list[int]] = {}  # (x, y) -> [raw, t]
        self.winner: Optional[tuple[int, int]] = None

    def _decay(self, raw: int, dt: int) -> int:
        return fp.fixed_mul(raw, fp.pwl_exp_decay(dt, self.cfg.tau_us, self.cfg.pwl))

    def _adjust_window(self, center: tuple[int, int], delta: int) -> None:
        res = self.cfg.resolution
        x0, y0, x1, y1 = _window(*center, self.cfg.foa_width, self.cfg.foa_height, res)
        for yy in range(y0, y1 + 1):
            for xx in range(x0, x1 + 1):
                cell = self.state.setdefault((xx, yy), [0, 0])
                cell[0] = fp.fixed_add_sat(cell[0], delta)

    def process_event(self, e: Event, gain: int = fp.GAIN_ONE) -> Optional[FocusSample]:
        cell = self.state.setdefault((e.x, e.y), [0, 0])
        if e.t < cell[1]:
            raise OrderingError(f"event at t={e.t} precedes pixel update at {cell[1]}")
        s_new = fp.fixed_add_sat(gain, self._decay(cell[0], e.t - cell[1]))
        cell[0], cell[1] = s_new, e.t

        old = self.winner
        if old == (e.x, e.y):
            return None
        if old is not None:
            wcell = self.state[old]
            s_star = self._decay(wcell[0], e.t - wcell[1])
            wcell[0], wcell[1] = s_star, e.t
            if s_new <= s_star:
                return None
        self.winner = (e.x, e.y)
        self._adjust_window(self.winner, self.cfg.excite_raw)
        if old is not None:
            self._adjust_window(old, -self.cfg.inhibit_raw)
        return FocusSample(e.t, e.x, e.y)
