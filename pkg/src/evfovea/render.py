"""Time-surface rendering and trajectory overlays, written as PGM/PPM.

A time surface encodes, per pixel, how recently it last fired: intensity
255*exp(-age/tau_vis), rounded, zero for pixels that never fired.  The
binary PGM/PPM formats are bit-exact, dependency-free and viewable
everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .events import Event, Resolution
from .saliency import FocusSample

TRAJECTORY_COLOR = (255, 0, 0)


@dataclass(frozen=True)
class TimeSurface:
    intensity: np.ndarray   # uint8, (height, width)
    t_ref: int
    tau_vis_us: int


def render_time_surface(
    events: Iterable[Event], t_ref: int, tau_vis_us: int, resolution: Resolution
) -> TimeSurface:
    """Render recency-as-brightness from each pixel's most recent event."""
    if tau_vis_us <= 0:
        raise ValueError("tau_vis_us must be positive")
    h, w = resolution.height, resolution.width
    last = np.full((h, w), -1, dtype=np.int64)
    for e in events:
        if e.t > t_ref:
            raise ValueError(f"event at t={e.t} is after t_ref={t_ref}")
        last[e.y, e.x] = e.t
    touched = last >= 0
    age = np.where(touched, t_ref - last, 0).astype(np.float64)
    gray = np.rint(255.0 * np.exp(-age / tau_vis_us)).astype(np.uint8)
    gray[~touched] = 0
    return TimeSurface(gray, t_ref, tau_vis_us)


def overlay_trajectory(surface: TimeSurface, trajectory: Sequence[FocusSample]) -> np.ndarray:
    """Promote the surface to RGB and paint trajectory pixels red."""
    h, w = surface.intensity.shape
    rgb = np.repeat(surface.intensity[:, :, None], 3, axis=2)
    for s in trajectory:
        if not (0 <= s.x < w and 0 <= s.y < h):
            raise ValueError(f"trajectory sample ({s.x},{s.y}) outside {w}x{h}")
        rgb[s.y, s.x] = TRAJECTORY_COLOR
    return rgb


def write_pgm(sink, gray: np.ndarray) -> None:
    """Binary PGM (P5, maxval 255)."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 array")
    h, w = gray.shape
    _write_bytes(sink, b"P5\n%d %d\n255\n" % (w, h) + gray.tobytes())


def write_ppm(sink, rgb: np.ndarray) -> None:
    """Binary PPM (P6, maxval 255)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("expected an (h, w, 3) uint8 array")
    h, w, _ = rgb.shape
    _write_bytes(sink, b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes())


def _write_bytes(sink, payload: bytes) -> None:
    if hasattr(sink, "write"):
        sink.write(payload)
    else:
        with open(sink, "wb") as f:
            f.write(payload)
