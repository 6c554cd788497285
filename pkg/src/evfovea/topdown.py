"""Top-down biasing ahead of the bottom-up stage.

Two mutually exclusive methods: hard gating drops every event outside a
region of interest; soft modulation lets all events through but scales the
per-event state increment by ROI membership, so off-ROI activity can still
win if it is overwhelmingly strong.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import fixedpoint as fp
from .events import Event, Resolution

MODES = ("off", "gating", "modulation")


@dataclass(frozen=True)
class RegionOfInterest:
    """Inclusive rectangle [x0, x1] x [y0, y1]."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError("region of interest corners are inverted")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError("region of interest must be non-negative")

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def within(self, resolution: Resolution) -> bool:
        return self.x1 < resolution.width and self.y1 < resolution.height

    @classmethod
    def full_frame(cls, resolution: Resolution) -> "RegionOfInterest":
        return cls(0, 0, resolution.width - 1, resolution.height - 1)

    @classmethod
    def upper_half(cls, resolution: Resolution) -> "RegionOfInterest":
        return cls(0, 0, resolution.width - 1, resolution.height // 2 - 1)

    @classmethod
    def left_half(cls, resolution: Resolution) -> "RegionOfInterest":
        return cls(0, 0, resolution.width // 2 - 1, resolution.height - 1)


@dataclass(frozen=True)
class TopDownConfig:
    """Bias mode plus its region and gains.

    ``gain_inside`` >= ``gain_outside`` >= 0: the strongest response is for
    events meeting the bias condition.  Defaults keep in-ROI events at the
    unmodulated increment of 1.0 and attenuate the rest to 0.25.
    """

    mode: str = "off"
    roi: Optional[RegionOfInterest] = None
    gain_inside: float = 1.0
    gain_outside: float = 0.25
    gain_inside_raw: int = field(init=False, repr=False)
    gain_outside_raw: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode != "off" and self.roi is None:
            raise ValueError(f"mode {self.mode!r} requires a region of interest")
        if not self.gain_inside >= self.gain_outside >= 0:
            raise ValueError("gains must satisfy gain_inside >= gain_outside >= 0")
        object.__setattr__(self, "gain_inside_raw", fp.fixed_from_real(self.gain_inside))
        object.__setattr__(self, "gain_outside_raw", fp.fixed_from_real(self.gain_outside))


def gate(e: Event, cfg: TopDownConfig) -> Optional[Event]:
    """Drop events outside the ROI when gating; identity in any other mode."""
    if cfg.mode != "gating":
        return e
    return e if cfg.roi.contains(e.x, e.y) else None


def modulation_gain(e: Event, cfg: TopDownConfig) -> int:
    """Raw Q12.8 state increment for this event; 1.0 unless modulating."""
    if cfg.mode != "modulation":
        return fp.GAIN_ONE
    return cfg.gain_inside_raw if cfg.roi.contains(e.x, e.y) else cfg.gain_outside_raw
