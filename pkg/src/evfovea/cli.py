"""Command-line front end: reproducible runs, stimulus generation, rendering.

Configs are flat ``key = value`` text with dotted section prefixes, chosen
so they stay diff-able and trivially parseable.  Unknown keys are rejected.
Exit codes: 0 success, 2 configuration error, 3 input-stream error.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from .events import (
    AddressDecode,
    Event,
    Resolution,
    StimulusSpec,
    PointSource,
    StreamError,
    StreamRangeError,
    generate_stimulus,
    read_csv_stream,
    read_raw_aer_stream,
    write_csv_stream,
)
from .fixedpoint import PwlTable
from .pipeline import format_stats, run_pipeline
from .render import TimeSurface, overlay_trajectory, render_time_surface, write_pgm, write_ppm
from .saliency import AttentionConfig, read_trajectory_csv, write_trajectory_csv
from .topdown import MODES, RegionOfInterest, TopDownConfig


class ConfigError(Exception):
    """Invalid or missing configuration; maps to exit status 2."""


def _read_kv(path: Path) -> dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _take_int(pairs: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(pairs.pop(key), 0)
    except ValueError:
        raise ConfigError(f"key {key!r}: not an integer") from None


def _take_float(pairs: dict[str, str], key: str, default: float) -> float:
    if key not in pairs:
        return default
    try:
        return float(pairs.pop(key))
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number") from None


def _take_str(pairs: dict[str, str], key: str, default: str | None = None) -> str:
    if key not in pairs:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return pairs.pop(key)


def _take_roi(pairs: dict[str, str], key: str, default: tuple[int, ...]) -> tuple[int, ...]:
    if key not in pairs:
        return default
    raw = pairs.pop(key).strip()
    if not (raw.startswith("[") and raw.endswith("]")):
        raise ConfigError(f"key {key!r}: expected [x0,y0,x1,y1]")
    try:
        parts = tuple(int(p) for p in raw[1:-1].split(","))
    except ValueError:
        raise ConfigError(f"key {key!r}: expected four integers") from None
    if len(parts) != 4:
        raise ConfigError(f"key {key!r}: expected four integers")
    return parts


def _reject_unknown(pairs: dict[str, str], path: Path) -> None:
    if pairs:
        key = sorted(pairs)[0]
        raise ConfigError(f"{path}: unknown key {key!r}")


@dataclass
class RunConfig:
    """Everything a run needs, with paths absolutized against the config file."""

    input: Path
    format: str
    output: Path
    width: int
    height: int
    tau: int
    excite: float
    inhibit: float
    foa_width: int
    foa_height: int
    pwl_segments: int
    pwl_cutoff: float
    seed: int
    td_mode: str
    td_roi: tuple[int, int, int, int]
    td_gain_inside: float
    td_gain_outside: float
    raw_x_shift: int
    raw_x_mask: int
    raw_y_shift: int
    raw_y_mask: int
    raw_pol_shift: int

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        base = path.resolve().parent
        pairs = _read_kv(path)
        width = _take_int(pairs, "resolution.width", 240)
        height = _take_int(pairs, "resolution.height", 180)
        fmt = _take_str(pairs, "format", "csv")
        if fmt not in ("csv", "raw"):
            raise ConfigError(f"key 'format': must be csv or raw, got {fmt!r}")
        mode = _take_str(pairs, "topdown.mode", "off")
        if mode not in MODES:
            raise ConfigError(f"key 'topdown.mode': must be one of {MODES}")
        rc = cls(
            input=(base / _take_str(pairs, "input")).resolve(),
            format=fmt,
            output=(base / _take_str(pairs, "output")).resolve(),
            width=width,
            height=height,
            tau=_take_int(pairs, "tau"),
            excite=_take_float(pairs, "excite", 1.0),
            inhibit=_take_float(pairs, "inhibit", 1.0),
            foa_width=_take_int(pairs, "foa.width", 16),
            foa_height=_take_int(pairs, "foa.height", 16),
            pwl_segments=_take_int(pairs, "pwl.segments", 16),
            pwl_cutoff=_take_float(pairs, "pwl.cutoff", 8.0),
            seed=_take_int(pairs, "seed", 0),
            td_mode=mode,
            td_roi=_take_roi(pairs, "topdown.roi", (0, 0, width - 1, height - 1)),
            td_gain_inside=_take_float(pairs, "topdown.gain_inside", 1.0),
            td_gain_outside=_take_float(pairs, "topdown.gain_outside", 0.25),
            raw_x_shift=_take_int(pairs, "raw.x_shift", 12),
            raw_x_mask=_take_int(pairs, "raw.x_mask", 0x3FF),
            raw_y_shift=_take_int(pairs, "raw.y_shift", 22),
            raw_y_mask=_take_int(pairs, "raw.y_mask", 0x1FF),
            raw_pol_shift=_take_int(pairs, "raw.pol_shift", 11),
        )
        _reject_unknown(pairs, path)
        return rc

    def to_text(self) -> str:
        roi = ",".join(str(v) for v in self.td_roi)
        lines = [
            f"input = {self.input}",
            f"format = {self.format}",
            f"output = {self.output}",
            f"resolution.width = {self.width}",
            f"resolution.height = {self.height}",
            f"tau = {self.tau}",
            f"excite = {self.excite}",
            f"inhibit = {self.inhibit}",
            f"foa.width = {self.foa_width}",
            f"foa.height = {self.foa_height}",
            f"pwl.segments = {self.pwl_segments}",
            f"pwl.cutoff = {self.pwl_cutoff}",
            f"seed = {self.seed}",
            f"topdown.mode = {self.td_mode}",
            f"topdown.roi = [{roi}]",
            f"topdown.gain_inside = {self.td_gain_inside}",
            f"topdown.gain_outside = {self.td_gain_outside}",
            f"raw.x_shift = {self.raw_x_shift}",
            f"raw.x_mask = {self.raw_x_mask}",
            f"raw.y_shift = {self.raw_y_shift}",
            f"raw.y_mask = {self.raw_y_mask}",
            f"raw.pol_shift = {self.raw_pol_shift}",
        ]
        return "\n".join(lines) + "\n"

    def attention_config(self) -> AttentionConfig:
        try:
            return AttentionConfig(
                resolution=Resolution(self.width, self.height),
                tau_us=self.tau,
                excite=self.excite,
                inhibit=self.inhibit,
                foa_width=self.foa_width,
                foa_height=self.foa_height,
                pwl=PwlTable(self.pwl_segments, self.pwl_cutoff),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def topdown_config(self) -> TopDownConfig | None:
        if self.td_mode == "off":
            return None
        try:
            roi = RegionOfInterest(*self.td_roi)
            if not roi.within(Resolution(self.width, self.height)):
                raise ValueError("topdown.roi exceeds the resolution")
            return TopDownConfig(
                mode=self.td_mode,
                roi=roi,
                gain_inside=self.td_gain_inside,
                gain_outside=self.td_gain_outside,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def decode(self) -> AddressDecode:
        return AddressDecode(
            x_shift=self.raw_x_shift,
            x_mask=self.raw_x_mask,
            y_shift=self.raw_y_shift,
            y_mask=self.raw_y_mask,
            pol_shift=self.raw_pol_shift,
        )


def cmd_run(args) -> int:
    rc = RunConfig.from_file(Path(args.config))
    cfg = rc.attention_config()
    td = rc.topdown_config()
    try:
        if rc.format == "csv":
            events = list(read_csv_stream(rc.input, cfg.resolution))
        else:
            events = list(read_raw_aer_stream(rc.input, rc.decode(), cfg.resolution))
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    out = run_pipeline(events, cfg, td)
    rc.output.mkdir(parents=True, exist_ok=True)
    write_csv_stream(out.events, rc.output / "foveated.csv", header="t_us,x,y,p")
    write_trajectory_csv(out.trajectory, rc.output / "trajectory.csv", header="t_us,cx,cy")
    (rc.output / "stats.txt").write_text(format_stats(out.stats), encoding="utf-8")
    (rc.output / "effective_config.txt").write_text(rc.to_text(), encoding="utf-8")
    return 0


_SOURCE_KEY = re.compile(r"^source\.(\d+)$")


def load_stimulus_spec(path: Path) -> StimulusSpec:
    pairs = _read_kv(path)
    width = _take_int(pairs, "resolution.width", 240)
    height = _take_int(pairs, "resolution.height", 180)
    duration = _take_int(pairs, "duration")
    seed = _take_int(pairs, "seed", 0)
    noise = _take_float(pairs, "noise.rate", 0.0)
    sources = []
    for key in sorted(pairs, key=lambda k: int(m.group(1)) if (m := _SOURCE_KEY.match(k)) else -1):
        m = _SOURCE_KEY.match(key)
        if not m:
            continue
        fields = pairs.pop(key).split(",")
        if len(fields) != 6:
            raise ConfigError(f"key {key!r}: expected x,y,rate_hz,start_us,stop_us,p")
        try:
            x, y = int(fields[0]), int(fields[1])
            rate = float(fields[2])
            start, stop, pol = int(fields[3]), int(fields[4]), int(fields[5])
        except ValueError:
            raise ConfigError(f"key {key!r}: malformed source") from None
        sources.append(PointSource(x, y, rate, start, stop, pol))
    _reject_unknown(pairs, path)
    spec = StimulusSpec(
        resolution=Resolution(width, height),
        duration_us=duration,
        sources=tuple(sources),
        noise_rate_hz=noise,
        seed=seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return spec


def cmd_gen(args) -> int:
    spec = load_stimulus_spec(Path(args.spec))
    write_csv_stream(generate_stimulus(spec), args.output, header="t_us,x,y,p")
    return 0


def cmd_render(args) -> int:
    try:
        resolution = Resolution(args.width, args.height)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        events = list(read_csv_stream(args.events, resolution))
    except StreamRangeError as exc:
        raise ConfigError(f"events do not fit {args.width}x{args.height}: {exc}") from exc
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    t_ref = args.t_ref if args.t_ref is not None else (events[-1].t if events else 0)
    try:
        surface = render_time_surface(events, t_ref, args.tau_vis, resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    gray = surface.intensity
    if args.invert:
        gray = (255 - gray).astype(gray.dtype)
    if args.trajectory is None:
        write_pgm(args.output, gray)
        return 0
    try:
        samples = read_trajectory_csv(args.trajectory)
        rgb = overlay_trajectory(TimeSurface(gray, t_ref, args.tau_vis), samples)
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_ppm(args.output, rgb)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evfovea", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the attention pipeline from a config file")
    p_run.add_argument("config", help="path to a key = value run config")
    p_run.set_defaults(func=cmd_run)

    p_gen = sub.add_parser("gen", help="generate a synthetic event stream")
    p_gen.add_argument("spec", help="path to a key = value stimulus spec")
    p_gen.add_argument("-o", "--output", required=True, help="output CSV path")
    p_gen.set_defaults(func=cmd_gen)

    p_render = sub.add_parser("render", help="render a time surface to PGM/PPM")
    p_render.add_argument("events", help="event CSV path")
    p_render.add_argument("--trajectory", help="trajectory CSV to overlay (emits PPM)")
    p_render.add_argument("-o", "--output", required=True, help="output image path")
    p_render.add_argument("--width", type=int, default=240)
    p_render.add_argument("--height", type=int, default=180)
    p_render.add_argument("--t-ref", type=int, default=None, help="reference time in us")
    p_render.add_argument("--tau-vis", type=int, default=50_000, help="decay constant in us")
    p_render.add_argument("--invert", action="store_true", help="darker = more recent")
    p_render.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StreamError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
