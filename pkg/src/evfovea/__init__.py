"""Event-driven saliency-based selective attention and foveation.

Consumes DVS/DAVIS address-event streams, tracks per-pixel saliency with
lazy fixed-point exponential decay, selects and shifts a focus of
attention with inhibition of return and optional top-down biasing, and
emits the foveated event stream plus the attention trajectory.
"""

from .events import (
    AddressDecode,
    DAVIS240,
    DAVIS240_DECODE,
    DVS128,
    DVS128_DECODE,
    Event,
    PointSource,
    Resolution,
    StimulusSpec,
    StreamError,
    StreamFormatError,
    StreamOrderError,
    StreamParseError,
    StreamRangeError,
    generate_stimulus,
    read_csv_stream,
    read_raw_aer_stream,
    write_csv_stream,
)
from .fixedpoint import (
    DECAY_ONE,
    GAIN_ONE,
    MAX_VALUE,
    MIN_VALUE,
    PwlTable,
    fixed_add_sat,
    fixed_from_real,
    fixed_mul,
    fixed_to_real,
    pwl_exp_decay,
)
from .pipeline import (
    AerWord,
    HandshakeChannel,
    HandshakeError,
    PipelineOutput,
    PipelineStats,
    WordMerger,
    fovea_filter,
    format_stats,
    merge_words,
    run_pipeline,
    split_words,
)
from .render import TimeSurface, overlay_trajectory, render_time_surface, write_pgm, write_ppm
from .saliency import (
    AttentionConfig,
    FocusSample,
    OrderingError,
    SaliencyState,
    foa_window,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .topdown import RegionOfInterest, TopDownConfig, gate, modulation_gain

__version__ = "0.1.0"
