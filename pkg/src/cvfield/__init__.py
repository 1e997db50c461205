"""Block-motion video codec with accumulated-field extraction.

The package splits into pixel coding (codec), running displacement and
residual fields traced back to each group's anchor frame (accumulate),
a byte-exact container (bitstream), pixel and scene I/O (ingest), array
and image export (export), evaluation score math (protocol), and a
timing harness (bench).  The ``cvfield`` console script in cli ties the
pieces together.
"""

from .accumulate import (
    AccumulatorState,
    TracedLocationGrid,
    accumulate_gop,
    accumulate_step,
    backtrace_compose,
    reconstruct_decoupled,
    zero_state,
)
from .bitstream import (
    ContainerError,
    ContainerHeader,
    parse_container,
    parse_header,
    write_container,
)
from .codec import (
    EncodedGop,
    Frame,
    GopConfig,
    MotionField,
    ResidualPlane,
    compute_residual,
    decode_gop,
    decode_video,
    encode_gop,
    encode_video,
    estimate_motion_field,
    expand_block_field,
    motion_estimate_block,
    predict_frame,
)
from .export import mv_to_image, residual_to_image, write_npy, write_ppm
from .ingest import (
    GroundTruthMotion,
    RectObject,
    SceneSpec,
    Y4MError,
    read_raw_frames,
    read_y4m,
    scene_from_json,
    synth_scene,
    write_raw_frames,
    write_y4m,
)
from .protocol import (
    crop_flip_variants,
    extract_view,
    fuse_and_predict,
    segment_average,
    softmax,
    uniform_sample_indices,
)

__version__ = "0.1.0"

__all__ = [
    "AccumulatorState",
    "ContainerError",
    "ContainerHeader",
    "EncodedGop",
    "Frame",
    "GopConfig",
    "GroundTruthMotion",
    "MotionField",
    "RectObject",
    "ResidualPlane",
    "SceneSpec",
    "TracedLocationGrid",
    "Y4MError",
    "accumulate_gop",
    "accumulate_step",
    "backtrace_compose",
    "compute_residual",
    "crop_flip_variants",
    "decode_gop",
    "decode_video",
    "encode_gop",
    "encode_video",
    "estimate_motion_field",
    "expand_block_field",
    "extract_view",
    "fuse_and_predict",
    "motion_estimate_block",
    "mv_to_image",
    "parse_container",
    "parse_header",
    "predict_frame",
    "read_raw_frames",
    "read_y4m",
    "reconstruct_decoupled",
    "residual_to_image",
    "scene_from_json",
    "segment_average",
    "softmax",
    "synth_scene",
    "uniform_sample_indices",
    "write_container",
    "write_npy",
    "write_ppm",
    "write_raw_frames",
    "write_y4m",
    "zero_state",
]
