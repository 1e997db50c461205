"""Minimal lossless block-based I/P codec.

Frames are predicted from the previous reconstructed frame by per-block
integer motion vectors and corrected with a full signed residual, so the
decode recurrence ``out[i] = prev[i - mv[i]] + residual[i]`` reproduces the
input exactly.  No transform, quantization, or entropy stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Frame:
    """One decoded picture: (height, width, channels) uint8 samples."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3:
            raise ValueError(f"frame data must be HxWxC, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"frame dimensions must be positive, got {data.shape}")
        if data.shape[2] not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {data.shape[2]}")
        if data.dtype != np.uint8:
            if not np.issubdtype(data.dtype, np.integer):
                raise ValueError(f"frame samples must be integers, got {data.dtype}")
            if np.any(data < 0) or np.any(data > 255):
                raise ValueError("frame samples must lie in [0, 255]")
            data = data.astype(np.uint8)
        data = np.ascontiguousarray(data)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and np.array_equal(self.data, other.data)

    @classmethod
    def from_bytes(cls, raw: bytes, height: int, width: int, channels: int) -> "Frame":
        if len(raw) != height * width * channels:
            raise ValueError(
                f"expected {height * width * channels} bytes, got {len(raw)}"
            )
        arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, channels)
        return cls(arr)

    def to_bytes(self) -> bytes:
        return self.data.tobytes()


@dataclass(frozen=True, eq=False)
class MotionField:
    """Per-block integer displacements for one predicted frame.

    ``vectors[r, c]`` is the (dr, dc) displacement of block (r, c); the
    pixels of that block reference ``position - (dr, dc)`` in the previous
    frame.  Every referenced pixel must lie inside the frame.
    """

    height: int
    width: int
    block_size: int
    vectors: np.ndarray  # (grid_rows, grid_cols, 2) int16

    def __post_init__(self):
        vectors = np.asarray(self.vectors)
        if not np.issubdtype(vectors.dtype, np.integer):
            raise ValueError(f"vectors must be integers, got {vectors.dtype}")
        if vectors.size and (vectors.min() < -32768 or vectors.max() > 32767):
            raise ValueError("vector components must fit in int16")
        vectors = np.ascontiguousarray(vectors.astype(np.int16))
        if vectors.ndim != 3 or vectors.shape[2] != 2:
            raise ValueError(f"vectors must be (rows, cols, 2), got {vectors.shape}")
        rows = -(-self.height // self.block_size)
        cols = -(-self.width // self.block_size)
        if vectors.shape[:2] != (rows, cols):
            raise ValueError(
                f"vector grid {vectors.shape[:2]} does not match "
                f"{self.height}x{self.width} frame with block size {self.block_size}"
            )
        vectors.flags.writeable = False
        object.__setattr__(self, "vectors", vectors)
        bad = _out_of_bounds_block(self)
        if bad is not None:
            raise ValueError(
                f"block {bad} references pixels outside the {self.height}x{self.width} frame"
            )

    @property
    def grid_rows(self) -> int:
        return self.vectors.shape[0]

    @property
    def grid_cols(self) -> int:
        return self.vectors.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MotionField)
            and (self.height, self.width, self.block_size)
            == (other.height, other.width, other.block_size)
            and np.array_equal(self.vectors, other.vectors)
        )


def _out_of_bounds_block(mv: "MotionField"):
    """Return the (row, col) of the first block whose reference leaves the frame."""
    B = mv.block_size
    r0 = np.arange(mv.grid_rows) * B
    c0 = np.arange(mv.grid_cols) * B
    r1 = np.minimum(r0 + B, mv.height)
    c1 = np.minimum(c0 + B, mv.width)
    dr = mv.vectors[:, :, 0].astype(np.int64)
    dc = mv.vectors[:, :, 1].astype(np.int64)
    ok = (
        (r0[:, None] - dr >= 0)
        & (r1[:, None] - dr <= mv.height)
        & (c0[None, :] - dc >= 0)
        & (c1[None, :] - dc <= mv.width)
    )
    if ok.all():
        return None
    flat = int(np.argmin(ok))
    return np.unravel_index(flat, ok.shape)


@dataclass(frozen=True, eq=False)
class ResidualPlane:
    """Per-pixel signed correction, samples in [-255, 255]."""

    data: np.ndarray  # (H, W, C) int16

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            raise ValueError(f"residual samples must be integers, got {data.dtype}")
        if data.ndim != 3:
            raise ValueError(f"residual data must be HxWxC, got shape {data.shape}")
        # range check precedes the cast so oversized inputs cannot wrap
        if data.size and (data.min() < -255 or data.max() > 255):
            raise ValueError("residual samples must lie in [-255, 255]")
        data = np.ascontiguousarray(data.astype(np.int16))
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def __eq__(self, other) -> bool:
        return isinstance(other, ResidualPlane) and np.array_equal(
            self.data, other.data
        )


@dataclass(frozen=True)
class GopConfig:
    block_size: int = 16
    search_range: int = 8
    gop_length: int = 12

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.search_range < 0:
            raise ValueError("search_range must be >= 0")
        if self.gop_length < 1:
            raise ValueError("gop_length must be >= 1")


@dataclass(frozen=True, eq=False)
class EncodedGop:
    """One I-frame plus the (motion, residual) pairs of its P-frames."""

    iframe: Frame
    pframes: tuple
    config: GopConfig = field(default_factory=GopConfig)

    def __post_init__(self):
        object.__setattr__(self, "pframes", tuple(self.pframes))
        if len(self.pframes) > self.config.gop_length - 1:
            raise ValueError(
                f"{len(self.pframes)} P-frames exceeds GOP length {self.config.gop_length}"
            )
        shape = (self.iframe.height, self.iframe.width)
        for t, (mv, res) in enumerate(self.pframes):
            if (mv.height, mv.width) != shape or mv.block_size != self.config.block_size:
                raise ValueError(f"P-frame {t}: motion field dimensions mismatch")
            if res.data.shape != self.iframe.data.shape:
                raise ValueError(f"P-frame {t}: residual dimensions mismatch")

    def __len__(self) -> int:
        return 1 + len(self.pframes)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EncodedGop)
            and self.iframe == other.iframe
            and self.config == other.config
            and len(self.pframes) == len(other.pframes)
            and all(
                a[0] == b[0] and a[1] == b[1]
                for a, b in zip(self.pframes, other.pframes)
            )
        )


def motion_estimate_block(
    ref: Frame, cur: Frame, block_origin: tuple, config: GopConfig
) -> tuple:
    """Full-search SAD match for the block at ``block_origin`` (row, col).

    Returns the (dr, dc) that minimizes the sum of absolute differences
    between the current block and the reference block at origin - (dr, dc),
    over all displacements with both components in [-S, S] whose reference
    block lies fully inside the frame.  Ties break to the smallest
    |dr| + |dc|, then to row-major (dr, dc) scan order.
    """
    if ref.data.shape != cur.data.shape:
        raise ValueError("reference and current frames must have equal dimensions")
    r0, c0 = block_origin
    B = config.block_size
    if r0 % B or c0 % B or not (0 <= r0 < cur.height and 0 <= c0 < cur.width):
        raise ValueError(f"block origin {block_origin} is not on the block grid")
    H, W = cur.height, cur.width
    r1, c1 = min(r0 + B, H), min(c0 + B, W)
    block = cur.data[r0:r1, c0:c1].astype(np.int32)
    S = config.search_range
    best = None
    best_key = None
    for dr in range(-S, S + 1):
        if r0 - dr < 0 or r1 - dr > H:
            continue
        for dc in range(-S, S + 1):
            if c0 - dc < 0 or c1 - dc > W:
                continue
            ref_block = ref.data[r0 - dr : r1 - dr, c0 - dc : c1 - dc].astype(np.int32)
            sad = int(np.abs(block - ref_block).sum())
            key = (sad, abs(dr) + abs(dc))
            if best_key is None or key < best_key:
                best_key = key
                best = (dr, dc)
    return best


def estimate_motion_field(ref: Frame, cur: Frame, config: GopConfig) -> MotionField:
    """SAD full search over every block at once.

    Produces exactly the same vectors as motion_estimate_block per block
    (same cost, same tie-breaking), vectorized per candidate displacement.
    """
    if ref.data.shape != cur.data.shape:
        raise ValueError("reference and current frames must have equal dimensions")
    H, W, _ = cur.data.shape
    B, S = config.block_size, config.search_range
    r0 = np.arange(0, H, B)
    c0 = np.arange(0, W, B)
    r1 = np.minimum(r0 + B, H)
    c1 = np.minimum(c0 + B, W)
    cur_i = cur.data.astype(np.int16)
    ref_i = ref.data.astype(np.int16)

    best_sad = np.full((len(r0), len(c0)), np.iinfo(np.int64).max, dtype=np.int64)
    best_taxi = np.full_like(best_sad, np.iinfo(np.int64).max)
    best = np.zeros((len(r0), len(c0), 2), dtype=np.int16)
    plane = np.zeros((H, W), dtype=np.int32)

    for dr in range(-S, S + 1):
        rs, re = max(0, dr), H + min(0, dr)
        row_ok = (r0 - dr >= 0) & (r1 - dr <= H)
        if not row_ok.any():
            continue
        for dc in range(-S, S + 1):
            cs, ce = max(0, dc), W + min(0, dc)
            col_ok = (c0 - dc >= 0) & (c1 - dc <= W)
            valid = row_ok[:, None] & col_ok[None, :]
            if not valid.any():
                continue
            plane[:] = 0
            diff = cur_i[rs:re, cs:ce] - ref_i[rs - dr : re - dr, cs - dc : ce - dc]
            np.abs(diff, out=diff)
            plane[rs:re, cs:ce] = diff.sum(axis=2, dtype=np.int32)
            sums = np.add.reduceat(np.add.reduceat(plane, r0, axis=0), c0, axis=1)
            taxi = abs(dr) + abs(dc)
            better = valid & (
                (sums < best_sad) | ((sums == best_sad) & (taxi < best_taxi))
            )
            if better.any():
                best_sad[better] = sums[better]
                best_taxi[better] = taxi
                best[better] = (dr, dc)
    return MotionField(height=H, width=W, block_size=B, vectors=best)


def expand_block_field(mv: MotionField) -> np.ndarray:
    """Expand block vectors to a per-pixel (H, W, 2) displacement grid."""
    B = mv.block_size
    return mv.vectors.repeat(B, axis=0).repeat(B, axis=1)[: mv.height, : mv.width]


def predict_frame(ref: Frame, mv: MotionField) -> Frame:
    """Motion-compensate: output pixel i takes ref[i - mv[i]]."""
    if (mv.height, mv.width) != (ref.height, ref.width):
        raise ValueError("motion field dimensions do not match the reference frame")
    field_px = expand_block_field(mv).astype(np.int32)
    rows = np.arange(ref.height, dtype=np.int32)[:, None] - field_px[:, :, 0]
    cols = np.arange(ref.width, dtype=np.int32)[None, :] - field_px[:, :, 1]
    bad = (rows < 0) | (rows >= ref.height) | (cols < 0) | (cols >= ref.width)
    if bad.any():
        idx = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise ValueError(f"pixel {idx} references a location outside the frame")
    return Frame(ref.data[rows, cols])


def compute_residual(cur: Frame, predicted: Frame) -> ResidualPlane:
    """Per-sample signed difference cur - predicted."""
    if cur.data.shape != predicted.data.shape:
        raise ValueError("current and predicted frames must have equal dimensions")
    return ResidualPlane(cur.data.astype(np.int16) - predicted.data.astype(np.int16))


def encode_gop(frames, config: GopConfig = GopConfig()) -> EncodedGop:
    """Encode up to gop_length frames as one I-frame plus P-frames.

    Motion is estimated against the reconstructed previous frame, and the
    residual stores the exact prediction error, so decode_gop reproduces
    the input bit for bit.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("cannot encode an empty frame sequence")
    if len(frames) > config.gop_length:
        raise ValueError(
            f"{len(frames)} frames exceeds GOP length {config.gop_length}"
        )
    shape = frames[0].data.shape
    for t, f in enumerate(frames):
        if f.data.shape != shape:
            raise ValueError(f"frame {t} dimensions differ from frame 0")
    recon = frames[0]
    pframes = []
    for cur in frames[1:]:
        mv = estimate_motion_field(recon, cur, config)
        predicted = predict_frame(recon, mv)
        residual = compute_residual(cur, predicted)
        recon = _apply_residual(predicted, residual)
        pframes.append((mv, residual))
    return EncodedGop(iframe=frames[0], pframes=tuple(pframes), config=config)


def _apply_residual(predicted: Frame, residual: ResidualPlane) -> Frame:
    total = predicted.data.astype(np.int16) + residual.data
    return Frame(np.clip(total, 0, 255).astype(np.uint8))


def decode_gop(gop: EncodedGop):
    """Decode sequentially: each P-frame is prediction plus residual.

    The [0, 255] clamp never fires for self-encoded GOPs, where residuals
    are exact corrections.
    """
    frames = [gop.iframe]
    recon = gop.iframe
    for mv, residual in gop.pframes:
        recon = _apply_residual(predict_frame(recon, mv), residual)
        frames.append(recon)
    return frames


def encode_video(frames, config: GopConfig = GopConfig()):
    """Split a frame sequence into GOPs of gop_length and encode each."""
    frames = list(frames)
    if not frames:
        raise ValueError("cannot encode an empty frame sequence")
    n = config.gop_length
    return [encode_gop(frames[i : i + n], config) for i in range(0, len(frames), n)]


def decode_video(gops):
    frames = []
    for gop in gops:
        frames.extend(decode_gop(gop))
    return frames
