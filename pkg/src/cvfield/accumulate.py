"""Back-tracing accumulation of motion and residuals.

Each P-frame of a GOP normally depends on the frame before it.  Composing
the per-frame reference maps back to the I-frame turns every P-frame into
an I-frame-relative pair of fields: an accumulated displacement grid and an
accumulated residual plane.  Frame t can then be reconstructed from the
I-frame alone:

    out[i] = iframe[i - disp[i]] + residual[i]

Two routes compute the fields: a linear-time feed-forward recurrence
(accumulate_step / accumulate_gop) that gathers the previous state at the
referenced location, and an explicit per-frame composition of reference
maps (backtrace_compose) that serves as the correctness oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .codec import EncodedGop, Frame, ResidualPlane, expand_block_field

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AccumulatorState:
    """Accumulated fields for one frame: displacement (H, W, 2) and residual (H, W, C).

    ``clamp_count`` counts gathers whose traced location had to be clamped
    into frame bounds; it stays 0 for any self-encoded stream.
    """

    frame_index: int
    displacement: np.ndarray  # (H, W, 2) int16
    residual: np.ndarray  # (H, W, C) int16
    clamp_count: int = 0

    def __post_init__(self):
        disp = np.ascontiguousarray(np.asarray(self.displacement, dtype=np.int16))
        res = np.ascontiguousarray(np.asarray(self.residual, dtype=np.int16))
        if disp.ndim != 3 or disp.shape[2] != 2:
            raise ValueError(f"displacement must be (H, W, 2), got {disp.shape}")
        if res.ndim != 3 or res.shape[:2] != disp.shape[:2]:
            raise ValueError("residual dimensions do not match displacement")
        disp.flags.writeable = False
        res.flags.writeable = False
        object.__setattr__(self, "displacement", disp)
        object.__setattr__(self, "residual", res)

    @property
    def height(self) -> int:
        return self.displacement.shape[0]

    @property
    def width(self) -> int:
        return self.displacement.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AccumulatorState)
            and self.frame_index == other.frame_index
            and np.array_equal(self.displacement, other.displacement)
            and np.array_equal(self.residual, other.residual)
        )


@dataclass(frozen=True, eq=False)
class TracedLocationGrid:
    """(H, W, 2) grid of coordinates: where each pixel lands when traced back."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.ascontiguousarray(np.asarray(self.coords, dtype=np.int32))
        if coords.ndim != 3 or coords.shape[2] != 2:
            raise ValueError(f"coords must be (H, W, 2), got {coords.shape}")
        h, w = coords.shape[:2]
        rows, cols = coords[:, :, 0], coords[:, :, 1]
        if (
            coords.size
            and (rows.min() < 0 or rows.max() >= h or cols.min() < 0 or cols.max() >= w)
        ):
            raise ValueError("traced coordinates must lie inside the frame")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, TracedLocationGrid) and np.array_equal(
            self.coords, other.coords
        )


def zero_state(height: int, width: int, channels: int) -> AccumulatorState:
    """The I-frame state: everything accumulates from zero."""
    return AccumulatorState(
        frame_index=0,
        displacement=np.zeros((height, width, 2), dtype=np.int16),
        residual=np.zeros((height, width, channels), dtype=np.int16),
    )


def _identity_grid(height: int, width: int) -> np.ndarray:
    rows = np.arange(height, dtype=np.int32)[:, None]
    cols = np.arange(width, dtype=np.int32)[None, :]
    grid = np.empty((height, width, 2), dtype=np.int32)
    grid[:, :, 0] = rows
    grid[:, :, 1] = cols
    return grid


def _gather_coords(mv_pixel: np.ndarray, height: int, width: int, on_oob: str):
    """Referenced coordinates i - mv[i], clamped or rejected when out of bounds."""
    rows = np.arange(height, dtype=np.int32)[:, None] - mv_pixel[:, :, 0].astype(np.int32)
    cols = np.arange(width, dtype=np.int32)[None, :] - mv_pixel[:, :, 1].astype(np.int32)
    oob = (rows < 0) | (rows >= height) | (cols < 0) | (cols >= width)
    n_oob = int(np.count_nonzero(oob))
    if n_oob:
        if on_oob == "raise":
            idx = np.unravel_index(int(np.argmax(oob)), oob.shape)
            raise ValueError(f"pixel {idx} references a location outside the frame")
        np.clip(rows, 0, height - 1, out=rows)
        np.clip(cols, 0, width - 1, out=cols)
        logger.warning("clamped %d out-of-bounds traced locations", n_oob)
    return rows, cols, n_oob


def accumulate_step(
    prev: AccumulatorState,
    mv_pixel: np.ndarray,
    residual: ResidualPlane,
    on_oob: str = "raise",
) -> AccumulatorState:
    """One feed-forward step of the accumulation recurrence.

    Gathers the previous state at the referenced location and adds this
    frame's contribution:

        disp[i] = prev_disp[i - mv[i]] + mv[i]
        res[i]  = prev_res[i - mv[i]]  + residual[i]

    Linear in the pixel count.  ``on_oob`` selects the policy for motion
    vectors that reference outside the frame: "raise" rejects the stream,
    "clamp" snaps the traced location to the border and counts the event.
    """
    H, W = prev.height, prev.width
    mv_pixel = np.asarray(mv_pixel)
    if mv_pixel.shape != (H, W, 2):
        raise ValueError(f"per-pixel motion grid must be ({H}, {W}, 2)")
    if residual.data.shape[:2] != (H, W):
        raise ValueError("residual dimensions do not match the accumulator state")
    rows, cols, n_oob = _gather_coords(mv_pixel, H, W, on_oob)
    # Deriving the displacement from the (possibly clamped) gather location
    # keeps the traced location of the new state inside the frame.  With no
    # clamping this is exactly prev_disp[i - mv[i]] + mv[i].
    disp = prev.displacement[rows, cols].astype(np.int32)
    disp[:, :, 0] += np.arange(H, dtype=np.int32)[:, None] - rows
    disp[:, :, 1] += np.arange(W, dtype=np.int32)[None, :] - cols
    res = prev.residual[rows, cols].astype(np.int32) + residual.data
    return AccumulatorState(
        frame_index=prev.frame_index + 1,
        displacement=disp.astype(np.int16),
        residual=res.astype(np.int16),
        clamp_count=prev.clamp_count + n_oob,
    )


def accumulate_gop(gop: EncodedGop, on_oob: str = "raise"):
    """Accumulated states for every frame of a GOP, t = 0 .. len(gop)-1.

    State 0 is the zero state; state t applies accumulate_step t times, so
    the whole pass is linear in frames x pixels.
    """
    iframe = gop.iframe
    states = [zero_state(iframe.height, iframe.width, iframe.channels)]
    for mv, residual in gop.pframes:
        states.append(
            accumulate_step(states[-1], expand_block_field(mv), residual, on_oob)
        )
    return states


def backtrace_compose(gop: EncodedGop, t: int):
    """Reference oracle: trace frame t's pixels back to the I-frame explicitly.

    Walks s = t, t-1, ..., 1, composing the per-frame reference maps
    ``loc -> loc - mv[loc]`` and summing each frame's residual at the
    traced location.  Recomputing this for every t costs quadratic time
    over the GOP, which is the point: it is the independent check for the
    feed-forward route.

    Returns (traced grid to frame 0, accumulator state for frame t).
    """
    if not 0 <= t < len(gop):
        raise ValueError(f"frame index {t} outside GOP of length {len(gop)}")
    iframe = gop.iframe
    H, W, C = iframe.data.shape
    loc = _identity_grid(H, W)
    res = np.zeros((H, W, C), dtype=np.int32)
    for s in range(t, 0, -1):
        mv, residual = gop.pframes[s - 1]
        rows, cols = loc[:, :, 0], loc[:, :, 1]
        res += residual.data[rows, cols].astype(np.int32)
        step = expand_block_field(mv)[rows, cols].astype(np.int32)
        loc = loc - step
        if (
            (loc[:, :, 0] < 0).any()
            or (loc[:, :, 0] >= H).any()
            or (loc[:, :, 1] < 0).any()
            or (loc[:, :, 1] >= W).any()
        ):
            raise ValueError(f"trace through frame {s} leaves the frame bounds")
    disp = (_identity_grid(H, W) - loc).astype(np.int16)
    state = AccumulatorState(
        frame_index=t, displacement=disp, residual=res.astype(np.int16)
    )
    return TracedLocationGrid(loc), state


def reconstruct_decoupled(iframe: Frame, state: AccumulatorState) -> Frame:
    """Rebuild frame t from the I-frame and its accumulated fields alone."""
    if (state.height, state.width) != (iframe.height, iframe.width):
        raise ValueError("state dimensions do not match the I-frame")
    if state.residual.shape[2] != iframe.channels:
        raise ValueError("state channels do not match the I-frame")
    rows, cols, _ = _gather_coords(state.displacement, iframe.height, iframe.width, "raise")
    total = iframe.data[rows, cols].astype(np.int32) + state.residual
    return Frame(np.clip(total, 0, 255).astype(np.uint8))
