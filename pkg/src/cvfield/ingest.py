"""Pixel I/O and synthetic test scenes.

Covers the YUV4MPEG2 subset (C420 and Cmono), raw interleaved RGB24 with
out-of-band dimensions, and a deterministic scene generator that renders
translating rectangles and reports the true cumulative displacement of
every pixel, for checking accumulated motion against known kinematics.

Color conversion is BT.601 full-range with round-half-up:

    R = Y + 1.402 (V - 128)
    G = Y - 0.344136 (U - 128) - 0.714136 (V - 128)
    B = Y + 1.772 (U - 128)

and the forward direction Y = 0.299 R + 0.587 G + 0.114 B,
U = 128 + (B - Y) / 1.772, V = 128 + (R - Y) / 1.402.  Chroma is
upsampled nearest-neighbor and downsampled by 2x2 box average.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import Frame

Y4M_SIGNATURE = b"YUV4MPEG2 "


class Y4MError(ValueError):
    """Malformed or unsupported YUV4MPEG2 data."""


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def yuv_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Full-range BT.601 conversion of full-resolution planes to uint8 RGB."""
    y = y.astype(np.float64)
    du = u.astype(np.float64) - 128.0
    dv = v.astype(np.float64) - 128.0
    rgb = np.empty(y.shape + (3,), dtype=np.float64)
    rgb[:, :, 0] = y + 1.402 * dv
    rgb[:, :, 1] = y - 0.344136 * du - 0.714136 * dv
    rgb[:, :, 2] = y + 1.772 * du
    return np.clip(_round_half_up(rgb), 0, 255).astype(np.uint8)


def rgb_to_yuv(rgb: np.ndarray) -> tuple:
    """Inverse of yuv_to_rgb at full resolution; returns (y, u, v) uint8 planes."""
    r = rgb[:, :, 0].astype(np.float64)
    g = rgb[:, :, 1].astype(np.float64)
    b = rgb[:, :, 2].astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = 128.0 + (b - y) / 1.772
    v = 128.0 + (r - y) / 1.402
    to8 = lambda p: np.clip(_round_half_up(p), 0, 255).astype(np.uint8)
    return to8(y), to8(u), to8(v)


def _chroma_upsample(plane: np.ndarray, height: int, width: int) -> np.ndarray:
    return plane.repeat(2, axis=0).repeat(2, axis=1)[:height, :width]


def _chroma_downsample(plane: np.ndarray) -> np.ndarray:
    """2x2 box average with round-half-up; edge rows/cols of odd planes repeat."""
    h, w = plane.shape
    padded = plane.astype(np.float64)
    if h % 2:
        padded = np.vstack([padded, padded[-1:]])
    if w % 2:
        padded = np.hstack([padded, padded[:, -1:]])
    quads = padded.reshape(padded.shape[0] // 2, 2, padded.shape[1] // 2, 2)
    return np.clip(_round_half_up(quads.mean(axis=(1, 3))), 0, 255).astype(np.uint8)


def _parse_y4m_header(data: bytes):
    if not data.startswith(Y4M_SIGNATURE):
        raise Y4MError("missing YUV4MPEG2 signature")
    end = data.find(b"\n", len(Y4M_SIGNATURE))
    if end < 0:
        raise Y4MError("unterminated stream header")
    width = height = None
    colorspace = "C420"
    for token in data[len(Y4M_SIGNATURE) : end].split(b" "):
        if not token:
            continue
        kind, value = chr(token[0]), token[1:].decode("ascii", "replace")
        if kind == "W":
            width = int(value)
        elif kind == "H":
            height = int(value)
        elif kind == "C":
            colorspace = token.decode("ascii", "replace")
    if width is None or height is None or width < 1 or height < 1:
        raise Y4MError("stream header lacks valid W and H parameters")
    if colorspace not in ("C420", "Cmono"):
        raise Y4MError(f"unsupported colorspace {colorspace}")
    return width, height, colorspace, end + 1


def read_y4m(data: bytes):
    """Parse a YUV4MPEG2 stream into RGB (C420) or mono (Cmono) frames."""
    width, height, colorspace, pos = _parse_y4m_header(data)
    cw, ch = (width + 1) // 2, (height + 1) // 2
    luma_size = width * height
    frame_size = luma_size if colorspace == "Cmono" else luma_size + 2 * cw * ch
    frames = []
    while pos < len(data):
        if not data.startswith(b"FRAME", pos):
            raise Y4MError(f"expected FRAME marker at offset {pos}")
        end = data.find(b"\n", pos)
        if end < 0:
            raise Y4MError(f"unterminated FRAME header at offset {pos}")
        pos = end + 1
        if pos + frame_size > len(data):
            raise Y4MError(f"truncated frame payload at offset {pos}")
        payload = data[pos : pos + frame_size]
        pos += frame_size
        y = np.frombuffer(payload[:luma_size], dtype=np.uint8).reshape(height, width)
        if colorspace == "Cmono":
            frames.append(Frame(y[:, :, np.newaxis]))
        else:
            u = np.frombuffer(
                payload[luma_size : luma_size + cw * ch], dtype=np.uint8
            ).reshape(ch, cw)
            v = np.frombuffer(payload[luma_size + cw * ch :], dtype=np.uint8).reshape(
                ch, cw
            )
            frames.append(
                Frame(
                    yuv_to_rgb(
                        y,
                        _chroma_upsample(u, height, width),
                        _chroma_upsample(v, height, width),
                    )
                )
            )
    if not frames:
        raise Y4MError("stream contains no frames")
    return frames


def write_y4m(frames, frame_rate: str = "25:1") -> bytes:
    """Serialize frames as YUV4MPEG2: Cmono for 1 channel, C420 for 3."""
    frames = list(frames)
    if not frames:
        raise ValueError("cannot write an empty frame sequence")
    first = frames[0]
    mono = first.channels == 1
    colorspace = "Cmono" if mono else "C420"
    parts = [
        f"YUV4MPEG2 W{first.width} H{first.height} F{frame_rate} Ip A1:1 {colorspace}\n".encode()
    ]
    for f in frames:
        if f.data.shape != first.data.shape:
            raise ValueError("all frames must share dimensions")
        parts.append(b"FRAME\n")
        if mono:
            parts.append(f.data[:, :, 0].tobytes())
        else:
            y, u, v = rgb_to_yuv(f.data)
            parts.append(y.tobytes())
            parts.append(_chroma_downsample(u).tobytes())
            parts.append(_chroma_downsample(v).tobytes())
    return b"".join(parts)


def read_raw_frames(data: bytes, width: int, height: int, channels: int):
    """Split interleaved row-major RGB24 (or mono) bytes into frames."""
    frame_size = width * height * channels
    if frame_size < 1:
        raise ValueError("zero frame dimensions")
    if len(data) == 0 or len(data) % frame_size:
        raise ValueError(
            f"byte length {len(data)} is not a positive multiple of "
            f"frame size {frame_size}"
        )
    return [
        Frame.from_bytes(data[i : i + frame_size], height, width, channels)
        for i in range(0, len(data), frame_size)
    ]


def write_raw_frames(frames) -> bytes:
    return b"".join(f.to_bytes() for f in frames)


@dataclass(frozen=True)
class RectObject:
    """A textured rectangle translating at a fixed integer velocity."""

    size: tuple  # (height, width)
    position: tuple  # (row, col) of the top-left corner at frame 0
    velocity: tuple  # (vr, vc) pixels per frame
    fill: object = "noise"  # intensity, RGB tuple, or "noise"
    seed: int = 0

    def top_left(self, t: int) -> tuple:
        return (
            self.position[0] + t * self.velocity[0],
            self.position[1] + t * self.velocity[1],
        )


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    frame_count: int
    channels: int = 3
    background: object = 0  # intensity, RGB tuple, "hgrad", or "vgrad"
    objects: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True, eq=False)
class GroundTruthMotion:
    """True cumulative displacement per frame plus a validity mask.

    ``displacement[t, r, c]`` is the pixel's offset since frame 0;
    ``mask[t, r, c]`` is True only where the pixel has been continuously
    covered by the same object (or static background) since frame 0, so
    occlusion, disocclusion, and frame-edge entry are all masked out.
    """

    displacement: np.ndarray  # (T, H, W, 2) int16
    mask: np.ndarray  # (T, H, W) bool

    def __post_init__(self):
        object.__setattr__(
            self, "displacement", np.asarray(self.displacement, dtype=np.int16)
        )
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))


def scene_from_json(text: str) -> SceneSpec:
    """Build a SceneSpec from its JSON description.

    Expected shape::

        {"width": 96, "height": 64, "frame_count": 24, "channels": 3,
         "background": 32,
         "objects": [{"size": [16, 16], "position": [8, 8],
                      "velocity": [1, 2], "fill": "noise", "seed": 7}]}

    ``background`` and ``fill`` accept an integer, an RGB list, or the
    string forms documented on SceneSpec and RectObject.
    """
    import json

    raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ValueError("scene description must be a JSON object")

    def _color(v):
        return tuple(v) if isinstance(v, list) else v

    objects = []
    for entry in raw.get("objects", []):
        objects.append(
            RectObject(
                size=tuple(entry["size"]),
                position=tuple(entry["position"]),
                velocity=tuple(entry["velocity"]),
                fill=_color(entry.get("fill", "noise")),
                seed=int(entry.get("seed", 0)),
            )
        )
    return SceneSpec(
        width=int(raw["width"]),
        height=int(raw["height"]),
        frame_count=int(raw["frame_count"]),
        channels=int(raw.get("channels", 3)),
        background=_color(raw.get("background", 0)),
        objects=tuple(objects),
    )


def _background_plane(spec: SceneSpec) -> np.ndarray:
    H, W, C = spec.height, spec.width, spec.channels
    bg = spec.background
    plane = np.zeros((H, W, C), dtype=np.uint8)
    if bg == "hgrad":
        ramp = np.linspace(0, 255, W).astype(np.uint8)
        plane[:] = ramp[None, :, None]
    elif bg == "vgrad":
        ramp = np.linspace(0, 255, H).astype(np.uint8)
        plane[:] = ramp[:, None, None]
    elif isinstance(bg, tuple):
        plane[:] = np.asarray(bg, dtype=np.uint8)[: C]
    else:
        plane[:] = int(bg)
    return plane


def _object_texture(obj: RectObject, channels: int) -> np.ndarray:
    h, w = obj.size
    if obj.fill == "noise":
        rng = np.random.default_rng(obj.seed)
        return rng.integers(0, 256, size=(h, w, channels), dtype=np.uint8)
    tex = np.zeros((h, w, channels), dtype=np.uint8)
    if isinstance(obj.fill, tuple):
        tex[:] = np.asarray(obj.fill, dtype=np.uint8)[: channels]
    else:
        tex[:] = int(obj.fill)
    return tex


def synth_scene(spec: SceneSpec):
    """Render a scene and compute its ground-truth motion.

    Objects are painted in list order (later over earlier).  Coverage is
    tracked per frame; a pixel's truth chain breaks as soon as its source
    changes or its previous position falls outside the frame.
    """
    H, W, C, T = spec.height, spec.width, spec.channels, spec.frame_count
    textures = [_object_texture(o, C) for o in spec.objects]
    background = _background_plane(spec)
    velocities = [(0, 0)] + [o.velocity for o in spec.objects]  # source 0 = background

    frames = []
    cover = np.zeros((T, H, W), dtype=np.int32)
    for t in range(T):
        img = background.copy()
        for k, obj in enumerate(spec.objects):
            r, c = obj.top_left(t)
            rs, re = max(r, 0), min(r + obj.size[0], H)
            cs, ce = max(c, 0), min(c + obj.size[1], W)
            if rs >= re or cs >= ce:
                continue
            img[rs:re, cs:ce] = textures[k][rs - r : re - r, cs - c : ce - c]
            cover[t, rs:re, cs:ce] = k + 1
        frames.append(Frame(img))

    displacement = np.zeros((T, H, W, 2), dtype=np.int16)
    mask = np.zeros((T, H, W), dtype=bool)
    mask[0] = True
    rows = np.arange(H, dtype=np.int32)[:, None]
    cols = np.arange(W, dtype=np.int32)[None, :]
    vel = np.asarray(velocities, dtype=np.int32)
    for t in range(1, T):
        src = cover[t]
        vr = vel[src, 0]
        vc = vel[src, 1]
        pr = rows - vr
        pc = cols - vc
        inside = (pr >= 0) & (pr < H) & (pc >= 0) & (pc < W)
        prc = np.clip(pr, 0, H - 1)
        pcc = np.clip(pc, 0, W - 1)
        same_source = cover[t - 1][prc, pcc] == src
        ok = inside & same_source & mask[t - 1][prc, pcc]
        mask[t] = ok
        displacement[t, :, :, 0] = np.where(ok, displacement[t - 1, :, :, 0][prc, pcc] + vr, 0)
        displacement[t, :, :, 1] = np.where(ok, displacement[t - 1, :, :, 1][prc, pcc] + vc, 0)
    return frames, GroundTruthMotion(displacement=displacement, mask=mask)
