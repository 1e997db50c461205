"""CVB1 container: bit-exact serialization of encoded videos.

Layout (all multi-byte fields little-endian):

    header   magic "CVB1" | width u32 | height u32 | channels u8 |
             block_size u8 | search_range u8 | gop_length u16 |
             frame_count u32                                    (21 bytes)
    frames   1-byte type tag per frame: 0 = I, 1 = P
             I payload: raw row-major samples, H*W*C bytes
             P payload: block motion vectors as zigzag+varint
                        (row-major, dr then dc), then residual samples
                        as zigzag+varint (row-major, channel-interleaved)

Varints are canonical base-128 little-endian groups (continuation bit
0x80 on all but the last byte, no redundant trailing groups), so writing
is deterministic and parse/write are exact inverses.  Parsing arbitrary
bytes is safe: every rejection is a ContainerError carrying the byte
offset where the problem was found.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .codec import EncodedGop, Frame, GopConfig, MotionField, ResidualPlane

MAGIC = b"CVB1"
HEADER_SIZE = 21
_HEADER_FMT = "<4sIIBBBHI"
VARINT_MAX_BYTES = 10


class ContainerError(ValueError):
    """Malformed container data; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class ContainerHeader:
    width: int
    height: int
    channels: int
    block_size: int
    search_range: int
    gop_length: int
    frame_count: int

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if not 1 <= self.gop_length <= 0xFFFF:
            raise ValueError("gop_length must be in [1, 65535]")
        if not 1 <= self.frame_count <= 0xFFFFFFFF:
            raise ValueError("frame_count must be in [1, 2^32 - 1]")
        for name in ("width", "height"):
            if not 1 <= getattr(self, name) <= 0xFFFFFFFF:
                raise ValueError(f"{name} out of range")
        for name in ("block_size", "search_range"):
            if not 0 <= getattr(self, name) <= 0xFF:
                raise ValueError(f"{name} out of range")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")

    def to_bytes(self) -> bytes:
        return struct.pack(
            _HEADER_FMT,
            MAGIC,
            self.width,
            self.height,
            self.channels,
            self.block_size,
            self.search_range,
            self.gop_length,
            self.frame_count,
        )

    def config(self) -> GopConfig:
        return GopConfig(
            block_size=self.block_size,
            search_range=self.search_range,
            gop_length=self.gop_length,
        )

    @classmethod
    def for_video(cls, gops) -> "ContainerHeader":
        """Header describing a GOP sequence produced by the codec."""
        if not gops:
            raise ValueError("cannot build a header for zero GOPs")
        first = gops[0]
        cfg = first.config
        return cls(
            width=first.iframe.width,
            height=first.iframe.height,
            channels=first.iframe.channels,
            block_size=cfg.block_size,
            search_range=cfg.search_range,
            gop_length=cfg.gop_length,
            frame_count=sum(len(g) for g in gops),
        )


def zigzag_encode(n: int) -> int:
    """Map a signed integer to unsigned: 0, -1, 1, -2, ... -> 0, 1, 2, 3, ..."""
    return 2 * n if n >= 0 else -2 * n - 1


def zigzag_decode(u: int) -> int:
    if u < 0:
        raise ValueError("zigzag-coded values are unsigned")
    return u // 2 if u % 2 == 0 else -(u + 1) // 2


def varint_encode(u: int) -> bytes:
    """Base-128 little-endian groups; 0x80 marks continuation."""
    if u < 0:
        raise ValueError("varints encode unsigned integers")
    out = bytearray()
    while True:
        group = u & 0x7F
        u >>= 7
        out.append(group | 0x80 if u else group)
        if not u:
            return bytes(out)


def varint_decode(data: bytes, offset: int = 0) -> tuple:
    """Decode one varint; returns (value, next offset)."""
    value = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(data):
            raise ContainerError("truncated varint", pos)
        if pos - offset >= VARINT_MAX_BYTES:
            raise ContainerError("varint longer than 10 bytes", offset)
        byte = data[pos]
        value |= (byte & 0x7F) << shift
        shift += 7
        pos += 1
        if not byte & 0x80:
            if byte == 0 and pos - offset > 1:
                raise ContainerError("non-canonical varint", offset)
            return value, pos


def _zigzag_encode_array(values: np.ndarray) -> np.ndarray:
    v = values.astype(np.int64)
    return np.where(v >= 0, 2 * v, -2 * v - 1).astype(np.uint64)


def _zigzag_decode_array(u: np.ndarray) -> np.ndarray:
    half = (u >> np.uint64(1)).astype(np.int64)
    return np.where(u & np.uint64(1), -half - 1, half)


def _varint_encode_array(unsigned: np.ndarray) -> bytes:
    """Batch varint writer; byte-identical to varint_encode per value."""
    u = unsigned.astype(np.uint64).ravel()
    nbytes = np.ones(len(u), dtype=np.int64)
    for bits in range(7, 64, 7):
        nbytes += u >= (np.uint64(1) << np.uint64(bits))
    ends = np.cumsum(nbytes)
    out = np.zeros(int(ends[-1]) if len(u) else 0, dtype=np.uint8)
    starts = ends - nbytes
    max_len = int(nbytes.max()) if len(u) else 0
    for p in range(max_len):
        mask = nbytes > p
        group = (u[mask] >> np.uint64(7 * p)) & np.uint64(0x7F)
        cont = np.where(nbytes[mask] > p + 1, 0x80, 0).astype(np.uint64)
        out[starts[mask] + p] = (group | cont).astype(np.uint8)
    return out.tobytes()


def _varint_decode_array(data: bytes, offset: int, count: int, context: str):
    """Decode ``count`` varints starting at ``offset``.

    Returns (int64 values, next offset, per-value offsets).  Values needing
    ten groups are saturated to int64 extremes; the callers' range checks
    reject them either way.
    """
    if count == 0:
        return np.zeros(0, dtype=np.int64), offset, np.zeros(0, dtype=np.int64)
    buf = np.frombuffer(data, dtype=np.uint8, count=len(data) - offset, offset=offset)
    terminator = np.nonzero((buf & 0x80) == 0)[0]
    if len(terminator) < count:
        raise ContainerError(f"truncated {context}", offset + len(buf))
    ends = terminator[:count]
    starts = np.empty(count, dtype=np.int64)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    lengths = ends - starts + 1
    too_long = lengths > VARINT_MAX_BYTES
    if too_long.any():
        bad = int(np.argmax(too_long))
        raise ContainerError(
            f"varint longer than 10 bytes in {context}", offset + int(starts[bad])
        )
    non_canonical = (lengths > 1) & (buf[ends] == 0)
    if non_canonical.any():
        bad = int(np.argmax(non_canonical))
        raise ContainerError(
            f"non-canonical varint in {context}", offset + int(starts[bad])
        )
    values = np.zeros(count, dtype=np.uint64)
    for p in range(min(int(lengths.max()), 9)):
        mask = lengths > p
        group = (buf[starts[mask] + p] & 0x7F).astype(np.uint64)
        values[mask] |= group << np.uint64(7 * p)
    signed = values.astype(np.int64)
    huge = lengths > 9  # would not fit int64; certainly out of field range
    if huge.any():
        signed[huge] = np.iinfo(np.int64).max
    return signed, offset + int(ends[-1]) + 1, offset + starts


def write_container(gops, header: ContainerHeader | None = None) -> bytes:
    """Serialize a GOP sequence; identical input yields identical bytes."""
    gops = list(gops)
    if header is None:
        header = ContainerHeader.for_video(gops)
    _check_consistent(gops, header)
    parts = [header.to_bytes()]
    for gop in gops:
        parts.append(b"\x00")
        parts.append(gop.iframe.to_bytes())
        for mv, residual in gop.pframes:
            parts.append(b"\x01")
            parts.append(
                _varint_encode_array(_zigzag_encode_array(mv.vectors.ravel()))
            )
            parts.append(
                _varint_encode_array(_zigzag_encode_array(residual.data.ravel()))
            )
    return b"".join(parts)


def _check_consistent(gops, header: ContainerHeader):
    if not gops:
        raise ValueError("cannot write a container with zero GOPs")
    if sum(len(g) for g in gops) != header.frame_count:
        raise ValueError("header frame_count does not match the GOP sequence")
    for g in gops:
        cfg = g.config
        if (
            g.iframe.width != header.width
            or g.iframe.height != header.height
            or g.iframe.channels != header.channels
            or cfg.block_size != header.block_size
            or cfg.search_range != header.search_range
            or cfg.gop_length != header.gop_length
        ):
            raise ValueError("GOP is inconsistent with the container header")
    for g in gops[:-1]:
        if len(g) != header.gop_length:
            raise ValueError("only the last GOP may be shorter than gop_length")


def parse_header(data: bytes) -> ContainerHeader:
    if len(data) < HEADER_SIZE:
        raise ContainerError("truncated header", 0)
    magic, width, height, channels, block, search, gop_len, frames = struct.unpack_from(
        _HEADER_FMT, data, 0
    )
    if magic != MAGIC:
        raise ContainerError("bad magic", 0)
    if channels not in (1, 3):
        raise ContainerError(f"channels must be 1 or 3, got {channels}", 12)
    if block < 1:
        raise ContainerError("block_size must be >= 1", 13)
    if gop_len < 1:
        raise ContainerError("gop_length must be >= 1", 15)
    if width < 1 or height < 1:
        raise ContainerError("zero frame dimensions", 4)
    if frames < 1:
        raise ContainerError("frame_count must be >= 1", 17)
    return ContainerHeader(
        width=width,
        height=height,
        channels=channels,
        block_size=block,
        search_range=search,
        gop_length=gop_len,
        frame_count=frames,
    )


def parse_container(data: bytes) -> tuple:
    """Parse bytes into (header, GOP list); exact inverse of write_container.

    Safe on arbitrary input: every invalid stream raises ContainerError
    with the byte offset, and P-frame payloads are validated against the
    motion-vector and residual invariants before any frame is built.
    """
    header = parse_header(data)
    H, W, C = header.height, header.width, header.channels
    cfg = header.config()
    grid_rows = -(-H // header.block_size)
    grid_cols = -(-W // header.block_size)
    n_res = H * W * C

    offset = HEADER_SIZE
    gops = []
    current: list | None = None  # [iframe, [(mv, res), ...]]

    def finish_current():
        if current is not None:
            gops.append(
                EncodedGop(iframe=current[0], pframes=tuple(current[1]), config=cfg)
            )

    for frame_idx in range(header.frame_count):
        if offset >= len(data):
            raise ContainerError(f"truncated at frame {frame_idx}", offset)
        tag = data[offset]
        offset += 1
        if tag == 0:
            if current is not None and len(current[1]) != header.gop_length - 1:
                raise ContainerError(
                    f"short GOP before frame {frame_idx} "
                    f"(only the last GOP may have fewer P-frames)",
                    offset - 1,
                )
            finish_current()
            if offset + n_res > len(data):
                raise ContainerError(
                    f"truncated I-frame payload at frame {frame_idx}", len(data)
                )
            iframe = Frame.from_bytes(data[offset : offset + n_res], H, W, C)
            offset += n_res
            current = [iframe, []]
        elif tag == 1:
            if current is None:
                raise ContainerError("P-frame before any I-frame", offset - 1)
            if len(current[1]) >= header.gop_length - 1:
                raise ContainerError(
                    f"GOP exceeds gop_length {header.gop_length} at frame {frame_idx}",
                    offset - 1,
                )
            mv, offset = _parse_motion(data, offset, header, frame_idx, grid_rows, grid_cols)
            res, offset = _parse_residual(data, offset, header, frame_idx, n_res)
            current[1].append((mv, res))
        else:
            raise ContainerError(
                f"unknown frame type tag {tag} at frame {frame_idx}", offset - 1
            )
    finish_current()
    if offset != len(data):
        raise ContainerError("trailing data", offset)
    return header, gops


def _parse_motion(data, offset, header, frame_idx, grid_rows, grid_cols):
    n_mv = grid_rows * grid_cols * 2
    raw, offset, positions = _varint_decode_array(
        data, offset, n_mv, f"motion vectors of frame {frame_idx}"
    )
    values = _zigzag_decode_array(raw.astype(np.uint64))
    out_of_range = np.abs(values) > header.search_range
    if out_of_range.any():
        bad = int(np.argmax(out_of_range))
        raise ContainerError(
            f"motion vector component {values[bad]} outside +-{header.search_range} "
            f"in frame {frame_idx}",
            int(positions[bad]),
        )
    vectors = values.astype(np.int16).reshape(grid_rows, grid_cols, 2)
    try:
        mv = MotionField(
            height=header.height,
            width=header.width,
            block_size=header.block_size,
            vectors=vectors,
        )
    except ValueError as exc:
        raise ContainerError(f"frame {frame_idx}: {exc}", int(positions[0])) from exc
    return mv, offset


def _parse_residual(data, offset, header, frame_idx, n_res):
    raw, offset, positions = _varint_decode_array(
        data, offset, n_res, f"residual of frame {frame_idx}"
    )
    values = _zigzag_decode_array(raw.astype(np.uint64))
    out_of_range = np.abs(values) > 255
    if out_of_range.any():
        bad = int(np.argmax(out_of_range))
        raise ContainerError(
            f"residual sample outside [-255, 255] in frame {frame_idx}",
            int(positions[bad]),
        )
    plane = ResidualPlane(
        values.astype(np.int16).reshape(header.height, header.width, header.channels)
    )
    return plane, offset
