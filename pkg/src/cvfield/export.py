"""Array and image exporters.

NPY output is written by hand against format version 1.0 so the byte
layout is fully pinned: magic, one header line padded with spaces to a
16-byte boundary, then C-order data.  Motion fields render to an HSV
color wheel (direction = hue, magnitude = saturation) and residuals to
grayscale magnitude images, both serialized as binary PPM/PGM.
"""

from __future__ import annotations

import numpy as np

_NPY_MAGIC = b"\x93NUMPY\x01\x00"
_DESCR = {
    np.dtype(np.uint8): "|u1",
    np.dtype(np.int16): "<i2",
    np.dtype(np.int32): "<i4",
    np.dtype(np.float64): "<f8",
}


def write_npy(array: np.ndarray) -> bytes:
    """Serialize an array in NPY format 1.0 with a 16-byte-aligned header."""
    arr = np.ascontiguousarray(array)
    if arr.dtype not in _DESCR:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    shape = ", ".join(str(s) for s in arr.shape)
    if len(arr.shape) == 1:
        shape += ","
    header = (
        "{'descr': '%s', 'fortran_order': False, 'shape': (%s), }"
        % (_DESCR[arr.dtype], shape)
    ).encode("latin1")
    # total length through the newline must be a multiple of 16
    unpadded = len(_NPY_MAGIC) + 2 + len(header) + 1
    header += b" " * (-unpadded % 16)
    if len(header) + 1 > 65535:
        raise ValueError("header too large for format 1.0")
    out = bytearray(_NPY_MAGIC)
    out += (len(header) + 1).to_bytes(2, "little")
    out += header
    out += b"\n"
    out += arr.tobytes(order="C")
    return bytes(out)


def _hsv_to_rgb_float(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorized HSV (h in degrees, s and v in [0,1]) to RGB in [0,1]."""
    h6 = (h % 360.0) / 60.0
    i = np.floor(h6).astype(np.int64) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    table = np.stack(
        [
            np.stack([v, t, p], axis=-1),
            np.stack([q, v, p], axis=-1),
            np.stack([p, v, t], axis=-1),
            np.stack([p, q, v], axis=-1),
            np.stack([t, p, v], axis=-1),
            np.stack([v, p, q], axis=-1),
        ],
        axis=0,
    )
    return np.take_along_axis(table, i[np.newaxis, :, :, np.newaxis], axis=0)[0]


def mv_to_image(field: np.ndarray, max_magnitude: float | None = None) -> np.ndarray:
    """Render per-pixel (dr, dc) displacement as an HSV direction wheel.

    Hue encodes atan2(dr, dc) with 0 degrees pointing along +columns,
    saturation encodes magnitude relative to ``max_magnitude`` (the
    field's own maximum when omitted; fully desaturated if all zero),
    and value is constant 1.  Returns uint8 RGB of shape (H, W, 3).
    """
    vec = np.asarray(field, dtype=np.float64)
    if vec.ndim != 3 or vec.shape[2] != 2:
        raise ValueError("expected an (H, W, 2) displacement field")
    dr = vec[:, :, 0]
    dc = vec[:, :, 1]
    magnitude = np.hypot(dr, dc)
    if max_magnitude is None:
        max_magnitude = float(magnitude.max())
    angle = np.arctan2(dr, dc)  # [-pi, pi]
    hue = (angle + np.pi) / (2.0 * np.pi) * 360.0
    hue = np.where(hue >= 360.0, 0.0, hue)
    if max_magnitude > 0:
        sat = np.minimum(magnitude / max_magnitude, 1.0)
    else:
        sat = np.zeros_like(magnitude)
    rgb = _hsv_to_rgb_float(hue, sat, np.ones_like(sat))
    return np.clip(np.floor(rgb * 255.0 + 0.5), 0, 255).astype(np.uint8)


def residual_to_image(residual: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Render signed residual as scaled absolute magnitude, uint8.

    Mono input is broadcast to three channels so both residual layouts
    produce an RGB image.
    """
    res = np.asarray(residual, dtype=np.float64)
    if res.ndim != 3:
        raise ValueError("expected an (H, W, C) residual plane")
    img = np.clip(np.floor(np.abs(res) * scale + 0.5), 0, 255).astype(np.uint8)
    if img.shape[2] == 1:
        img = np.repeat(img, 3, axis=2)
    elif img.shape[2] != 3:
        raise ValueError("residual must have 1 or 3 channels")
    return img


def write_ppm(image: np.ndarray) -> bytes:
    """Serialize uint8 (H, W, 3) as binary PPM (P6) or (H, W) / (H, W, 1) as PGM (P5)."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        raise ValueError("image must be uint8")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError("image must be (H, W), (H, W, 1), or (H, W, 3)")
    h, w = img.shape[0], img.shape[1]
    if h < 1 or w < 1:
        raise ValueError("image dimensions must be positive")
    return b"%s\n%d %d\n255\n" % (magic, w, h) + img.tobytes(order="C")
