"""Shared content generators for the test suite.

Frame sequences come in four flavors: independent noise per frame
(worst case for prediction), a repeated still (best case), a noise
field translating at a fixed velocity (exercises the search), and a
smooth gradient with a moving textured rectangle (mixed content).
Everything is seeded, so failures reproduce exactly.
"""

import numpy as np
import pytest

from cvfield import Frame, GopConfig, encode_video


def make_frames(rng, height, width, channels, count, kind="noise", velocity=(1, 2)):
    if kind == "noise":
        return [
            Frame(rng.integers(0, 256, (height, width, channels), dtype=np.uint8))
            for _ in range(count)
        ]
    if kind == "static":
        still = rng.integers(0, 256, (height, width, channels), dtype=np.uint8)
        return [Frame(still.copy()) for _ in range(count)]
    if kind == "translate":
        base = rng.integers(0, 256, (height, width, channels), dtype=np.uint8)
        vr, vc = velocity
        return [
            Frame(np.roll(base, (t * vr, t * vc), axis=(0, 1)))
            for t in range(count)
        ]
    if kind == "gradient":
        ramp = np.linspace(0, 255, width, dtype=np.float64)
        bg = np.broadcast_to(
            ramp[None, :, None], (height, width, channels)
        ).astype(np.uint8)
        rect_h, rect_w = max(4, height // 4), max(4, width // 4)
        tex = rng.integers(0, 256, (rect_h, rect_w, channels), dtype=np.uint8)
        vr, vc = velocity
        frames = []
        for t in range(count):
            img = bg.copy()
            r = (2 + t * vr) % max(1, height - rect_h)
            c = (2 + t * vc) % max(1, width - rect_w)
            img[r : r + rect_h, c : c + rect_w] = tex
            frames.append(Frame(img))
        return frames
    raise ValueError(f"unknown kind {kind!r}")


def encode_sample(rng, height=32, width=48, channels=3, count=13, kind="translate",
                  block=8, search=4, gop=12):
    frames = make_frames(rng, height, width, channels, count, kind)
    config = GopConfig(block_size=block, search_range=search, gop_length=gop)
    return frames, config, encode_video(frames, config)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
