"""Evaluation protocol arithmetic.

Pure index and score math for running a clip-level classifier over a
video: pick evenly spaced frames, enumerate the standard ten spatial
views (four corners plus center, each with its horizontal flip), and
combine per-view scores from several feature streams into one label.
Scores are averaged per stream before any normalization, then streams
are summed; softmax is only applied when calibrated probabilities are
requested.
"""

from __future__ import annotations

import numpy as np


def uniform_sample_indices(frame_count: int, sample_count: int) -> list:
    """Pick ``sample_count`` evenly spaced indices from ``range(frame_count)``.

    Endpoints are anchored: the first sample is frame 0 and the last is
    frame ``frame_count - 1``.  Interior positions round half up, and
    ``sample_count = 1`` yields ``[0]``.  Indices may repeat when asking
    for more samples than frames.
    """
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if sample_count == 1:
        return [0]
    # floor(j*(n-1)/(k-1) + 1/2) in exact integer arithmetic; floats
    # misround the half-integer positions
    span, gaps = frame_count - 1, sample_count - 1
    return [(2 * j * span + gaps) // (2 * gaps) for j in range(sample_count)]


def crop_flip_variants(height: int, width: int, crop: int) -> list:
    """Enumerate the ten standard evaluation views of an image.

    Returns ``(top, left, flipped)`` tuples: the four corner crops in
    row-major corner order, then the center crop, each immediately
    followed by its horizontally flipped twin.
    """
    if crop < 1 or crop > height or crop > width:
        raise ValueError(
            f"crop {crop} does not fit inside {height}x{width}"
        )
    positions = [
        (0, 0),
        (0, width - crop),
        (height - crop, 0),
        (height - crop, width - crop),
        ((height - crop) // 2, (width - crop) // 2),
    ]
    out = []
    for top, left in positions:
        out.append((top, left, False))
        out.append((top, left, True))
    return out


def extract_view(image: np.ndarray, view: tuple, crop: int) -> np.ndarray:
    """Materialize one (top, left, flipped) view as a copy."""
    top, left, flipped = view
    patch = image[top : top + crop, left : left + crop]
    if flipped:
        patch = patch[:, ::-1]
    return np.ascontiguousarray(patch)


def softmax(scores: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis."""
    s = np.asarray(scores, dtype=np.float64)
    shifted = s - s.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def segment_average(scores: np.ndarray) -> np.ndarray:
    """Average per-view scores over the first axis: (N, K) -> (K,)."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 1:
        raise ValueError("expected a non-empty (views, classes) score matrix")
    return s.mean(axis=0)


def fuse_and_predict(streams, return_probabilities: bool = False):
    """Combine per-stream score matrices into a predicted class.

    Each entry of ``streams`` is an (N_views, K) raw-score matrix from
    one feature stream.  Views are averaged within each stream, the
    per-stream averages are summed, and the argmax (lowest index on
    ties) gives the label.  With ``return_probabilities`` the summed scores also pass
    through softmax.

    Returns ``(label, fused)`` where fused is the summed score vector,
    or ``(label, probabilities)`` when requested.
    """
    streams = [np.asarray(s, dtype=np.float64) for s in streams]
    if not streams:
        raise ValueError("need at least one score stream")
    k = streams[0].shape[-1]
    fused = np.zeros(k, dtype=np.float64)
    for s in streams:
        if s.ndim != 2 or s.shape[1] != k:
            raise ValueError("all streams must be (views, classes) with equal classes")
        fused += segment_average(s)
    label = int(np.argmax(fused))
    if return_probabilities:
        return label, softmax(fused)
    return label, fused


def load_score_csv(text: str) -> np.ndarray:
    """Parse comma-separated rows of floats into an (N, K) matrix."""
    rows = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ValueError(f"bad score row at line {ln}: {exc}") from None
    if not rows:
        raise ValueError("no score rows found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("score rows have inconsistent column counts")
    return np.asarray(rows, dtype=np.float64)
