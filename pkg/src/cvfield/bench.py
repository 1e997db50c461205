"""Timing harness for the decode and field-extraction paths.

Each mode times one full pass over a list of encoded groups, repeated
``reps`` times with the median kept.  Results serialize as JSON lines
(one object per mode) and can additionally be rendered to PNG figures,
one bar chart of per-frame cost and, when several frame counts were
measured, one scaling plot.

Modes:

* ``decode``       sequential pixel reconstruction only
* ``accumulate``   running displacement/residual fields, no pixel decode
* ``backtrace``    per-frame explicit chain walk (quadratic in group length)
* ``extract``      decode plus accumulate, the full extraction path
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass

from .accumulate import accumulate_gop, backtrace_compose
from .codec import decode_gop

MODES = ("decode", "accumulate", "backtrace", "extract")


@dataclass(frozen=True)
class BenchResult:
    mode: str
    frames: int
    reps: int
    seconds: float  # median wall time of one full pass
    ms_per_frame: float
    frames_per_s: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode,
                "frames": self.frames,
                "reps": self.reps,
                "seconds": round(self.seconds, 6),
                "ms_per_frame": round(self.ms_per_frame, 4),
                "frames_per_s": round(self.frames_per_s, 2),
            },
            sort_keys=True,
        )


def _pass_decode(gops):
    for gop in gops:
        decode_gop(gop)


def _pass_accumulate(gops):
    for gop in gops:
        accumulate_gop(gop)


def _pass_backtrace(gops):
    for gop in gops:
        for t in range(len(gop)):
            backtrace_compose(gop, t)


def _pass_extract(gops):
    for gop in gops:
        decode_gop(gop)
        accumulate_gop(gop)


_PASSES = {
    "decode": _pass_decode,
    "accumulate": _pass_accumulate,
    "backtrace": _pass_backtrace,
    "extract": _pass_extract,
}


def run_bench(gops, modes=MODES, reps: int = 3):
    """Time the requested modes over already-encoded groups.

    Returns one BenchResult per mode, in the order given.  ``reps`` must
    be at least 1; the median over repetitions is reported so a single
    scheduling hiccup cannot skew a comparison.
    """
    gops = list(gops)
    if not gops:
        raise ValueError("need at least one encoded group")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    unknown = [m for m in modes if m not in _PASSES]
    if unknown:
        raise ValueError(f"unknown bench mode {unknown[0]!r}")
    frame_total = sum(len(g) for g in gops)
    results = []
    for mode in modes:
        work = _PASSES[mode]
        timings = []
        for _ in range(reps):
            start = time.perf_counter()
            work(gops)
            timings.append(time.perf_counter() - start)
        seconds = statistics.median(timings)
        results.append(
            BenchResult(
                mode=mode,
                frames=frame_total,
                reps=reps,
                seconds=seconds,
                ms_per_frame=seconds * 1000.0 / frame_total,
                frames_per_s=frame_total / seconds if seconds > 0 else float("inf"),
            )
        )
    return results


def format_jsonl(results) -> str:
    """One JSON object per line, trailing newline included."""
    return "".join(r.to_json() + "\n" for r in results)


def render_figures(results, out_dir) -> list:
    """Write PNG charts for a result set; returns the created paths.

    Always writes a per-frame cost bar chart.  When at least one mode
    was measured at two or more frame counts, also writes a wall-time
    scaling plot with a dashed linear reference through the first point
    of each mode.
    """
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    results = list(results)
    if not results:
        raise ValueError("nothing to plot")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    labels = [
        f"{r.mode}\n({r.frames}f)" if _multi_counts(results) else r.mode
        for r in results
    ]
    fig, ax = plt.subplots(figsize=(1.2 + 0.9 * len(results), 3.6))
    ax.bar(range(len(results)), [r.ms_per_frame for r in results], color="#4878a8")
    ax.set_xticks(range(len(results)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("ms per frame")
    ax.set_title("median per-frame cost")
    fig.tight_layout()
    path = os.path.join(out_dir, "bench_ms_per_frame.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    by_mode = {}
    for r in results:
        by_mode.setdefault(r.mode, []).append(r)
    if any(len(v) > 1 for v in by_mode.values()):
        fig, ax = plt.subplots(figsize=(4.8, 3.6))
        for mode, rows in by_mode.items():
            rows = sorted(rows, key=lambda r: r.frames)
            xs = [r.frames for r in rows]
            ys = [r.seconds for r in rows]
            ax.plot(xs, ys, marker="o", label=mode)
            if len(rows) > 1 and xs[0] > 0:
                ref = [ys[0] * x / xs[0] for x in xs]
                ax.plot(xs, ref, linestyle="--", linewidth=0.8, color="gray")
        ax.set_xlabel("frames")
        ax.set_ylabel("seconds per pass")
        ax.set_title("wall time vs frame count (dashed: linear)")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, "bench_scaling.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written


def _multi_counts(results) -> bool:
    return len({r.frames for r in results}) > 1
