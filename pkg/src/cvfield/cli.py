"""Command-line interface.

Subcommands cover the full pipeline: encode pixel video into the
container, decode it back, extract accumulated motion/residual fields
as NPY arrays, render them as PPM images, synthesize test scenes with
known motion, and run protocol math and benchmarks.  Exit codes: 0 on
success, 1 for usage problems, 2 for malformed data or I/O failures.

All file outputs are written atomically (temp file in the target
directory, then rename) so an interrupted run never leaves a partial
artifact under the final name.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import bench as bench_mod
from .accumulate import accumulate_gop
from .bitstream import ContainerError, parse_container, write_container
from .codec import GopConfig, decode_video, encode_video
from .export import mv_to_image, residual_to_image, write_npy, write_ppm
from .ingest import (
    Y4M_SIGNATURE,
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
from .protocol import fuse_and_predict, load_score_csv, uniform_sample_indices

THREADS_ENV = "CVFIELD_THREADS"


class UsageError(Exception):
    """Bad arguments or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit 1
        raise UsageError(message)


def _write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_file(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _gop_config(args) -> GopConfig:
    return GopConfig(
        block_size=args.block, search_range=args.search, gop_length=args.gop
    )


def _add_codec_flags(parser) -> None:
    parser.add_argument("--block", type=int, default=16, help="block size in pixels")
    parser.add_argument(
        "--search", type=int, default=8, help="search radius in pixels"
    )
    parser.add_argument("--gop", type=int, default=12, help="frames per group")


def _load_frames(args):
    """Read input pixels as a frame list, sniffing the format when asked."""
    data = _read_file(args.input)
    fmt = args.format
    if fmt == "auto":
        fmt = "y4m" if data.startswith(Y4M_SIGNATURE) else "raw"
    if fmt == "y4m":
        return read_y4m(data)
    missing = [
        name
        for name, value in (
            ("--width", args.width),
            ("--height", args.height),
            ("--channels", args.channels),
        )
        if value is None
    ]
    if missing:
        raise UsageError(
            f"raw input needs {', '.join(missing)} (interleaved row-major bytes)"
        )
    return read_raw_frames(data, args.width, args.height, args.channels)


def _parse_frame_selection(arg: str, total: int):
    """Resolve 'all', 'N', or 'A-B' (inclusive) against the frame count."""
    if arg == "all":
        return range(total)
    try:
        if "-" in arg:
            a_txt, b_txt = arg.split("-", 1)
            a, b = int(a_txt), int(b_txt)
        else:
            a = b = int(arg)
    except ValueError:
        raise UsageError(f"bad frame selection {arg!r}; use all, N, or A-B") from None
    if a < 0 or b < a or b >= total:
        raise UsageError(
            f"frame selection {arg!r} outside 0..{total - 1}"
        )
    return range(a, b + 1)


def _accumulate_selected(gops, header, selection, workers: int = 1):
    """Yield (frame_index, state) for selected frames in ascending order.

    Groups are processed independently; with more than one worker thread
    the per-group accumulation runs concurrently but results are always
    emitted in frame order, so output bytes do not depend on thread
    count.
    """
    per_gop = {}
    for idx in selection:
        per_gop.setdefault(idx // header.gop_length, []).append(idx)
    gop_states = {}
    if workers > 1 and len(per_gop) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                g: pool.submit(accumulate_gop, gops[g]) for g in sorted(per_gop)
            }
            for g, fut in futures.items():
                gop_states[g] = fut.result()
    else:
        for g in sorted(per_gop):
            gop_states[g] = accumulate_gop(gops[g])
    for g in sorted(per_gop):
        base = g * header.gop_length
        for idx in per_gop[g]:
            yield idx, gop_states[g][idx - base]


def _thread_count(override=None) -> int:
    if override is not None:
        if override < 1:
            raise UsageError("--parallel must be >= 1")
        return override
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _cmd_encode(args) -> int:
    frames = _load_frames(args)
    gops = encode_video(frames, _gop_config(args))
    _write_atomic(args.output, write_container(gops))
    print(f"encoded {len(frames)} frames into {len(gops)} groups at {args.output}")
    return 0


def _cmd_decode(args) -> int:
    header, gops = parse_container(_read_file(args.input))
    frames = decode_video(gops)
    if args.format == "raw":
        _write_atomic(args.output, write_raw_frames(frames))
    else:
        _write_atomic(args.output, write_y4m(frames))
    print(f"decoded {len(frames)} frames to {args.output}")
    return 0


def _cmd_extract(args) -> int:
    workers = _thread_count(args.parallel)
    header, gops = parse_container(_read_file(args.input))
    selection = _parse_frame_selection(args.frames, header.frame_count)
    os.makedirs(args.out_dir, exist_ok=True)
    count = 0
    for idx, state in _accumulate_selected(gops, header, selection, workers):
        _write_atomic(
            os.path.join(args.out_dir, f"mv_{idx:06d}.npy"),
            write_npy(state.displacement),
        )
        _write_atomic(
            os.path.join(args.out_dir, f"res_{idx:06d}.npy"),
            write_npy(state.residual),
        )
        count += 1
    print(f"wrote {2 * count} arrays to {args.out_dir}")
    return 0


def _cmd_viz(args) -> int:
    header, gops = parse_container(_read_file(args.input))
    selection = _parse_frame_selection(args.frames, header.frame_count)
    os.makedirs(args.out_dir, exist_ok=True)
    count = 0
    for idx, state in _accumulate_selected(gops, header, selection):
        _write_atomic(
            os.path.join(args.out_dir, f"mv_{idx:06d}.ppm"),
            write_ppm(mv_to_image(state.displacement)),
        )
        _write_atomic(
            os.path.join(args.out_dir, f"res_{idx:06d}.ppm"),
            write_ppm(residual_to_image(state.residual, scale=args.residual_scale)),
        )
        count += 1
    print(f"wrote {2 * count} images to {args.out_dir}")
    return 0


def _cmd_synth(args) -> int:
    spec = scene_from_json(_read_file(args.spec).decode("utf-8"))
    frames, truth = synth_scene(spec)
    if args.format == "raw" or (
        args.format == "auto" and not args.output.endswith(".y4m")
    ):
        _write_atomic(args.output, write_raw_frames(frames))
    else:
        _write_atomic(args.output, write_y4m(frames))
    if args.truth_prefix:
        _write_atomic(args.truth_prefix + "_disp.npy", write_npy(truth.displacement))
        _write_atomic(
            args.truth_prefix + "_mask.npy",
            write_npy(truth.mask.astype(np.uint8)),
        )
    print(f"wrote {len(frames)} frames to {args.output}")
    return 0


def _cmd_sample(args) -> int:
    indices = uniform_sample_indices(args.frame_count, args.samples)
    print(",".join(str(i) for i in indices))
    return 0


def _cmd_fuse(args) -> int:
    streams = [load_score_csv(_read_file(p).decode("utf-8")) for p in args.scores]
    label, fused = fuse_and_predict(streams, return_probabilities=args.probs)
    print(label)
    print(",".join(f"{v:.10g}" for v in fused))
    return 0


def _bench_scene(width: int, height: int, frame_count: int) -> SceneSpec:
    third_h, third_w = height // 3, width // 3
    return SceneSpec(
        width=width,
        height=height,
        frame_count=frame_count,
        channels=3,
        background="hgrad",
        objects=(
            RectObject(
                size=(third_h, third_w), position=(4, 4), velocity=(1, 2), seed=11
            ),
            RectObject(
                size=(third_h, third_w),
                position=(height - third_h - 4, width - 2 * third_w),
                velocity=(-1, 1),
                seed=12,
            ),
            RectObject(
                size=(third_h, third_w),
                position=(third_h, third_w),
                velocity=(2, -1),
                seed=13,
            ),
        ),
    )


def _cmd_bench(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    try:
        counts = [int(tok) for tok in args.frames.split(",") if tok]
    except ValueError:
        raise UsageError(f"bad --frames list {args.frames!r}") from None
    if not counts or any(c < 2 for c in counts):
        raise UsageError("--frames needs comma-separated counts >= 2")
    modes = tuple(tok for tok in args.modes.split(",") if tok)
    for m in modes:
        if m not in bench_mod.MODES:
            raise UsageError(
                f"unknown mode {m!r}; choose from {', '.join(bench_mod.MODES)}"
            )
    results = []
    for count in counts:
        frames, _ = synth_scene(_bench_scene(args.width, args.height, count))
        gops = encode_video(frames, _gop_config(args))
        results.extend(bench_mod.run_bench(gops, modes=modes, reps=args.reps))
    text = bench_mod.format_jsonl(results)
    if args.out:
        _write_atomic(args.out, text.encode("utf-8"))
    else:
        sys.stdout.write(text)
    if args.fig_dir:
        for path in bench_mod.render_figures(results, args.fig_dir):
            print(f"figure: {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="cvfield",
        description="block-motion video codec with accumulated-field extraction",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("encode", help="compress pixel video into a container")
    p.add_argument("--input", required=True, help="y4m or raw pixel file")
    p.add_argument("--output", required=True, help="container path")
    p.add_argument(
        "--format", choices=("auto", "y4m", "raw"), default="auto"
    )
    p.add_argument("--width", type=int, help="raw input width")
    p.add_argument("--height", type=int, help="raw input height")
    p.add_argument("--channels", type=int, choices=(1, 3), help="raw input channels")
    _add_codec_flags(p)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="reconstruct pixel video from a container")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("y4m", "raw"), default="y4m")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser(
        "extract", help="write accumulated motion/residual fields as .npy"
    )
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", default="all", help="all, N, or A-B (inclusive)")
    p.add_argument(
        "--parallel",
        type=int,
        help=f"worker threads (default ${THREADS_ENV} or 1)",
    )
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("viz", help="render accumulated fields as .ppm images")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", default="all", help="all, N, or A-B (inclusive)")
    p.add_argument(
        "--residual-scale",
        type=float,
        default=1.0,
        help="multiplier applied to |residual| before clipping",
    )
    p.set_defaults(func=_cmd_viz)

    p = sub.add_parser("synth", help="render a JSON scene with known motion")
    p.add_argument("--spec", required=True, help="scene description JSON")
    p.add_argument("--output", required=True, help="video path (.y4m or raw)")
    p.add_argument("--format", choices=("auto", "y4m", "raw"), default="auto")
    p.add_argument(
        "--truth-prefix",
        help="also write <prefix>_disp.npy and <prefix>_mask.npy",
    )
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("sample", help="print evenly spaced frame indices")
    p.add_argument("--frame-count", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fuse", help="combine per-stream score CSVs into a label")
    p.add_argument("scores", nargs="+", help="CSV files, one per stream")
    p.add_argument(
        "--probs", action="store_true", help="print softmax probabilities"
    )
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("bench", help="time decode/extraction on synthetic video")
    p.add_argument("--width", type=int, default=340)
    p.add_argument("--height", type=int, default=256)
    p.add_argument(
        "--frames", default="24", help="comma-separated frame counts, e.g. 24,48"
    )
    p.add_argument(
        "--modes",
        default=",".join(bench_mod.MODES),
        help=f"comma-separated subset of {','.join(bench_mod.MODES)}",
    )
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", help="write JSON lines here instead of stdout")
    p.add_argument("--fig-dir", help="also render PNG charts into this directory")
    _add_codec_flags(p)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "func", None) is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ContainerError, Y4MError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
