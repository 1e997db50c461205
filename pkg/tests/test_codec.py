"""Pixel codec: value types, motion search, prediction, group round-trips."""

import numpy as np
import pytest

from cvfield import (
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
from conftest import make_frames


class TestFrame:
    def test_basic_properties(self, rng):
        data = rng.integers(0, 256, (6, 8, 3), dtype=np.uint8)
        f = Frame(data)
        assert (f.height, f.width, f.channels) == (6, 8, 3)
        np.testing.assert_array_equal(f.data, data)

    def test_data_is_read_only(self, rng):
        f = Frame(rng.integers(0, 256, (4, 4, 1), dtype=np.uint8))
        with pytest.raises(ValueError):
            f.data[0, 0, 0] = 1

    def test_integer_coercion_and_rejection(self):
        # in-range integers of any width are converted
        f = Frame(np.full((4, 4, 3), 200, dtype=np.int32))
        assert f.data.dtype == np.uint8
        with pytest.raises(ValueError):
            Frame(np.full((4, 4, 3), 300, dtype=np.int16))
        with pytest.raises(ValueError):
            Frame(np.full((4, 4, 3), -1, dtype=np.int16))
        with pytest.raises(ValueError):
            Frame(np.zeros((4, 4, 3), dtype=np.float64))

    def test_two_dim_input_promoted_to_mono(self):
        f = Frame(np.zeros((4, 5), dtype=np.uint8))
        assert (f.height, f.width, f.channels) == (4, 5, 1)

    def test_rejects_wrong_rank_and_channels(self):
        with pytest.raises(ValueError):
            Frame(np.zeros((2, 4, 4, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            Frame(np.zeros((4, 4, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            Frame(np.zeros((0, 4, 3), dtype=np.uint8))

    def test_byte_round_trip(self, rng):
        data = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
        f = Frame(data)
        again = Frame.from_bytes(f.to_bytes(), 5, 7, 3)
        assert again == f

    def test_from_bytes_length_check(self):
        with pytest.raises(ValueError):
            Frame.from_bytes(b"\x00" * 10, 2, 2, 3)

    def test_equality(self, rng):
        data = rng.integers(0, 256, (4, 4, 1), dtype=np.uint8)
        assert Frame(data.copy()) == Frame(data.copy())
        other = data.copy()
        other[0, 0, 0] ^= 0xFF
        assert Frame(data) != Frame(other)


class TestMotionField:
    def test_grid_shape_must_match_dims(self):
        vecs = np.zeros((2, 3, 2), dtype=np.int16)
        MotionField(height=16, width=20, block_size=8, vectors=vecs)
        with pytest.raises(ValueError):
            MotionField(height=16, width=32, block_size=8, vectors=vecs)

    def test_rejects_out_of_frame_reference(self):
        vecs = np.zeros((2, 2, 2), dtype=np.int16)
        vecs[0, 0] = (1, 0)  # block at row 0 would reference row -1
        with pytest.raises(ValueError):
            MotionField(height=16, width=16, block_size=8, vectors=vecs)

    def test_accepts_boundary_reference(self):
        vecs = np.zeros((2, 2, 2), dtype=np.int16)
        vecs[0, 0] = (-8, -8)  # bottom-right neighbor block, still inside
        MotionField(height=16, width=16, block_size=8, vectors=vecs)

    def test_partial_edge_blocks_bound_checked(self):
        # 10x10 frame, block 8: the corner block covers rows 8..9 only,
        # so it may reference upward but never below the frame
        vecs = np.zeros((2, 2, 2), dtype=np.int16)
        vecs[1, 1] = (2, 2)
        MotionField(height=10, width=10, block_size=8, vectors=vecs)
        bad = np.zeros((2, 2, 2), dtype=np.int16)
        bad[1, 1] = (-1, 0)  # rows 8..9 would reference 9..10, past the edge
        with pytest.raises(ValueError):
            MotionField(height=10, width=10, block_size=8, vectors=bad)


class TestResidualPlane:
    def test_range_enforced(self):
        ResidualPlane(np.full((4, 4, 3), 255, dtype=np.int16))
        ResidualPlane(np.full((4, 4, 3), -255, dtype=np.int16))
        with pytest.raises(ValueError):
            ResidualPlane(np.full((4, 4, 3), 256, dtype=np.int16))

    def test_oversized_integers_cannot_wrap(self):
        # 70000 wraps to 4464 under a blind int16 cast; must be rejected
        with pytest.raises(ValueError):
            ResidualPlane(np.full((4, 4, 3), 70000, dtype=np.int32))

    def test_float_input_rejected(self):
        with pytest.raises(ValueError):
            ResidualPlane(np.zeros((4, 4, 3), dtype=np.float64))

    def test_in_range_wider_integers_coerced(self):
        plane = ResidualPlane(np.full((2, 2, 1), -200, dtype=np.int64))
        assert plane.data.dtype == np.int16


class TestGopConfig:
    def test_defaults(self):
        cfg = GopConfig()
        assert (cfg.block_size, cfg.search_range, cfg.gop_length) == (16, 8, 12)

    def test_validation(self):
        with pytest.raises(ValueError):
            GopConfig(block_size=0)
        with pytest.raises(ValueError):
            GopConfig(search_range=-1)
        with pytest.raises(ValueError):
            GopConfig(gop_length=0)


def _brute_force_block(ref, cur, top, left, block, search):
    """Independent python-loop search: smallest SAD, then smallest
    |dr|+|dc|, ties broken by row-major candidate order."""
    H, W = ref.shape[:2]
    bh = min(block, H - top)
    bw = min(block, W - left)
    cur_block = cur[top : top + bh, left : left + bw].astype(np.int64)
    best = None
    for dr in range(-search, search + 1):
        for dc in range(-search, search + 1):
            r, c = top - dr, left - dc
            if r < 0 or c < 0 or r + bh > H or c + bw > W:
                continue
            sad = int(
                np.abs(ref[r : r + bh, c : c + bw].astype(np.int64) - cur_block).sum()
            )
            key = (sad, abs(dr) + abs(dc))
            if best is None or key < best[0]:
                best = (key, (dr, dc))
    return best[1]


class TestMotionSearch:
    def test_static_content_yields_zero_vectors(self, rng):
        still = Frame(rng.integers(0, 256, (24, 32, 3), dtype=np.uint8))
        cfg = GopConfig(block_size=8, search_range=4)
        mv = estimate_motion_field(still, still, cfg)
        assert not mv.vectors.any()

    def test_recovers_exact_translation(self, rng):
        base = rng.integers(0, 256, (32, 40, 3), dtype=np.uint8)
        ref = Frame(base)
        cur = Frame(np.roll(base, (2, 3), axis=(0, 1)))
        cfg = GopConfig(block_size=8, search_range=4)
        mv = estimate_motion_field(ref, cur, cfg)
        # interior blocks see pure translation; edge blocks hit the wrap seam
        np.testing.assert_array_equal(
            mv.vectors[1:-1, 1:-1], np.broadcast_to((2, 3), (2, 3, 2))
        )

    def test_zero_search_range(self, rng):
        ref = Frame(rng.integers(0, 256, (16, 16, 1), dtype=np.uint8))
        cur = Frame(rng.integers(0, 256, (16, 16, 1), dtype=np.uint8))
        mv = estimate_motion_field(ref, cur, GopConfig(block_size=8, search_range=0))
        assert not mv.vectors.any()

    def test_matches_brute_force_oracle(self, rng):
        for trial in range(8):
            h = int(rng.integers(9, 30))
            w = int(rng.integers(9, 30))
            c = int(rng.choice([1, 3]))
            block = int(rng.choice([4, 8]))
            search = int(rng.choice([2, 3, 4]))
            ref_a = rng.integers(0, 256, (h, w, c), dtype=np.uint8)
            # half noise trials, half near-duplicates with heavy ties
            if trial % 2:
                cur_a = ref_a.copy()
                cur_a[h // 2 :, :] = rng.integers(0, 4, (h - h // 2, w, c))
            else:
                cur_a = rng.integers(0, 256, (h, w, c), dtype=np.uint8)
            ref, cur = Frame(ref_a), Frame(cur_a)
            cfg = GopConfig(block_size=block, search_range=search)
            mv = estimate_motion_field(ref, cur, cfg)
            for br in range(mv.vectors.shape[0]):
                for bc in range(mv.vectors.shape[1]):
                    expect = _brute_force_block(
                        ref_a, cur_a, br * block, bc * block, block, search
                    )
                    assert tuple(mv.vectors[br, bc]) == expect, (
                        trial,
                        br,
                        bc,
                    )

    def test_single_block_matches_field(self, rng):
        ref_a = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        cur_a = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        cfg = GopConfig(block_size=8, search_range=3)
        mv = estimate_motion_field(Frame(ref_a), Frame(cur_a), cfg)
        for br in range(2):
            for bc in range(2):
                single = motion_estimate_block(
                    Frame(ref_a), Frame(cur_a), (br * 8, bc * 8), cfg
                )
                assert tuple(mv.vectors[br, bc]) == tuple(single)

    def test_block_origin_off_grid_rejected(self, rng):
        ref = Frame(rng.integers(0, 256, (16, 16, 1), dtype=np.uint8))
        with pytest.raises(ValueError):
            motion_estimate_block(ref, ref, (3, 0), GopConfig(block_size=8))

    def test_ties_prefer_smaller_taxi_length(self):
        # uniform frames: every candidate has SAD 0, (0, 0) must win
        flat = Frame(np.full((16, 16, 1), 128, dtype=np.uint8))
        mv = estimate_motion_field(flat, flat, GopConfig(block_size=8, search_range=4))
        assert not mv.vectors.any()

    def test_vectors_bounded_by_search_range(self, rng):
        frames = make_frames(rng, 24, 24, 3, 2, "noise")
        cfg = GopConfig(block_size=8, search_range=2)
        mv = estimate_motion_field(frames[0], frames[1], cfg)
        assert np.abs(mv.vectors).max() <= 2


class TestExpandBlockField:
    def test_expands_per_pixel(self):
        vecs = np.array(
            [[[0, 0], [0, 2]], [[2, 0], [1, 1]]], dtype=np.int16
        )
        mv = MotionField(height=4, width=4, block_size=2, vectors=vecs)
        grid = expand_block_field(mv)
        assert grid.shape == (4, 4, 2)
        for r in range(4):
            for c in range(4):
                assert tuple(grid[r, c]) == tuple(vecs[r // 2, c // 2])

    def test_crops_partial_edges(self):
        vecs = np.zeros((2, 2, 2), dtype=np.int16)
        vecs[1, 1] = (1, 1)
        mv = MotionField(height=5, width=7, block_size=4, vectors=vecs)
        grid = expand_block_field(mv)
        assert grid.shape == (5, 7, 2)
        assert tuple(grid[4, 6]) == (1, 1)
        assert tuple(grid[0, 0]) == (0, 0)


class TestPredictionAndResidual:
    def test_predict_gathers_referenced_blocks(self, rng):
        ref_a = rng.integers(0, 256, (8, 16, 1), dtype=np.uint8)
        vecs = np.zeros((1, 2, 2), dtype=np.int16)
        vecs[0, 1] = (0, 3)
        mv = MotionField(height=8, width=16, block_size=8, vectors=vecs)
        pred = predict_frame(Frame(ref_a), mv)
        # pixel i comes from ref at i - mv
        np.testing.assert_array_equal(pred.data[3, 12], ref_a[3, 9])
        np.testing.assert_array_equal(pred.data[:, :8], ref_a[:, :8])

    def test_residual_plus_prediction_restores_frame(self, rng):
        for _ in range(4):
            ref = Frame(rng.integers(0, 256, (16, 24, 3), dtype=np.uint8))
            cur = Frame(rng.integers(0, 256, (16, 24, 3), dtype=np.uint8))
            cfg = GopConfig(block_size=8, search_range=3)
            mv = estimate_motion_field(ref, cur, cfg)
            pred = predict_frame(ref, mv)
            res = compute_residual(cur, pred)
            assert res.data.min() >= -255 and res.data.max() <= 255
            restored = pred.data.astype(np.int32) + res.data
            np.testing.assert_array_equal(restored, cur.data.astype(np.int32))

    def test_dimension_mismatch_rejected(self, rng):
        a = Frame(rng.integers(0, 256, (8, 8, 1), dtype=np.uint8))
        b = Frame(rng.integers(0, 256, (8, 16, 1), dtype=np.uint8))
        with pytest.raises(ValueError):
            compute_residual(a, b)


class TestGopRoundTrip:
    @pytest.mark.parametrize("kind", ["noise", "static", "translate", "gradient"])
    def test_lossless_over_content_kinds(self, rng, kind):
        frames = make_frames(rng, 32, 40, 3, 9, kind)
        cfg = GopConfig(block_size=8, search_range=4, gop_length=12)
        gop = encode_gop(frames, cfg)
        decoded = decode_gop(gop)
        assert len(decoded) == len(frames)
        for orig, back in zip(frames, decoded):
            np.testing.assert_array_equal(back.data, orig.data)

    def test_mono_lossless(self, rng):
        frames = make_frames(rng, 24, 24, 1, 6, "translate")
        gop = encode_gop(frames, GopConfig(block_size=8, search_range=4, gop_length=8))
        for orig, back in zip(frames, decode_gop(gop)):
            np.testing.assert_array_equal(back.data, orig.data)

    def test_group_length_cap(self, rng):
        frames = make_frames(rng, 16, 16, 1, 5, "noise")
        with pytest.raises(ValueError):
            encode_gop(frames, GopConfig(block_size=8, search_range=2, gop_length=4))

    def test_prediction_chains_through_reconstructions(self, rng):
        # clipping in one frame must not break later frames
        frames = make_frames(rng, 16, 16, 1, 6, "noise")
        gop = encode_gop(frames, GopConfig(block_size=4, search_range=2, gop_length=8))
        decoded = decode_gop(gop)
        np.testing.assert_array_equal(decoded[-1].data, frames[-1].data)

    def test_encoded_gop_len(self, rng):
        frames = make_frames(rng, 16, 16, 1, 4, "noise")
        gop = encode_gop(frames, GopConfig(block_size=8, search_range=2, gop_length=8))
        assert len(gop) == 4
        assert len(gop.pframes) == 3


class TestVideoChunking:
    def test_gop_boundaries(self, rng):
        frames = make_frames(rng, 16, 16, 1, 30, "translate")
        cfg = GopConfig(block_size=8, search_range=2, gop_length=12)
        gops = encode_video(frames, cfg)
        assert [len(g) for g in gops] == [12, 12, 6]
        back = decode_video(gops)
        assert len(back) == 30
        for orig, again in zip(frames, back):
            np.testing.assert_array_equal(again.data, orig.data)

    def test_group_length_one_gives_all_anchors(self, rng):
        frames = make_frames(rng, 16, 16, 3, 5, "noise")
        cfg = GopConfig(block_size=8, search_range=2, gop_length=1)
        gops = encode_video(frames, cfg)
        assert len(gops) == 5
        assert all(len(g.pframes) == 0 for g in gops)

    def test_empty_video_rejected(self):
        with pytest.raises(ValueError):
            encode_video([], GopConfig())

    def test_mixed_dimensions_rejected(self, rng):
        frames = [
            Frame(rng.integers(0, 256, (16, 16, 1), dtype=np.uint8)),
            Frame(rng.integers(0, 256, (16, 24, 1), dtype=np.uint8)),
        ]
        with pytest.raises(ValueError):
            encode_video(frames, GopConfig(block_size=8, search_range=2))
