import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from camra import entropy
from camra.entropy import (DecodeError, decode_band, decode_sign_plane,
                           encode_band, encode_sign_plane, entropy_estimate)


def _roundtrip(grid, band_class="luma", band_id=0):
    seg = encode_band(grid, band_class, band_id)
    out, used = decode_band(seg.payload, grid.shape, band_class, band_id)
    assert used == len(seg.payload)
    assert np.array_equal(out, grid)
    return seg


class TestBandCoding:
    def test_all_zero_block_is_tiny(self):
        seg = encode_band(np.zeros((64, 64), dtype=np.int64), "luma", 0)
        assert len(seg.payload) <= 16  # measured: 8 bytes

    def test_random_sign_grid(self):
        rng = np.random.default_rng(0)
        _roundtrip(rng.choice([-1, 1], size=(64, 64)).astype(np.int64))

    def test_geometric_grid_close_to_entropy(self):
        rng = np.random.default_rng(1)
        vals = rng.geometric(0.05, size=(128, 128)) - 1
        g = (vals * rng.choice([-1, 1], size=vals.shape)).astype(np.int64)
        seg = _roundtrip(g)
        h0 = entropy_estimate(g)
        assert seg.declared_bpp <= 1.10 * h0

    @given(hnp.arrays(np.int64, (17, 9),
                      elements=st.integers(-(1 << 23), (1 << 23) - 1)))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_property(self, g):
        _roundtrip(g)

    @pytest.mark.parametrize("shape", [(1, 2), (64, 64), (65, 64), (64, 65),
                                       (130, 70), (256, 4)])
    def test_round_trip_shapes(self, shape):
        rng = np.random.default_rng(sum(shape))
        g = rng.integers(-(1 << 16), 1 << 16, size=shape).astype(np.int64)
        g *= rng.random(shape) < 0.3
        _roundtrip(g, "chroma", 3)

    def test_magnitude_boundary(self):
        g = np.array([[(1 << 24) - 1, -(1 << 24) + 1], [0, 1]], dtype=np.int64)
        _roundtrip(g)

    def test_magnitude_limit_enforced(self):
        with pytest.raises(ValueError):
            encode_band(np.array([[1 << 24]], dtype=np.int64), "luma", 0)

    def test_expansion_bounded_by_raw_escape(self):
        rng = np.random.default_rng(2)
        g = rng.integers(-(1 << 23), 1 << 23, size=(64, 64)).astype(np.int64)
        seg = encode_band(g, "luma", 0)
        assert len(seg.payload) <= 4 * g.size + 64

    def test_expansion_bounded_multi_block(self):
        rng = np.random.default_rng(3)
        g = rng.integers(-(1 << 23), 1 << 23, size=(256, 256)).astype(np.int64)
        seg = encode_band(g, "luma", 0)
        assert len(seg.payload) <= 4 * g.size + 64
        out, _ = decode_band(seg.payload, g.shape, "luma", 0)
        assert np.array_equal(out, g)

    def test_decode_deterministic(self):
        rng = np.random.default_rng(4)
        g = rng.integers(-500, 500, size=(70, 70)).astype(np.int64)
        seg = encode_band(g, "luma", 1)
        a, _ = decode_band(seg.payload, g.shape, "luma", 1)
        b, _ = decode_band(seg.payload, g.shape, "luma", 1)
        assert np.array_equal(a, b)

    def test_band_id_check(self):
        seg = encode_band(np.ones((4, 4), dtype=np.int64), "luma", 2)
        with pytest.raises(DecodeError):
            decode_band(seg.payload, (4, 4), "luma", 3)

    def test_truncation_detected_with_offset(self):
        rng = np.random.default_rng(5)
        g = rng.integers(-100, 100, size=(64, 64)).astype(np.int64)
        seg = encode_band(g, "luma", 0)
        with pytest.raises(DecodeError) as exc:
            decode_band(seg.payload[: len(seg.payload) // 2], g.shape, "luma", 0)
        assert exc.value.offset is not None

    def test_wrong_block_count_detected(self):
        seg = encode_band(np.ones((4, 4), dtype=np.int64), "luma", 0)
        with pytest.raises(DecodeError):
            decode_band(seg.payload, (128, 128), "luma", 0)


class TestSignPlane:
    def test_all_zero_megapixel(self):
        seg = encode_sign_plane(np.zeros((1024, 1024), dtype=np.uint8))
        assert seg.declared_bpp <= 0.001

    def test_random_plane_near_one_bpp(self):
        rng = np.random.default_rng(6)
        bits = (rng.random((512, 512)) < 0.5).astype(np.uint8)
        seg = encode_sign_plane(bits)
        out, _ = decode_sign_plane(seg.payload, bits.shape)
        assert np.array_equal(out, bits)
        assert abs(seg.declared_bpp - 1.0) <= 0.02

    def test_sparse_plane_cheap(self):
        rng = np.random.default_rng(7)
        bits = (rng.random((1024, 1024)) < 0.0005).astype(np.uint8)
        seg = encode_sign_plane(bits)
        out, _ = decode_sign_plane(seg.payload, bits.shape)
        assert np.array_equal(out, bits)
        assert seg.declared_bpp <= 0.01

    def test_biased_plane_compresses(self):
        rng = np.random.default_rng(8)
        bits = (rng.random((256, 256)) < 0.1).astype(np.uint8)
        seg = encode_sign_plane(bits)
        out, _ = decode_sign_plane(seg.payload, bits.shape)
        assert np.array_equal(out, bits)
        h = -(0.1 * np.log2(0.1) + 0.9 * np.log2(0.9))
        assert seg.declared_bpp <= 1.15 * h

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            encode_sign_plane(np.array([[2]], dtype=np.uint8))

    def test_bad_header_rejected(self):
        seg = encode_sign_plane(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(DecodeError):
            decode_sign_plane(b"\x00" + seg.payload[1:], (4, 4))


class TestEntropyEstimate:
    def test_constant(self):
        assert entropy_estimate(np.full((10, 10), 7)) == 0.0

    def test_two_values(self):
        assert entropy_estimate(np.array([3, 9] * 100)) == pytest.approx(1.0)

    def test_uniform_256(self):
        rng = np.random.default_rng(9)
        v = rng.integers(0, 256, size=150_000)
        assert entropy_estimate(v) == pytest.approx(8.0, abs=0.05)

    def test_empty(self):
        with pytest.raises(ValueError):
            entropy_estimate(np.array([], dtype=np.int64))
