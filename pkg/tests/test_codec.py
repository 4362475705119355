import numpy as np
import pytest

from camra import bench, cfa, codec, container
from camra.cfa import BayerImage
from camra.pipeline import PipelineParams
from camra.quantize import QuantizationSpec

from conftest import random_mosaics

SUMDIFF = np.array([[0.5, 0.5], [0.5, -0.5]])


class TestLossless:
    def test_round_trip_mixed_phases_and_depths(self):
        for img in random_mosaics(seed=123, count=12):
            stream = codec.encode_lossless(img)
            out = codec.decode(container.parse_stream(stream.to_bytes()))
            assert np.array_equal(out.samples, img.samples)
            assert out.phase == img.phase
            assert out.bit_depth == img.bit_depth
            assert out.black_offset == img.black_offset

    def test_constant_megapixel_rate(self):
        img = BayerImage(np.full((1024, 1024), 700, dtype=np.int32),
                         bit_depth=12, black_offset=(210, 168, 190))
        stream = codec.encode_lossless(img)
        assert stream.bpp() <= 0.05
        out = codec.decode(stream)
        assert np.array_equal(out.samples, img.samples)

    def test_levels_auto_reduce_on_small_grids(self):
        rng = np.random.default_rng(9)
        img = BayerImage(rng.integers(0, 1024, (12, 20)).astype(np.int32),
                         bit_depth=10)
        stream = codec.encode_lossless(img)
        assert stream.header.levels == 1  # 6x10 bands allow one packet level
        out = codec.decode(stream)
        assert np.array_equal(out.samples, img.samples)

    def test_encode_deterministic(self):
        img = random_mosaics(seed=5, count=1)[0]
        assert (codec.encode_lossless(img).to_bytes()
                == codec.encode_lossless(img).to_bytes())


class TestLossyModes:
    @pytest.fixture(scope="class")
    def image(self, small_corpus):
        return small_corpus[0].mosaic

    def test_near_lossless_sanity(self, image):
        stream = codec.encode_lossy_a(image, QuantizationSpec.uniform(0.01),
                                      matrix=SUMDIFF)
        out = codec.decode(stream)
        assert bench.psnr(image.samples, out.samples, 4095) >= 90.0

    def test_psnr_degrades_with_step_doubling(self, image):
        last = np.inf
        for step in (1.0, 2.0, 4.0, 8.0, 16.0):
            stream = codec.encode_lossy_a(image, QuantizationSpec.uniform(step))
            out = codec.decode(stream)
            p = bench.psnr(image.samples, out.samples, 4095)
            assert p <= last + 1e-9
            last = p

    def test_lossy_b_beats_a_at_unit_step(self, image):
        a = codec.decode(codec.encode_lossy_a(image, QuantizationSpec.uniform(1.0)))
        b = codec.decode(codec.encode_lossy_b(image, QuantizationSpec.uniform(1.0)))
        pa = bench.psnr(image.samples, a.samples, 4095)
        pb = bench.psnr(image.samples, b.samples, 4095)
        assert pb >= pa

    def test_lossy_b_zero_mosaic(self):
        img = BayerImage(np.zeros((16, 16), dtype=np.int32), bit_depth=12)
        stream = codec.encode_lossy_b(img, QuantizationSpec.uniform(4.0),
                                      matrix=SUMDIFF)
        out = codec.decode(stream)
        assert not out.samples.any()

    def test_streams_decode_reproducibly(self, image):
        stream = codec.encode_lossy_b(image, QuantizationSpec.uniform(2.0))
        buf = stream.to_bytes()
        a = codec.decode(container.parse_stream(buf))
        b = codec.decode(container.parse_stream(buf))
        assert np.array_equal(a.samples, b.samples)

    def test_matrix_travels_in_16_16_fixed_point(self, image):
        stream = codec.encode_lossy_a(image, QuantizationSpec.uniform(4.0))
        m = container.parse_stream(stream.to_bytes()).header.matrix
        assert np.array_equal(m * 65536, np.round(m * 65536))

    def test_phase_handling_lossy(self):
        rng = np.random.default_rng(10)
        from scipy import ndimage
        smooth = ndimage.gaussian_filter(rng.random((32, 32)), 4) * 3000
        img = BayerImage(smooth.astype(np.int32), bit_depth=12, phase="BGGR")
        stream = codec.encode_lossy_a(img, QuantizationSpec.uniform(1.0),
                                      matrix=SUMDIFF)
        out = codec.decode(stream)
        assert out.phase == "BGGR"
        assert bench.psnr(img.samples, out.samples, 4095) > 40


class TestCamra:
    def test_identity_pipeline_matches_plain_lossy(self, small_corpus):
        image = small_corpus[1].mosaic
        ident = PipelineParams(color_matrix=np.eye(3),
                               illuminant=(1.0, 1.0, 1.0), gamma="identity")
        spec = QuantizationSpec.uniform(0.002)
        sa = codec.encode_lossy_a(image, spec, matrix=SUMDIFF)
        sc = codec.encode_camra(image, spec, ident, matrix=SUMDIFF)
        fa = codec.decode_lossy_a_float(sa)
        fc = codec.decode_camra_float(sc)
        peak = (1 << image.bit_depth) - 1
        rms = np.sqrt(np.mean((fa - fc) ** 2)) / peak
        assert rms < 1e-6

    def test_round_trip_with_real_params(self, small_corpus):
        image = small_corpus[0].mosaic
        stream = codec.encode_camra(image, QuantizationSpec.uniform(1.0),
                                    bench.EVAL_PIPELINE)
        buf = stream.to_bytes()
        out = codec.decode(container.parse_stream(buf))
        assert bench.psnr(image.samples, out.samples, 4095) > 45
        assert codec.sign_plane_bpp(stream) <= 0.01

    def test_header_carries_pipeline(self, small_corpus):
        image = small_corpus[0].mosaic
        stream = codec.encode_camra(image, QuantizationSpec.uniform(4.0),
                                    bench.EVAL_PIPELINE)
        h = container.parse_stream(stream.to_bytes()).header
        assert np.allclose(h.color_matrix, bench.EVAL_PIPELINE.color_matrix,
                           atol=1e-6)
        assert h.gamma == "srgb"
        assert h.illuminant == pytest.approx(bench.EVAL_PIPELINE.illuminant,
                                             abs=1e-6)


class TestInstrumentation:
    def test_proposed_vs_rgb_level1_counts(self, small_corpus):
        image = small_corpus[0].mosaic
        area = image.width * image.height
        n_prop = bench.count_level1_transforms(
            lambda: codec.encode_lossless(image), area)
        n_rgb = bench.count_level1_transforms(
            lambda: bench.baseline_rgb(image), area)
        assert n_prop == 1
        assert n_rgb == 3
