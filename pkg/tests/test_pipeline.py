import numpy as np
import pytest

from camra import cfa, pipeline, wavelet
from camra.cfa import BayerImage, ColorImage
from camra.pipeline import PipelineParams


def _img(planes):
    return ColorImage(np.asarray(planes, dtype=np.float64), "rgb")


class TestColorCorrect:
    def test_identity(self):
        x = _img(np.random.default_rng(0).random((3, 4, 4)))
        out = pipeline.color_correct(x, np.eye(3))
        assert np.array_equal(out.planes, x.planes)

    def test_scalar_matrix(self):
        x = _img([[[1.0]], [[2.0]], [[3.0]]])
        out = pipeline.color_correct(x, 2 * np.eye(3))
        assert tuple(out.planes[:, 0, 0]) == (2.0, 4.0, 6.0)

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        a = np.eye(3) + 0.2 * rng.random((3, 3))
        x = _img(rng.random((3, 8, 8)))
        back = pipeline.color_correct_inverse(pipeline.color_correct(x, a), a)
        assert np.abs(back.planes - x.planes).max() < 1e-9

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            pipeline.color_correct(_img(np.zeros((3, 2, 2))), np.ones((3, 3)))


class TestWhiteBalance:
    def test_identity(self):
        x = _img(np.random.default_rng(2).random((3, 4, 4)))
        out = pipeline.white_balance(x, (1.0, 1.0, 1.0))
        assert np.array_equal(out.planes, x.planes)

    def test_example(self):
        x = _img([[[2.0]], [[1.0]], [[1.0]]])
        out = pipeline.white_balance(x, (2.0, 1.0, 1.0))
        assert tuple(out.planes[:, 0, 0]) == (1.0, 1.0, 1.0)

    def test_round_trip(self):
        x = _img(np.random.default_rng(3).random((3, 4, 4)))
        i = (2.0, 1.0, 1.6)
        back = pipeline.white_balance_inverse(pipeline.white_balance(x, i), i)
        assert np.abs(back.planes - x.planes).max() < 1e-12

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            pipeline.white_balance(_img(np.zeros((3, 2, 2))), (1.0, 0.0, 1.0))


class TestGamma:
    def test_endpoints(self):
        assert pipeline.gamma_srgb(0.0) == 0.0
        assert pipeline.gamma_srgb(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_breakpoint_branches_agree(self):
        v = pipeline.SRGB_LINEAR_CUTOFF
        lin = pipeline.SRGB_LINEAR_SLOPE * v
        pow_branch = 1.055 * v ** (1 / 2.4) - 0.055
        assert lin == pytest.approx(0.0404499, abs=1e-6)
        assert abs(lin - pow_branch) < 1e-5
        assert pipeline.gamma_srgb(v) == pytest.approx(lin)

    def test_midpoint_value(self):
        assert pipeline.gamma_srgb(0.5) == pytest.approx(0.735356, abs=1e-5)

    def test_strictly_increasing_and_invertible(self):
        v = np.linspace(0.0, 1.0, 2001)
        g = pipeline.gamma_srgb(v)
        assert np.all(np.diff(g) > 0)
        back = pipeline.gamma_srgb_inverse(g)
        assert np.abs(back - v).max() < 1e-9

    def test_negative_inputs_clamped(self):
        out = pipeline.gamma_srgb(np.array([-0.5, 0.25]))
        assert out[0] == 0.0

    def test_signed_extension_odd_and_invertible(self):
        v = np.linspace(-2.0, 2.0, 801)
        g = pipeline.gamma_srgb_signed(v)
        assert np.allclose(g, -pipeline.gamma_srgb_signed(-v))
        assert np.all(np.diff(g) > 0)
        back = pipeline.gamma_srgb_signed_inverse(g)
        assert np.abs(back - v).max() < 1e-9


class TestQuarterRgb:
    def test_constant_gray_mosaic(self):
        # 5/3 of a constant mosaic: ll = v, details 0 -> quarter image (v,v,v).
        img = BayerImage(np.full((8, 8), 200, dtype=np.int32), bit_depth=12)
        bands = wavelet.dwt53_forward(img.samples.astype(np.int64))
        band_sum, _ = __import__("camra.decorrelate", fromlist=["x"]).sumdiff_forward(
            bands.lh, bands.hl)
        rgb = pipeline.quarter_rgb_from_bands(bands.ll, band_sum, bands.hh)
        assert np.allclose(rgb, 200.0)

    def test_zero_in_zero_out(self):
        z = np.zeros((4, 4))
        assert not pipeline.quarter_rgb_from_bands(z, z, z).any()

    def test_inverse_mapping_exact(self):
        rng = np.random.default_rng(4)
        ll = rng.random((8, 8)) * 100
        s = rng.standard_normal((8, 8)) * 10
        hh = rng.standard_normal((8, 8)) * 5
        rgb = pipeline.quarter_rgb_from_bands(ll, s, hh, lossy_scale=0.55)
        ll2, s2, hh2 = pipeline.bands_from_quarter_rgb(rgb, lossy_scale=0.55)
        assert np.abs(ll2 - ll).max() < 1e-9
        assert np.abs(s2 - s).max() < 1e-9
        assert np.abs(hh2 - hh).max() < 1e-9

    def test_zero_scale_rejected(self):
        z = np.zeros((2, 2))
        with pytest.raises(ValueError):
            pipeline.quarter_rgb_from_bands(z, z, z, lossy_scale=0.0)

    def test_matches_box_downsample_oracle(self, small_corpus):
        # Oracle: exact luma/chroma of the known source, box-downsampled 2x2.
        im = small_corpus[0]
        scale = im.digital_scale
        shifted = cfa.subtract_black_offset(im.mosaic).astype(np.float64)
        bands = wavelet.dwt97_forward(shifted)
        m = np.array([[0.5, 0.5], [0.5, -0.5]])
        s = m[0, 0] * bands.lh + m[0, 1] * bands.hl
        quarter = pipeline.quarter_rgb_from_bands(bands.ll, s, bands.hh,
                                                  lossy_scale=1.0)
        truth = im.truth.planes * scale  # digital scale, offset-free
        box = 0.25 * (truth[:, 0::2, 0::2] + truth[:, 0::2, 1::2]
                      + truth[:, 1::2, 0::2] + truth[:, 1::2, 1::2])
        err = quarter - box
        snr = 10 * np.log10(np.mean(box ** 2) / np.mean(err ** 2))
        assert snr >= 30.0


class TestMagnitudeSign:
    def test_nonnegative_image(self):
        mags, signs = pipeline.split_magnitude_sign(np.abs(
            np.random.default_rng(5).standard_normal((3, 4, 4))))
        assert not signs.any()

    def test_minus_one(self):
        mags, signs = pipeline.split_magnitude_sign(np.array([[[-1.0]]]))
        assert mags[0, 0, 0] == 1.0 and signs[0, 0, 0] == 1

    def test_round_trip(self):
        x = np.random.default_rng(6).standard_normal((3, 8, 8))
        mags, signs = pipeline.split_magnitude_sign(x)
        assert np.array_equal(pipeline.recombine_magnitude_sign(mags, signs), x)


class TestDemosaic:
    def test_constant_gray(self):
        img = BayerImage(np.full((8, 8), 100, dtype=np.int32), bit_depth=8)
        out = pipeline.demosaic_simple(img)
        assert np.allclose(out.planes, 100.0)

    def test_constant_color_away_from_border(self):
        planes = np.stack([np.full((8, 8), 40.0), np.full((8, 8), 80.0),
                           np.full((8, 8), 120.0)])
        mosaic = cfa.mosaic(ColorImage(planes, "rgb"), "RGGB", bit_depth=8)
        out = pipeline.demosaic_simple(mosaic)
        inner = out.planes[:, 1:-1, 1:-1]
        assert np.allclose(inner[0], 40.0) and np.allclose(inner[1], 80.0)
        assert np.allclose(inner[2], 120.0)

    def test_linear_ramp_recovered_exactly(self):
        # Gray ramp (chroma zero): bilinear interpolation reproduces linear
        # signals in the interior.
        ramp = np.tile(np.arange(16, dtype=np.float64) * 4, (16, 1))
        planes = np.stack([ramp, ramp, ramp])
        mosaic = cfa.mosaic(ColorImage(planes, "rgb"), "RGGB", bit_depth=8)
        out = pipeline.demosaic_simple(mosaic)
        inner = out.planes[:, 2:-2, 2:-2]
        assert np.abs(inner - planes[:, 2:-2, 2:-2]).max() < 1e-9


class TestFullChain:
    def test_identity_params_reduce_to_demosaic(self):
        rng = np.random.default_rng(8)
        img = BayerImage(rng.integers(0, 256, (8, 8)).astype(np.int32),
                         bit_depth=8, black_offset=(0, 0, 0))
        params = PipelineParams(color_matrix=np.eye(3),
                                illuminant=(1.0, 1.0, 1.0), gamma="identity")
        disp = pipeline.process_to_display(img, params, clip=False)
        direct = pipeline.demosaic_simple(img, samples=img.samples / 255.0)
        assert np.abs(disp.planes - direct.planes).max() < 1e-12

    def test_params_validation(self):
        with pytest.raises(ValueError):
            PipelineParams(color_matrix=np.ones((3, 3)))
        with pytest.raises(ValueError):
            PipelineParams(illuminant=(1.0, -1.0, 1.0))
        with pytest.raises(ValueError):
            PipelineParams(gamma="rec709")
