"""Camera processing chain and the quarter-resolution display-domain mapping.

The forward chain mirrors what a camera does to raw data: black offset,
demosaicking, color correction (3x3 matrix), white balance (per-channel
division by the illuminant), and sRGB gamma.  The codec's pipeline-aware
mode runs color correction / white balance / gamma on a quarter-resolution
RGB image assembled directly from the level-1 subbands, so every step here
also has an exact inverse.

Gamma uses the sRGB compander.  To keep the coding chain invertible it is
extended as an odd function (sign-preserving) and is monotone on all of R;
the display render path clips to [0, 1] separately.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import cfa
from .cfa import BayerImage, ColorImage

log = logging.getLogger(__name__)

SRGB_LINEAR_SLOPE = 12.92
SRGB_LINEAR_CUTOFF = 0.0031308
SRGB_SCALE = 1.055
SRGB_EXPONENT = 1.0 / 2.4
SRGB_OFFSET = 0.055
_SRGB_KNEE = SRGB_LINEAR_SLOPE * SRGB_LINEAR_CUTOFF  # cutoff in gamma domain

# Per-branch gains of the implemented filter bank: with lowpass DC gain 1 and
# highpass Nyquist gain 2 (odd-phase subsampling), the detail bands of a
# mosaic carry -2x the lowpass chroma-a signal and the HH band +4x chroma-b.
CHROMA_A_GAIN = -2.0
CHROMA_B_GAIN = 4.0


@dataclass
class PipelineParams:
    """Color matrix, illuminant and gamma selector for the processing chain."""

    color_matrix: np.ndarray = field(default_factory=lambda: np.eye(3))
    illuminant: tuple[float, float, float] = (1.0, 1.0, 1.0)
    gamma: str = "srgb"

    def __post_init__(self):
        self.color_matrix = np.asarray(self.color_matrix, dtype=np.float64)
        if self.color_matrix.shape != (3, 3):
            raise ValueError("color matrix must be 3x3")
        if abs(np.linalg.det(self.color_matrix)) < 1e-12:
            raise ValueError("color matrix is singular")
        self.illuminant = tuple(float(v) for v in self.illuminant)
        if len(self.illuminant) != 3 or any(v <= 0 for v in self.illuminant):
            raise ValueError("illuminant components must be positive")
        if self.gamma not in ("srgb", "identity"):
            raise ValueError(f"unknown gamma {self.gamma!r}")

    def is_identity(self):
        return (np.allclose(self.color_matrix, np.eye(3))
                and self.illuminant == (1.0, 1.0, 1.0)
                and self.gamma == "identity")


def color_correct(image: ColorImage, matrix) -> ColorImage:
    m = np.asarray(matrix, dtype=np.float64)
    if abs(np.linalg.det(m)) < 1e-12:
        raise ValueError("color matrix is singular")
    return ColorImage(np.einsum("ij,jhw->ihw", m, image.planes), image.colorspace)


def color_correct_inverse(image: ColorImage, matrix) -> ColorImage:
    return color_correct(image, np.linalg.inv(np.asarray(matrix, dtype=np.float64)))


def white_balance(image: ColorImage, illuminant) -> ColorImage:
    i = np.asarray(illuminant, dtype=np.float64)
    if np.any(i <= 0):
        raise ValueError("illuminant components must be positive")
    return ColorImage(image.planes / i[:, None, None], image.colorspace)


def white_balance_inverse(image: ColorImage, illuminant) -> ColorImage:
    i = np.asarray(illuminant, dtype=np.float64)
    if np.any(i <= 0):
        raise ValueError("illuminant components must be positive")
    return ColorImage(image.planes * i[:, None, None], image.colorspace)


def gamma_srgb(v):
    """sRGB compander; inputs below 0 are clamped to 0 (and logged)."""
    x = np.asarray(v, dtype=np.float64)
    if np.any(x < 0):
        log.warning("gamma_srgb clamped %d negative values", int((x < 0).sum()))
        x = np.clip(x, 0.0, None)
    return np.where(x <= SRGB_LINEAR_CUTOFF,
                    SRGB_LINEAR_SLOPE * x,
                    SRGB_SCALE * np.power(x, SRGB_EXPONENT) - SRGB_OFFSET)


def gamma_srgb_inverse(v):
    x = np.asarray(v, dtype=np.float64)
    if np.any(x < 0):
        log.warning("gamma_srgb_inverse clamped %d negative values", int((x < 0).sum()))
        x = np.clip(x, 0.0, None)
    return np.where(x <= _SRGB_KNEE,
                    x / SRGB_LINEAR_SLOPE,
                    np.power((x + SRGB_OFFSET) / SRGB_SCALE, 1.0 / SRGB_EXPONENT))


def gamma_srgb_signed(v):
    """Odd extension of the sRGB curve: sign(v) * gamma(|v|).

    The coding chain uses this so stray negative values survive the
    compander invertibly instead of being clamped away.
    """
    x = np.asarray(v, dtype=np.float64)
    a = np.abs(x)
    out = np.where(a <= SRGB_LINEAR_CUTOFF,
                   SRGB_LINEAR_SLOPE * a,
                   SRGB_SCALE * np.power(a, SRGB_EXPONENT) - SRGB_OFFSET)
    return np.sign(x) * out


def gamma_srgb_signed_inverse(v):
    x = np.asarray(v, dtype=np.float64)
    a = np.abs(x)
    out = np.where(a <= _SRGB_KNEE,
                   a / SRGB_LINEAR_SLOPE,
                   np.power((a + SRGB_OFFSET) / SRGB_SCALE, 1.0 / SRGB_EXPONENT))
    return np.sign(x) * out


def apply_gamma(image: ColorImage, gamma, inverse=False) -> ColorImage:
    if gamma == "identity":
        return image
    f = gamma_srgb_signed_inverse if inverse else gamma_srgb_signed
    return ColorImage(f(image.planes), image.colorspace)


def split_magnitude_sign(planes):
    """Exact decomposition into magnitudes and sign bits (1 where negative)."""
    p = np.asarray(planes, dtype=np.float64)
    return np.abs(p), (p < 0).astype(np.uint8)


def recombine_magnitude_sign(magnitudes, signs):
    m = np.asarray(magnitudes, dtype=np.float64)
    return np.where(signs.astype(bool), -m, m)


def quarter_rgb_from_bands(ll, band_sum, hh, lossy_scale=None) -> np.ndarray:
    """Quarter-resolution RGB image straight from the decorrelated bands.

    Treats (ll, sum, hh) as quarter-resolution (luma, chroma_a, chroma_b)
    after undoing the filter-bank gains.  lossy_scale is the sum-row gain of
    the decorrelation matrix (m00 + m01); it must be given when the bands
    came from a matrix decorrelation and omitted for the integer path.
    """
    ll = np.asarray(ll, dtype=np.float64)
    s = np.asarray(band_sum, dtype=np.float64)
    hh = np.asarray(hh, dtype=np.float64)
    if lossy_scale is not None:
        if lossy_scale == 0:
            raise ValueError("lossy_scale must be nonzero")
        s = s / lossy_scale
    chroma_a = s / CHROMA_A_GAIN
    chroma_b = hh / CHROMA_B_GAIN
    stack = np.stack([ll, chroma_a, chroma_b])
    return np.einsum("ij,jhw->ihw", cfa.RGB_FROM_LUMA_CHROMA, stack)


def bands_from_quarter_rgb(rgb, lossy_scale=None):
    """Inverse of quarter_rgb_from_bands: returns (ll, band_sum, hh)."""
    lab = np.einsum("ij,jhw->ihw", cfa.LUMA_CHROMA_FROM_RGB,
                    np.asarray(rgb, dtype=np.float64))
    ll = lab[0]
    s = lab[1] * CHROMA_A_GAIN
    hh = lab[2] * CHROMA_B_GAIN
    if lossy_scale is not None:
        if lossy_scale == 0:
            raise ValueError("lossy_scale must be nonzero")
        s = s * lossy_scale
    return ll, s, hh


_KERNEL_CROSS = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]])
_KERNEL_BOX = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])


def demosaic_simple(image: BayerImage, samples=None) -> ColorImage:
    """Bilinear demosaicking (deterministic stand-in for fancier methods).

    Each channel is interpolated by normalized convolution of its sampled
    lattice; mirror boundaries.  `samples` overrides the mosaic grid (e.g.
    offset-subtracted or normalized values).
    """
    y = np.asarray(image.samples if samples is None else samples, dtype=np.float64)
    h, w = y.shape
    chan = cfa.channel_map(h, w, image.phase)
    planes = np.empty((3, h, w))
    for c, kern in ((0, _KERNEL_BOX), (1, _KERNEL_CROSS), (2, _KERNEL_BOX)):
        mask = (chan == c).astype(np.float64)
        vals = ndimage.convolve(y * mask, kern, mode="mirror")
        norm = ndimage.convolve(mask, kern, mode="mirror")
        planes[c] = vals / norm
    return ColorImage(planes, "rgb")


def process_to_display(image: BayerImage, params: PipelineParams,
                       clip=True) -> ColorImage:
    """Full forward chain: offset, normalize, demosaic, CC, WB, gamma.

    Returns the display-domain rgb image in [0, 1] when clip is set; this
    is the reference used for display-domain quality metrics.
    """
    shifted = cfa.subtract_black_offset(image)
    scale = (1 << image.bit_depth) - 1
    rgb = demosaic_simple(image, samples=shifted / scale)
    rgb = color_correct(rgb, params.color_matrix)
    rgb = white_balance(rgb, params.illuminant)
    rgb = apply_gamma(rgb, params.gamma)
    out = rgb.planes
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return ColorImage(out, "rgb")
