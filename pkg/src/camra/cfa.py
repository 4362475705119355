"""Bayer color-filter-array sampling model and luminance/chrominance algebra.

A Bayer sensor records one of R/G/B per pixel on a 2x2 tiling.  The mosaic
can equivalently be written as a full-resolution luminance image plus two
chrominance images modulated to the Nyquist corners, which is the starting
point for everything the codec does:

    y(n) = luma(n) + d_a(n) * chroma_a(n) + d_b(n) * chroma_b(n)

with per-pixel modulation masks d_a in {-2, 0, +2} and d_b in {-1, +1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHASES = ("RGGB", "GRBG", "GBRG", "BGGR")

# 2x2 channel layout per phase, "R"/"G"/"B" indexed by (row % 2, col % 2).
_PHASE_LAYOUT = {
    "RGGB": (("R", "G"), ("G", "B")),
    "GRBG": (("G", "R"), ("B", "G")),
    "GBRG": (("G", "B"), ("R", "G")),
    "BGGR": (("B", "G"), ("G", "R")),
}

# Rows of the luma/chroma synthesis matrix, one per channel: the weights of
# (luma, chroma_a, chroma_b) that reproduce that channel's sample.
_CHANNEL_WEIGHTS = {"R": (1, 2, 1), "G": (1, 0, -1), "B": (1, -2, 1)}

LUMA_CHROMA_FROM_RGB = np.array(
    [[0.25, 0.5, 0.25], [0.25, 0.0, -0.25], [0.25, -0.5, 0.25]]
)
RGB_FROM_LUMA_CHROMA = np.array([[1, 2, 1], [1, 0, -1], [1, -2, 1]], dtype=float)


class DimensionError(ValueError):
    """Image dimensions violate the 2x2 Bayer tiling or a transform precondition."""


@dataclass
class ColorImage:
    """Three co-sited real planes with a colorspace tag.

    planes has shape (3, height, width); colorspace is "rgb" or "lumachroma"
    (the reversible luma / chroma-a / chroma-b basis used throughout).
    """

    planes: np.ndarray
    colorspace: str = "rgb"

    def __post_init__(self):
        self.planes = np.asarray(self.planes, dtype=np.float64)
        if self.planes.ndim != 3 or self.planes.shape[0] != 3:
            raise ValueError(f"expected (3, h, w) planes, got {self.planes.shape}")
        if self.colorspace not in ("rgb", "lumachroma"):
            raise ValueError(f"unknown colorspace {self.colorspace!r}")

    @property
    def height(self):
        return self.planes.shape[1]

    @property
    def width(self):
        return self.planes.shape[2]


@dataclass
class BayerImage:
    """Integer CFA mosaic with phase, bit depth and per-channel black offsets."""

    samples: np.ndarray
    bit_depth: int
    phase: str = "RGGB"
    black_offset: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise ValueError("mosaic must be a 2-D grid")
        h, w = self.samples.shape
        if h % 2 or w % 2:
            raise DimensionError(f"mosaic sides must be even, got {h}x{w}")
        if not 8 <= self.bit_depth <= 16:
            raise ValueError(f"bit_depth must be in [8, 16], got {self.bit_depth}")
        if self.phase not in PHASES:
            raise ValueError(f"unknown CFA phase {self.phase!r}")
        self.black_offset = tuple(int(k) for k in self.black_offset)
        if len(self.black_offset) != 3:
            raise ValueError("black_offset must have three entries (r, g, b)")

    @property
    def height(self):
        return self.samples.shape[0]

    @property
    def width(self):
        return self.samples.shape[1]

    def validate_range(self):
        lo, hi = self.samples.min(), self.samples.max()
        if lo < 0 or hi > (1 << self.bit_depth) - 1:
            raise ValueError(
                f"samples [{lo}, {hi}] exceed {self.bit_depth}-bit range"
            )


def channel_map(height, width, phase):
    """Per-pixel channel index grid: 0=R, 1=G, 2=B."""
    layout = _PHASE_LAYOUT[phase]
    idx = {"R": 0, "G": 1, "B": 2}
    quad = np.array([[idx[layout[0][0]], idx[layout[0][1]]],
                     [idx[layout[1][0]], idx[layout[1][1]]]], dtype=np.int8)
    return np.tile(quad, (height // 2, width // 2))


def cfa_mask(height, width, phase="RGGB"):
    """Modulation masks (d_a, d_b) of the luma/chroma mosaic identity.

    d_a is +2 on red sites, -2 on blue sites, 0 on green; d_b is +1 on
    red/blue sites and -1 on green.  For RGGB this equals the closed forms
    d_a(n0,n1) = (-1)^n0 + (-1)^n1 and d_b(n0,n1) = (-1)^(n0+n1).
    """
    chan = channel_map(height, width, phase)
    wa = np.array([w[1] for w in (_CHANNEL_WEIGHTS["R"], _CHANNEL_WEIGHTS["G"], _CHANNEL_WEIGHTS["B"])])
    wb = np.array([w[2] for w in (_CHANNEL_WEIGHTS["R"], _CHANNEL_WEIGHTS["G"], _CHANNEL_WEIGHTS["B"])])
    return wa[chan].astype(np.int32), wb[chan].astype(np.int32)


def rgb_to_luma_chroma(image: ColorImage) -> ColorImage:
    """(r, g, b) -> (luma, chroma_a, chroma_b) = ((r+2g+b)/4, (r-b)/4, (r-2g+b)/4)."""
    if image.colorspace != "rgb":
        raise ValueError("expected an rgb image")
    out = np.einsum("ij,jhw->ihw", LUMA_CHROMA_FROM_RGB, image.planes)
    return ColorImage(out, "lumachroma")


def luma_chroma_to_rgb(image: ColorImage) -> ColorImage:
    """Exact inverse of rgb_to_luma_chroma."""
    if image.colorspace != "lumachroma":
        raise ValueError("expected a lumachroma image")
    out = np.einsum("ij,jhw->ihw", RGB_FROM_LUMA_CHROMA, image.planes)
    return ColorImage(out, "rgb")


def mosaic(image: ColorImage, phase="RGGB", bit_depth=16,
           black_offset=(0, 0, 0)) -> BayerImage:
    """Sample a color image through the CFA: each pixel keeps one channel."""
    if image.colorspace != "rgb":
        raise ValueError("mosaic expects an rgb image")
    h, w = image.height, image.width
    if h % 2 or w % 2:
        raise DimensionError(f"mosaic requires even dimensions, got {h}x{w}")
    chan = channel_map(h, w, phase)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    samples = image.planes[chan, rows, cols]
    if np.issubdtype(image.planes.dtype, np.integer):
        samples = samples.astype(np.int32)
    return BayerImage(samples, bit_depth=bit_depth, phase=phase,
                      black_offset=black_offset)


def subtract_black_offset(image: BayerImage) -> np.ndarray:
    """Shift each sample by its channel's black offset; result is signed."""
    chan = channel_map(image.height, image.width, image.phase)
    k = np.asarray(image.black_offset, dtype=np.int64)
    return image.samples.astype(np.int64) - k[chan]


def add_black_offset(samples, phase, black_offset):
    """Exact inverse of subtract_black_offset."""
    h, w = samples.shape
    chan = channel_map(h, w, phase)
    k = np.asarray(black_offset, dtype=np.int64)
    return np.asarray(samples, dtype=np.int64) + k[chan]


def demux(image: BayerImage):
    """Lossless polyphase split into half-resolution (R, G1, G2, B) planes.

    G1 is the green plane sharing rows with red, G2 the one sharing rows
    with blue; re-interleaving restores the mosaic exactly.
    """
    layout = _PHASE_LAYOUT[image.phase]
    y = image.samples
    planes = {}
    greens = []
    for r in (0, 1):
        for c in (0, 1):
            plane = y[r::2, c::2]
            name = layout[r][c]
            if name == "G":
                greens.append(plane)
            else:
                planes[name] = plane
    planes["G1"], planes["G2"] = greens
    return planes["R"], planes["G1"], planes["G2"], planes["B"]


def remux(r, g1, g2, b, phase="RGGB", bit_depth=16, black_offset=(0, 0, 0)) -> BayerImage:
    """Re-interleave the four demuxed planes back into a mosaic."""
    layout = _PHASE_LAYOUT[phase]
    h2, w2 = np.asarray(r).shape
    out = np.zeros((h2 * 2, w2 * 2), dtype=np.asarray(r).dtype)
    greens = [g1, g2]
    gi = 0
    for rr in (0, 1):
        for cc in (0, 1):
            name = layout[rr][cc]
            if name == "G":
                plane = greens[gi]
                gi += 1
            elif name == "R":
                plane = r
            else:
                plane = b
            out[rr::2, cc::2] = plane
    return BayerImage(out, bit_depth=bit_depth, phase=phase, black_offset=black_offset)


def normalization_flips(phase):
    """(flip_rows, flip_cols) that turn the given phase into RGGB."""
    return phase in ("GBRG", "BGGR"), phase in ("GRBG", "BGGR")


def normalize_to_rggb(image: BayerImage) -> BayerImage:
    """Reorient any Bayer phase to RGGB by lossless row/column flips."""
    fr, fc = normalization_flips(image.phase)
    y = image.samples
    if fr:
        y = y[::-1, :]
    if fc:
        y = y[:, ::-1]
    return BayerImage(np.ascontiguousarray(y), bit_depth=image.bit_depth,
                      phase="RGGB", black_offset=image.black_offset)


def denormalize_from_rggb(samples, phase):
    """Undo normalize_to_rggb on a raw sample grid."""
    fr, fc = normalization_flips(phase)
    y = samples
    if fc:
        y = y[:, ::-1]
    if fr:
        y = y[::-1, :]
    return np.ascontiguousarray(y)
