"""Benchmark harness: synthetic corpus, baseline schemes, metrics, reports.

The corpus generator synthesizes natural-looking scenes: smooth
illumination gradients and blobs, sharp region edges shared by all three
channels, and low-frequency chroma fields.  Channels share their high
spatial frequencies, which is exactly the premise that makes the detail
subbands of a mosaic correlate.

Baselines (all lossless, all using the in-repo coder so comparisons are
self-consistent):

    cfa-gray  (N+1)-level dyadic 5/3 on the mosaic treated as one gray image
    demux     four polyphase planes, N-level dyadic 5/3 each
    mallat    one 5/3 level, then N-level packets on all four subbands
    rgb       bilinear demosaic, luma/chroma planes, N-level dyadic each
              (not quality-comparable: a different demosaicker would give a
              different image; reported for rate/complexity context only)
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import cfa, codec, entropy, pipeline, wavelet
from .cfa import BayerImage, ColorImage
from .container import MODE_NAMES
from .decorrelate import (MatrixFitConfig, fit_matrix, matrix_forward,
                          measure_decorrelation, quantize_matrix)
from .pipeline import PipelineParams
from .quantize import QuantizationSpec

DEFAULT_SEED = 42
DEFAULT_COUNT = 32
DEFAULT_SIZE = 512
DEFAULT_STEPS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
CORPUS_BIT_DEPTH = 12
CORPUS_BLACK_OFFSET = (210, 168, 190)

# Calibrated-style evaluation pipeline for the display-domain comparisons:
# diagonally dominant color matrix with negative off-diagonals, warm-ish
# illuminant, sRGB gamma.
EVAL_PIPELINE = PipelineParams(
    color_matrix=np.array([[1.66, -0.52, -0.14],
                           [-0.18, 1.46, -0.28],
                           [0.04, -0.56, 1.52]]),
    illuminant=(2.0, 1.0, 1.6),
    gamma="srgb",
)

CSV_FIELDS = ["image_id", "scheme", "mode", "step", "bpp", "psnr_cfa_db",
              "psnr_display_db", "pearson_before", "pearson_after",
              "entropy_before", "entropy_after"]


@dataclass
class BenchImage:
    image_id: int
    truth: ColorImage  # rgb in [0, 1]
    mosaic: BayerImage
    digital_scale: int = 1  # mosaic = round(truth * digital_scale) + offsets


@dataclass
class BenchRow:
    image_id: object
    scheme: str
    mode: str = ""
    step: float | None = None
    bpp: float | None = None
    psnr_cfa_db: float | None = None
    psnr_display_db: float | None = None
    pearson_before: float | None = None
    pearson_after: float | None = None
    entropy_before: float | None = None
    entropy_after: float | None = None

    def as_record(self):
        return {k: getattr(self, k) for k in CSV_FIELDS}


# ---------------------------------------------------------------------------
# Corpus generation.


def _smooth_field(rng, size, sigma, amplitude):
    f = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma)
    peak = np.abs(f).max()
    if peak > 0:
        f *= amplitude / peak
    return f


def _chroma_field(rng, size, amplitude):
    """Low-frequency chroma: nested blur scales, energy mostly far below
    quarter Nyquist but with enough mid-band content to cost real bits."""
    f = (_smooth_field(rng, size, size / 16, 0.50)
         + _smooth_field(rng, size, size / 48, 0.45)
         + _smooth_field(rng, size, max(size / 170, 2.0), 0.16))
    return amplitude * f


def _scene(rng, size):
    """One synthetic scene as rgb planes in [0, 1]."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    theta = rng.uniform(0, 2 * np.pi)
    luma = 0.45 + 0.18 * ((xx - 0.5) * np.cos(theta) + (yy - 0.5) * np.sin(theta))
    luma = luma + _smooth_field(rng, size, size / 16, 0.14)

    # Sharp region boundaries ("objects"): a thresholded smooth field gives
    # plateaus with distinct luminance and a mild color tint each.
    regions = _smooth_field(rng, size, size / 10, 1.0)
    n_lev = int(rng.integers(3, 6))
    idx = np.digitize(regions, np.linspace(-0.6, 0.6, n_lev - 1))
    luma = luma + rng.uniform(-0.12, 0.12, size=n_lev)[idx]
    tint_a = rng.uniform(-0.03, 0.03, size=n_lev)[idx]
    tint_b = rng.uniform(-0.025, 0.025, size=n_lev)[idx]

    # Structured fine texture (blurred noise, not white): keeps the channels
    # co-varying at high frequencies the way demosaicable scenes do.
    luma = luma + _smooth_field(rng, size, 1.2, 0.02)
    luma = ndimage.gaussian_filter(luma, 0.7)

    chroma_a = _chroma_field(rng, size, 0.10) + tint_a + rng.uniform(-0.02, 0.02)
    chroma_b = _chroma_field(rng, size, 0.08) + tint_b + rng.uniform(-0.02, 0.02)
    chroma_a = ndimage.gaussian_filter(chroma_a, 0.7)
    chroma_b = ndimage.gaussian_filter(chroma_b, 0.7)

    lab = np.stack([luma, chroma_a, chroma_b])
    rgb = np.einsum("ij,jhw->ihw", cfa.RGB_FROM_LUMA_CHROMA, lab)
    if rgb.max() > 0.98 or rgb.min() < 0.02:
        # Shrink chroma until the scene fits the gamut.
        for _ in range(20):
            chroma_a *= 0.85
            chroma_b *= 0.85
            lab = np.stack([luma, chroma_a, chroma_b])
            rgb = np.einsum("ij,jhw->ihw", cfa.RGB_FROM_LUMA_CHROMA, lab)
            if rgb.max() <= 0.98 and rgb.min() >= 0.02:
                break
    return np.clip(rgb, 0.0, 1.0)


def generate_corpus(seed=DEFAULT_SEED, count=DEFAULT_COUNT, size=DEFAULT_SIZE):
    """Seeded synthetic corpus: (ground truth rgb, exactly mosaicked raw)."""
    if size % 2:
        raise ValueError("corpus image size must be even")
    images = []
    k = CORPUS_BLACK_OFFSET
    scale = (1 << CORPUS_BIT_DEPTH) - 1 - max(k) - 8
    for idx in range(count):
        rng = np.random.default_rng([seed, idx])
        rgb = _scene(rng, size)
        digital = np.round(rgb * scale).astype(np.int32)
        chan = cfa.channel_map(size, size, "RGGB")
        koff = np.array(k, dtype=np.int32)[chan]
        rows = np.arange(size)[:, None]
        cols = np.arange(size)[None, :]
        samples = digital[chan, rows, cols] + koff
        mosaic = BayerImage(samples.astype(np.int32), bit_depth=CORPUS_BIT_DEPTH,
                            phase="RGGB", black_offset=k)
        images.append(BenchImage(idx, ColorImage(rgb, "rgb"), mosaic, scale))
    return images


# ---------------------------------------------------------------------------
# Metrics.


def psnr(a, b, peak):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def display_psnr(reference: BayerImage, reconstructed: BayerImage,
                 params: PipelineParams):
    """PSNR between pipeline renders of the two mosaics (peak 1.0)."""
    ref = pipeline.process_to_display(reference, params).planes
    test = pipeline.process_to_display(reconstructed, params).planes
    return psnr(ref, test, 1.0)


def decorrelation_stats(image: BayerImage, kernel="53", sparsity_weight=0.1):
    """Level-1 LH/HL statistics before and after decorrelation."""
    shifted = cfa.subtract_black_offset(cfa.normalize_to_rggb(image))
    if kernel == "53":
        bands = wavelet.dwt53_forward(shifted)
        return measure_decorrelation(bands.lh, bands.hl)
    bands = wavelet.dwt97_forward(shifted.astype(np.float64))
    res = fit_matrix(*_fit_samples(bands),
                     MatrixFitConfig(sparsity_weight=sparsity_weight))
    return measure_decorrelation(bands.lh, bands.hl, quantize_matrix(res.matrix))


def _fit_samples(bands):
    a = bands.lh.ravel()
    b = bands.hl.ravel()
    stride = max(1, a.size // codec.MAX_FIT_SAMPLES)
    return a[::stride], b[::stride]


# ---------------------------------------------------------------------------
# Lossless baselines.  Tiny container: magic u32 "CBEN", scheme u8, width
# u32, height u32, levels u8, then entropy segments.

_BASE_MAGIC = b"CBEN"
_SCHEME_IDS = {"cfa-gray": 0, "demux": 1, "mallat": 2, "rgb": 3}


def _baseline_wrap(scheme, width, height, levels, segments):
    head = _BASE_MAGIC + struct.pack("<BIIB", _SCHEME_IDS[scheme], width,
                                     height, levels)
    return head + b"".join(s.payload for s in segments)


def _baseline_unwrap(buf, scheme):
    if buf[:4] != _BASE_MAGIC:
        raise ValueError("not a baseline stream")
    sid, width, height, levels = struct.unpack_from("<BIIB", buf, 4)
    if sid != _SCHEME_IDS[scheme]:
        raise ValueError(f"baseline stream is not {scheme}")
    return width, height, levels, 14


def baseline_cfa_gray(image: BayerImage, levels=codec.DEFAULT_LEVELS + 1):
    """(N+1)-level dyadic 5/3 on the mosaic as a gray image."""
    n = min(levels, wavelet.max_levels(image.samples.shape))
    tree = wavelet.packet_decompose(image.samples.astype(np.int64), n, "53")
    seg = entropy.encode_band(tree.data, "luma", 0)
    return _baseline_wrap("cfa-gray", image.width, image.height, n, [seg])


def baseline_cfa_gray_decode(buf):
    width, height, n, off = _baseline_unwrap(buf, "cfa-gray")
    data, _ = entropy.decode_band(buf[off:], (height, width), "luma", 0)
    return wavelet.packet_reconstruct(wavelet.PacketTree(data, n, "53"))


def baseline_demux(image: BayerImage, levels=codec.DEFAULT_LEVELS):
    """Polyphase split, N-level dyadic 5/3 per half-resolution plane."""
    planes = cfa.demux(image)
    n = min(levels, wavelet.max_levels(planes[0].shape))
    segments = []
    for i, (plane, cls) in enumerate(zip(planes, ("chroma", "luma", "luma", "chroma"))):
        tree = wavelet.packet_decompose(plane.astype(np.int64), n, "53")
        segments.append(entropy.encode_band(tree.data, cls, i))
    return _baseline_wrap("demux", image.width, image.height, n, segments)


def baseline_demux_decode(buf, phase="RGGB"):
    width, height, n, off = _baseline_unwrap(buf, "demux")
    planes = []
    for i, cls in enumerate(("chroma", "luma", "luma", "chroma")):
        data, used = entropy.decode_band(buf[off:], (height // 2, width // 2), cls, i)
        off += used
        planes.append(wavelet.packet_reconstruct(wavelet.PacketTree(data, n, "53")))
    img = cfa.remux(*planes, phase=phase, bit_depth=16)
    return img.samples


def baseline_mallat(image: BayerImage, levels=codec.DEFAULT_LEVELS):
    """One 5/3 level, then N-level packets on all four subbands."""
    bands = wavelet.dwt53_forward(image.samples.astype(np.int64))
    n = min(levels, wavelet.max_levels(bands.ll.shape))
    segments = []
    for i, (band, cls) in enumerate(((bands.ll, "luma"), (bands.lh, "chroma"),
                                     (bands.hl, "chroma"), (bands.hh, "chroma"))):
        tree = wavelet.packet_decompose(band, n, "53")
        segments.append(entropy.encode_band(tree.data, cls, i))
    return _baseline_wrap("mallat", image.width, image.height, n, segments)


def baseline_mallat_decode(buf):
    width, height, n, off = _baseline_unwrap(buf, "mallat")
    bands = []
    for i, cls in enumerate(("luma", "chroma", "chroma", "chroma")):
        data, used = entropy.decode_band(buf[off:], (height // 2, width // 2), cls, i)
        off += used
        bands.append(wavelet.packet_reconstruct(wavelet.PacketTree(data, n, "53")))
    return wavelet.dwt53_inverse(wavelet.SubbandSet(1, *bands))


def baseline_rgb(image: BayerImage, levels=codec.DEFAULT_LEVELS):
    """Demosaic, luma/chroma planes scaled to integers, N-level dyadic each.

    Rate/complexity context only; the demosaicked image is not the camera's.
    """
    rgb = pipeline.demosaic_simple(image)
    lab = cfa.rgb_to_luma_chroma(rgb)
    n = min(levels, wavelet.max_levels(image.samples.shape))
    segments = []
    for i, (plane, cls) in enumerate(zip(lab.planes, ("luma", "chroma", "chroma"))):
        grid = np.round(plane * 4).astype(np.int64)  # luma/chroma quarter steps
        tree = wavelet.packet_decompose(grid, n, "53")
        segments.append(entropy.encode_band(tree.data, cls, i))
    return _baseline_wrap("rgb", image.width, image.height, n, segments)


def lossless_bpp_comparison(image: BayerImage):
    """Proposed and baseline lossless rates for one mosaic, in bpp."""
    npix = image.width * image.height
    out = {}
    out["proposed"] = codec.encode_lossless(image).bpp()
    out["mallat"] = 8.0 * len(baseline_mallat(image)) / npix
    out["demux"] = 8.0 * len(baseline_demux(image)) / npix
    out["cfa-gray"] = 8.0 * len(baseline_cfa_gray(image)) / npix
    out["rgb"] = 8.0 * len(baseline_rgb(image)) / npix
    return out


# ---------------------------------------------------------------------------
# Rate-distortion sweeps.


_LOSSY_ENCODERS = {"lossy-a": codec.encode_lossy_a, "lossy-b": codec.encode_lossy_b}


def rd_sweep(image: BayerImage, mode, steps=DEFAULT_STEPS,
             params: PipelineParams | None = None, matrix=None,
             image_id="") -> list:
    """One (bpp, PSNR) row per quantizer step, ascending steps required."""
    if list(steps) != sorted(steps):
        raise ValueError("steps must be sorted ascending")
    peak = (1 << image.bit_depth) - 1
    rows = []
    for step in steps:
        spec = QuantizationSpec.uniform(step)
        if mode == "camra":
            if params is None:
                raise ValueError("camra sweep needs pipeline parameters")
            stream = codec.encode_camra(image, spec, params, matrix=matrix)
        else:
            stream = _LOSSY_ENCODERS[mode](image, spec, matrix=matrix)
        recon = codec.decode(stream)
        row = BenchRow(image_id=image_id, scheme=mode, mode=mode, step=step,
                       bpp=stream.bpp(),
                       psnr_cfa_db=psnr(image.samples, recon.samples, peak))
        if params is not None:
            row.psnr_display_db = display_psnr(image, recon, params)
        rows.append(row)
    return rows


def average_curve(rows_by_image):
    """Average (bpp, psnr_cfa, psnr_display) across images, per step."""
    by_step = {}
    for rows in rows_by_image:
        for r in rows:
            by_step.setdefault(r.step, []).append(r)
    out = []
    for step in sorted(by_step):
        rs = by_step[step]
        out.append({
            "step": step,
            "bpp": float(np.mean([r.bpp for r in rs])),
            "psnr_cfa_db": float(np.mean([r.psnr_cfa_db for r in rs])),
            "psnr_display_db": (float(np.mean([r.psnr_display_db for r in rs]))
                                if rs[0].psnr_display_db is not None else None),
        })
    return out


def interp_psnr(curve, bpp, key="psnr_cfa_db"):
    """Linear interpolation of a curve's PSNR at a given bpp."""
    pts = sorted((c["bpp"], c[key]) for c in curve)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return float(np.interp(bpp, xs, ys))


def write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for r in rows:
            rec = r.as_record() if isinstance(r, BenchRow) else r
            writer.writerow({k: ("" if rec.get(k) is None else rec.get(k))
                             for k in CSV_FIELDS})


# ---------------------------------------------------------------------------
# Transform-count instrumentation.


def count_level1_transforms(fn, full_area):
    """Run fn() with transform counting on; returns full-image level-1 count."""
    wavelet.counter.enabled = True
    wavelet.counter.reset()
    try:
        fn()
        return wavelet.counter.count_at(full_area)
    finally:
        wavelet.counter.enabled = False
        wavelet.counter.reset()
