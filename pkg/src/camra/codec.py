"""The four compression modes, assembled end to end.

All modes share the same front end: normalize the CFA phase to RGGB by
recorded flips, subtract black offsets, take one 2-D wavelet level, and
decorrelate the LH/HL detail pair.  They differ afterwards:

    lossless  5/3 integer level 1, sum/diff pair, 5/3 packets, code.
    lossy-a   9/7 level 1, matrix pair, 9/7 packets, quantize, code.
    lossy-b   like lossy-a but quantizes right after level 1 and packs the
              quantized integers with reversible 5/3 packets (no further
              round-off), which wins at high rates.
    camra     like lossy-a for the difference branch; the remaining three
              bands become a quarter-resolution RGB image that is pushed
              through the camera pipeline (CC, WB, gamma) before packets
              and quantization, so quantization noise is spent where the
              displayed image needs it least.  Negative quarter-RGB values
              ride in a separately coded sign plane.

Decoding runs each chain backwards; mode 0 is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cfa, entropy, pipeline, wavelet
from .cfa import BayerImage
from .container import (MODE_CAMRA, MODE_LOSSLESS, MODE_LOSSY_A, MODE_LOSSY_B,
                        CompressedStream, StreamHeader)
from .decorrelate import (MatrixFitConfig, fit_matrix, matrix_forward,
                          matrix_inverse, quantize_matrix, sumdiff_forward,
                          sumdiff_inverse)
from .entropy import (BAND_DIFF, BAND_HH, BAND_LL, BAND_SIGN, BAND_SUM,
                      decode_band, decode_sign_plane, encode_band,
                      encode_sign_plane)
from .pipeline import PipelineParams
from .quantize import QuantizationSpec, dequantize, quantize
from .wavelet import PacketTree, packet_decompose, packet_reconstruct

DEFAULT_LEVELS = 5
DEFAULT_DIFF_LEVELS = 2
MAX_FIT_SAMPLES = 100_000

_BRANCH_CLASS = {BAND_LL: "luma", BAND_SUM: "chroma",
                 BAND_DIFF: "luma", BAND_HH: "chroma"}


class EncodeError(ValueError):
    pass


def effective_levels(width, height, levels):
    """Reduce the packet depth until every applied level has even sides."""
    return min(levels, wavelet.max_levels((height // 2, width // 2)))


def _prepare(image: BayerImage):
    image.validate_range()
    norm = cfa.normalize_to_rggb(image)
    shifted = cfa.subtract_black_offset(norm)
    return shifted


def _finish(recon, header: StreamHeader) -> BayerImage:
    y = cfa.add_black_offset(recon, "RGGB", header.black_offset)
    y = np.clip(y, 0, (1 << header.bit_depth) - 1).astype(np.int32)
    y = cfa.denormalize_from_rggb(y, header.phase)
    return BayerImage(y, bit_depth=header.bit_depth, phase=header.phase,
                      black_offset=tuple(header.black_offset))


def _round_int(x):
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def _subsampled_pairs(lh, hl, limit=MAX_FIT_SAMPLES):
    a = np.asarray(lh, dtype=np.float64).ravel()
    b = np.asarray(hl, dtype=np.float64).ravel()
    stride = max(1, int(np.ceil(a.size / limit)))
    return a[::stride], b[::stride]


def _fit_or_fixed(lh, hl, matrix, fit_config):
    cfg = fit_config or MatrixFitConfig()
    if matrix is None:
        a, b = _subsampled_pairs(lh, hl)
        matrix = fit_matrix(a, b, cfg).matrix
    mq = quantize_matrix(matrix)
    if abs(np.linalg.det(mq)) < 1e-9 or np.linalg.cond(mq) >= 1e6:
        raise EncodeError(f"decorrelation matrix {mq.tolist()} is ill-conditioned")
    return mq, cfg


# ---------------------------------------------------------------------------
# Mode 0: lossless.


def encode_lossless(image: BayerImage, levels=DEFAULT_LEVELS,
                    diff_levels=DEFAULT_DIFF_LEVELS) -> CompressedStream:
    shifted = _prepare(image)
    n = effective_levels(image.width, image.height, levels)
    nd = effective_levels(image.width, image.height, diff_levels)
    bands = wavelet.dwt53_forward(shifted)
    band_sum, band_diff = sumdiff_forward(bands.lh, bands.hl)

    header = StreamHeader(mode=MODE_LOSSLESS, width=image.width,
                          height=image.height, bit_depth=image.bit_depth,
                          phase=image.phase, black_offset=image.black_offset,
                          levels=n, diff_levels=nd)
    grids = {BAND_LL: bands.ll, BAND_SUM: band_sum,
             BAND_DIFF: band_diff, BAND_HH: bands.hh}
    segments = []
    for band_id in (BAND_LL, BAND_SUM, BAND_DIFF, BAND_HH):
        depth = nd if band_id == BAND_DIFF else n
        tree = packet_decompose(grids[band_id], depth, "53")
        segments.append(encode_band(tree.data, _BRANCH_CLASS[band_id], band_id))
    return CompressedStream(header=header, segments=segments)


def decode_lossless(stream: CompressedStream) -> BayerImage:
    h = stream.header
    h2, w2 = h.height // 2, h.width // 2
    grids = {}
    for band_id in (BAND_LL, BAND_SUM, BAND_DIFF, BAND_HH):
        seg = stream.segment_by_id(band_id)
        data, _ = decode_band(seg.payload, (h2, w2), _BRANCH_CLASS[band_id], band_id)
        depth = h.diff_levels if band_id == BAND_DIFF else h.levels
        grids[band_id] = packet_reconstruct(PacketTree(data, depth, "53"))
    lh, hl = sumdiff_inverse(grids[BAND_SUM], grids[BAND_DIFF])
    recon = wavelet.dwt53_inverse(wavelet.SubbandSet(
        1, grids[BAND_LL], lh, hl, grids[BAND_HH]))
    return _finish(recon, h)


# ---------------------------------------------------------------------------
# Modes 1 and 2: plain lossy.


def _lossy_front(image, matrix, fit_config):
    shifted = _prepare(image).astype(np.float64)
    bands = wavelet.dwt97_forward(shifted)
    mq, cfg = _fit_or_fixed(bands.lh, bands.hl, matrix, fit_config)
    band_sum, band_diff = matrix_forward(bands.lh, bands.hl, mq)
    return bands, band_sum, band_diff, mq, cfg


def _lossy_header(image, mode, n, nd, mq, cfg, steps):
    return StreamHeader(mode=mode, width=image.width, height=image.height,
                        bit_depth=image.bit_depth, phase=image.phase,
                        black_offset=image.black_offset, levels=n,
                        diff_levels=nd, objective_form=cfg.objective_form,
                        sparsity_weight=cfg.sparsity_weight, matrix=mq,
                        steps=steps)


def encode_lossy_a(image: BayerImage, steps: QuantizationSpec, matrix=None,
                   fit_config=None, levels=DEFAULT_LEVELS,
                   diff_levels=DEFAULT_DIFF_LEVELS) -> CompressedStream:
    bands, band_sum, band_diff, mq, cfg = _lossy_front(image, matrix, fit_config)
    n = effective_levels(image.width, image.height, levels)
    nd = effective_levels(image.width, image.height, diff_levels)
    header = _lossy_header(image, MODE_LOSSY_A, n, nd, mq, cfg, steps)
    grids = {BAND_LL: bands.ll, BAND_SUM: band_sum,
             BAND_DIFF: band_diff, BAND_HH: bands.hh}
    segments = []
    for band_id, branch in ((BAND_LL, "ll"), (BAND_SUM, "sum"),
                            (BAND_DIFF, "diff"), (BAND_HH, "hh")):
        depth = nd if band_id == BAND_DIFF else n
        tree = packet_decompose(grids[band_id], depth, "97")
        q = quantize(tree.data, steps.for_branch(branch))
        segments.append(encode_band(q, _BRANCH_CLASS[band_id], band_id))
    return CompressedStream(header=header, segments=segments)


def _decode_lossy_a_bands(stream):
    h = stream.header
    h2, w2 = h.height // 2, h.width // 2
    grids = {}
    for band_id, branch in ((BAND_LL, "ll"), (BAND_SUM, "sum"),
                            (BAND_DIFF, "diff"), (BAND_HH, "hh")):
        seg = stream.segment_by_id(band_id)
        q, _ = decode_band(seg.payload, (h2, w2), _BRANCH_CLASS[band_id], band_id)
        depth = h.diff_levels if band_id == BAND_DIFF else h.levels
        coefs = dequantize(q, h.steps.for_branch(branch))
        grids[band_id] = packet_reconstruct(PacketTree(coefs, depth, "97"))
    return grids


def decode_lossy_a_float(stream: CompressedStream):
    """Reconstruction before rounding back to integers (offset included)."""
    h = stream.header
    grids = _decode_lossy_a_bands(stream)
    lh, hl = matrix_inverse(grids[BAND_SUM], grids[BAND_DIFF], h.matrix)
    return wavelet.dwt97_inverse(wavelet.SubbandSet(
        1, grids[BAND_LL], lh, hl, grids[BAND_HH]))


def decode_lossy_a(stream: CompressedStream) -> BayerImage:
    return _finish(_round_int(decode_lossy_a_float(stream)), stream.header)


def encode_lossy_b(image: BayerImage, steps: QuantizationSpec, matrix=None,
                   fit_config=None, levels=DEFAULT_LEVELS,
                   diff_levels=DEFAULT_DIFF_LEVELS) -> CompressedStream:
    bands, band_sum, band_diff, mq, cfg = _lossy_front(image, matrix, fit_config)
    n = effective_levels(image.width, image.height, levels)
    nd = effective_levels(image.width, image.height, diff_levels)
    header = _lossy_header(image, MODE_LOSSY_B, n, nd, mq, cfg, steps)
    grids = {BAND_LL: bands.ll, BAND_SUM: band_sum,
             BAND_DIFF: band_diff, BAND_HH: bands.hh}
    segments = []
    for band_id, branch in ((BAND_LL, "ll"), (BAND_SUM, "sum"),
                            (BAND_DIFF, "diff"), (BAND_HH, "hh")):
        depth = nd if band_id == BAND_DIFF else n
        q = quantize(grids[band_id], steps.for_branch(branch))
        tree = packet_decompose(q, depth, "53")
        segments.append(encode_band(tree.data, _BRANCH_CLASS[band_id], band_id))
    return CompressedStream(header=header, segments=segments)


def decode_lossy_b_float(stream: CompressedStream):
    h = stream.header
    h2, w2 = h.height // 2, h.width // 2
    grids = {}
    for band_id, branch in ((BAND_LL, "ll"), (BAND_SUM, "sum"),
                            (BAND_DIFF, "diff"), (BAND_HH, "hh")):
        seg = stream.segment_by_id(band_id)
        data, _ = decode_band(seg.payload, (h2, w2), _BRANCH_CLASS[band_id], band_id)
        depth = h.diff_levels if band_id == BAND_DIFF else h.levels
        q = packet_reconstruct(PacketTree(data, depth, "53"))
        grids[band_id] = dequantize(q, h.steps.for_branch(branch))
    lh, hl = matrix_inverse(grids[BAND_SUM], grids[BAND_DIFF], h.matrix)
    return wavelet.dwt97_inverse(wavelet.SubbandSet(
        1, grids[BAND_LL], lh, hl, grids[BAND_HH]))


def decode_lossy_b(stream: CompressedStream) -> BayerImage:
    return _finish(_round_int(decode_lossy_b_float(stream)), stream.header)


# ---------------------------------------------------------------------------
# Mode 3: camera-pipeline-aware.


def encode_camra(image: BayerImage, steps: QuantizationSpec,
                 params: PipelineParams, matrix=None, fit_config=None,
                 levels=DEFAULT_LEVELS, diff_levels=DEFAULT_DIFF_LEVELS
                 ) -> CompressedStream:
    bands, band_sum, band_diff, mq, cfg = _lossy_front(image, matrix, fit_config)
    n = effective_levels(image.width, image.height, levels)
    nd = effective_levels(image.width, image.height, diff_levels)
    header = _lossy_header(image, MODE_CAMRA, n, nd, mq, cfg, steps)
    header.color_matrix = params.color_matrix
    header.illuminant = params.illuminant
    header.gamma = params.gamma

    scale = float((1 << image.bit_depth) - 1)
    lossy_scale = float(mq[0, 0] + mq[0, 1])
    if lossy_scale == 0:
        raise EncodeError("decorrelation matrix has a zero sum-row gain")
    quarter = pipeline.quarter_rgb_from_bands(
        bands.ll / scale, band_sum / scale, bands.hh / scale, lossy_scale)
    magnitudes, signs = pipeline.split_magnitude_sign(quarter)
    rgb = cfa.ColorImage(magnitudes, "rgb")
    rgb = pipeline.color_correct(rgb, params.color_matrix)
    rgb = pipeline.white_balance(rgb, params.illuminant)
    rgb = pipeline.apply_gamma(rgb, params.gamma)
    display = cfa.rgb_to_luma_chroma(rgb).planes * scale

    plane_for = {BAND_LL: display[0], BAND_SUM: display[1],
                 BAND_HH: display[2], BAND_DIFF: band_diff}
    segments = []
    for band_id, branch in ((BAND_LL, "ll"), (BAND_SUM, "sum"),
                            (BAND_DIFF, "diff"), (BAND_HH, "hh")):
        depth = nd if band_id == BAND_DIFF else n
        tree = packet_decompose(plane_for[band_id], depth, "97")
        q = quantize(tree.data, steps.for_branch(branch))
        segments.append(encode_band(q, _BRANCH_CLASS[band_id], band_id))
    sign_grid = signs.reshape(-1, signs.shape[2])  # stack the 3 planes
    segments.append(encode_sign_plane(sign_grid, BAND_SIGN))
    return CompressedStream(header=header, segments=segments)


def decode_camra_float(stream: CompressedStream):
    h = stream.header
    h2, w2 = h.height // 2, h.width // 2
    grids = {}
    for band_id, branch in ((BAND_LL, "ll"), (BAND_SUM, "sum"),
                            (BAND_DIFF, "diff"), (BAND_HH, "hh")):
        seg = stream.segment_by_id(band_id)
        q, _ = decode_band(seg.payload, (h2, w2), _BRANCH_CLASS[band_id], band_id)
        depth = h.diff_levels if band_id == BAND_DIFF else h.levels
        coefs = dequantize(q, h.steps.for_branch(branch))
        grids[band_id] = packet_reconstruct(PacketTree(coefs, depth, "97"))
    sign_seg = stream.segment_by_id(BAND_SIGN)
    sign_grid, _ = decode_sign_plane(sign_seg.payload, (3 * h2, w2), BAND_SIGN)
    signs = sign_grid.reshape(3, h2, w2)

    scale = float((1 << h.bit_depth) - 1)
    lossy_scale = float(h.matrix[0, 0] + h.matrix[0, 1])
    display = np.stack([grids[BAND_LL], grids[BAND_SUM], grids[BAND_HH]]) / scale
    rgb = cfa.luma_chroma_to_rgb(cfa.ColorImage(display, "lumachroma"))
    rgb = pipeline.apply_gamma(rgb, h.gamma, inverse=True)
    rgb = pipeline.white_balance_inverse(rgb, h.illuminant)
    rgb = pipeline.color_correct_inverse(rgb, h.color_matrix)
    quarter = pipeline.recombine_magnitude_sign(rgb.planes, signs)
    ll, band_sum, hh = pipeline.bands_from_quarter_rgb(quarter, lossy_scale)
    lh, hl = matrix_inverse(band_sum * scale, grids[BAND_DIFF], h.matrix)
    return wavelet.dwt97_inverse(wavelet.SubbandSet(
        1, ll * scale, lh, hl, hh * scale))


def decode_camra(stream: CompressedStream) -> BayerImage:
    return _finish(_round_int(decode_camra_float(stream)), stream.header)


# ---------------------------------------------------------------------------
# Mode dispatch.


def decode(stream: CompressedStream) -> BayerImage:
    mode = stream.header.mode
    if mode == MODE_LOSSLESS:
        return decode_lossless(stream)
    if mode == MODE_LOSSY_A:
        return decode_lossy_a(stream)
    if mode == MODE_LOSSY_B:
        return decode_lossy_b(stream)
    if mode == MODE_CAMRA:
        return decode_camra(stream)
    raise ValueError(f"unknown mode {mode}")


def sign_plane_bpp(stream: CompressedStream):
    """Sign-plane overhead in bits per mosaic pixel (0 for signless modes)."""
    for seg in stream.segments:
        if seg.band_id == BAND_SIGN:
            return 8.0 * len(seg.payload) / (stream.header.width * stream.header.height)
    return 0.0
