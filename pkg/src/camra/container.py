"""Byte-level container for compressed streams (magic "CMRA", little-endian).

Header layout:

    magic        4s  = b"CMRA"
    version      u8  = 1
    mode         u8    0=lossless 1=lossy-a 2=lossy-b 3=camra
    width        u32
    height       u32
    bit_depth    u8
    phase        u8    index into cfa.PHASES
    black        3*u16 per-channel black offsets (r, g, b)
    levels       u8    packet levels N actually applied
    diff_levels  u8    packet levels N' of the difference branch
    obj_form     u8    0=derivation 1=literal (matrix-fit objective)
    lambda       f32   matrix-fit sparsity weight
    [mode>=1]    matrix 4*i32, 16.16 fixed point, row-major
    step count   u8    0 for lossless, else 4
    steps        count*f32 in branch order (ll, sum, diff, hh)
    [mode==3]    color matrix 9*f32 row-major, illuminant 3*f32, gamma u8

Segments follow in fixed order: lowpass, chroma-sum, detail-diff, highpass,
then the sign plane for mode 3.  Each segment is self-describing (see
entropy.py); truncation anywhere raises FormatError.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import cfa, entropy
from .decorrelate import FIXED_POINT_SCALE
from .quantize import QuantizationSpec

MAGIC = b"CMRA"
VERSION = 1

MODE_LOSSLESS = 0
MODE_LOSSY_A = 1
MODE_LOSSY_B = 2
MODE_CAMRA = 3

MODE_NAMES = {MODE_LOSSLESS: "lossless", MODE_LOSSY_A: "lossy-a",
              MODE_LOSSY_B: "lossy-b", MODE_CAMRA: "camra"}

_GAMMA_IDS = {"identity": 0, "srgb": 1}
_GAMMA_NAMES = {v: k for k, v in _GAMMA_IDS.items()}


class FormatError(ValueError):
    """Malformed or truncated container."""


@dataclass
class StreamHeader:
    mode: int
    width: int
    height: int
    bit_depth: int
    phase: str = "RGGB"
    black_offset: tuple = (0, 0, 0)
    levels: int = 5
    diff_levels: int = 2
    objective_form: str = "derivation"
    sparsity_weight: float = 0.0
    matrix: np.ndarray | None = None
    steps: QuantizationSpec | None = None
    color_matrix: np.ndarray | None = None
    illuminant: tuple | None = None
    gamma: str | None = None

    def __eq__(self, other):
        if not isinstance(other, StreamHeader):
            return NotImplemented
        def _arr_eq(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(np.asarray(a), np.asarray(b))
        return (self.mode == other.mode and self.width == other.width
                and self.height == other.height and self.bit_depth == other.bit_depth
                and self.phase == other.phase
                and tuple(self.black_offset) == tuple(other.black_offset)
                and self.levels == other.levels
                and self.diff_levels == other.diff_levels
                and self.objective_form == other.objective_form
                and self.sparsity_weight == other.sparsity_weight
                and _arr_eq(self.matrix, other.matrix)
                and self.steps == other.steps
                and _arr_eq(self.color_matrix, other.color_matrix)
                and (self.illuminant == other.illuminant)
                and self.gamma == other.gamma)


@dataclass
class CompressedStream:
    header: StreamHeader
    segments: list = field(default_factory=list)  # entropy.CodedSegment

    def segment_by_id(self, band_id):
        for seg in self.segments:
            if seg.band_id == band_id:
                return seg
        raise FormatError(f"missing segment {band_id}")

    def total_bytes(self):
        return len(serialize_header(self.header)) + sum(
            len(s.payload) for s in self.segments)

    def bpp(self):
        return 8.0 * self.total_bytes() / (self.header.width * self.header.height)

    def to_bytes(self):
        return serialize_header(self.header) + b"".join(
            s.payload for s in self.segments)


def serialize_header(h: StreamHeader) -> bytes:
    out = [MAGIC, struct.pack("<BB", VERSION, h.mode),
           struct.pack("<IIBB", h.width, h.height, h.bit_depth,
                       cfa.PHASES.index(h.phase)),
           struct.pack("<3H", *h.black_offset),
           struct.pack("<BB", h.levels, h.diff_levels),
           struct.pack("<Bf", 0 if h.objective_form == "derivation" else 1,
                       h.sparsity_weight)]
    if h.mode != MODE_LOSSLESS:
        if h.matrix is None:
            raise FormatError("lossy modes require a decorrelation matrix")
        fixed = np.round(np.asarray(h.matrix) * FIXED_POINT_SCALE).astype(np.int64)
        if np.any(np.abs(fixed) > 2**31 - 1):
            raise FormatError("matrix entries exceed 16.16 fixed-point range")
        out.append(struct.pack("<4i", *fixed.ravel()))
    if h.steps is None:
        out.append(struct.pack("<B", 0))
    else:
        d = h.steps.as_dict()
        out.append(struct.pack("<B4f", 4, d["ll"], d["sum"], d["diff"], d["hh"]))
    if h.mode == MODE_CAMRA:
        if h.color_matrix is None or h.illuminant is None or h.gamma is None:
            raise FormatError("camra mode requires pipeline parameters")
        out.append(struct.pack("<9f", *np.asarray(h.color_matrix,
                                                  dtype=np.float64).ravel()))
        out.append(struct.pack("<3f", *h.illuminant))
        out.append(struct.pack("<B", _GAMMA_IDS[h.gamma]))
    return b"".join(out)


def _take(buf, offset, n, what):
    if offset + n > len(buf):
        raise FormatError(f"truncated header ({what})")
    return buf[offset:offset + n], offset + n


def parse_header(buf):
    """Parse a header; returns (StreamHeader, offset of first segment)."""
    raw, off = _take(buf, 0, 4, "magic")
    if raw != MAGIC:
        raise FormatError(f"bad magic {raw!r}")
    raw, off = _take(buf, off, 2, "version/mode")
    version, mode = struct.unpack("<BB", raw)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if mode not in MODE_NAMES:
        raise FormatError(f"unknown mode {mode}")
    raw, off = _take(buf, off, 10, "geometry")
    width, height, bit_depth, phase_id = struct.unpack("<IIBB", raw)
    if phase_id >= len(cfa.PHASES):
        raise FormatError(f"unknown CFA phase id {phase_id}")
    raw, off = _take(buf, off, 6, "black offsets")
    black = struct.unpack("<3H", raw)
    raw, off = _take(buf, off, 2, "levels")
    levels, diff_levels = struct.unpack("<BB", raw)
    raw, off = _take(buf, off, 5, "fit metadata")
    obj_id, lam = struct.unpack("<Bf", raw)

    matrix = None
    if mode != MODE_LOSSLESS:
        raw, off = _take(buf, off, 16, "matrix")
        fixed = struct.unpack("<4i", raw)
        matrix = np.array(fixed, dtype=np.float64).reshape(2, 2) / FIXED_POINT_SCALE
    raw, off = _take(buf, off, 1, "step count")
    (nsteps,) = struct.unpack("<B", raw)
    steps = None
    if nsteps:
        if nsteps != 4:
            raise FormatError(f"expected 4 quantizer steps, got {nsteps}")
        raw, off = _take(buf, off, 16, "steps")
        s = struct.unpack("<4f", raw)
        steps = QuantizationSpec(*s)
    color_matrix = illuminant = gamma = None
    if mode == MODE_CAMRA:
        raw, off = _take(buf, off, 36, "color matrix")
        color_matrix = np.array(struct.unpack("<9f", raw)).reshape(3, 3)
        raw, off = _take(buf, off, 12, "illuminant")
        illuminant = struct.unpack("<3f", raw)
        raw, off = _take(buf, off, 1, "gamma")
        gamma_id = raw[0]
        if gamma_id not in _GAMMA_NAMES:
            raise FormatError(f"unknown gamma id {gamma_id}")
        gamma = _GAMMA_NAMES[gamma_id]

    header = StreamHeader(
        mode=mode, width=width, height=height, bit_depth=bit_depth,
        phase=cfa.PHASES[phase_id], black_offset=black, levels=levels,
        diff_levels=diff_levels,
        objective_form="derivation" if obj_id == 0 else "literal",
        sparsity_weight=lam, matrix=matrix, steps=steps,
        color_matrix=color_matrix, illuminant=illuminant, gamma=gamma)
    return header, off


def parse_stream(buf) -> CompressedStream:
    """Parse a full stream; segment payload integrity is checked on decode."""
    header, off = parse_header(buf)
    n_segments = 5 if header.mode == MODE_CAMRA else 4
    h2, w2 = header.height // 2, header.width // 2
    segments = []
    for k in range(n_segments):
        if off + 3 > len(buf):
            raise FormatError(f"truncated stream at segment {k}")
        band_id, nblocks = struct.unpack_from("<BH", buf, off)
        if band_id != k:
            raise FormatError(f"segment {k} has band id {band_id}")
        pos = off + 3
        count = 1 if (nblocks == 0 or band_id == entropy.BAND_SIGN) else nblocks
        for _ in range(count):
            if pos + 4 > len(buf):
                raise FormatError(f"truncated stream in segment {k}")
            (nbytes,) = struct.unpack_from("<I", buf, pos)
            pos += 4 + nbytes
        if pos > len(buf):
            raise FormatError(f"truncated stream in segment {k}")
        samples = 3 * h2 * w2 if band_id == entropy.BAND_SIGN else h2 * w2
        segments.append(entropy.CodedSegment(band_id=band_id,
                                             payload=bytes(buf[off:pos]),
                                             sample_count=max(samples, 1)))
        off = pos
    if off != len(buf):
        raise FormatError(f"{len(buf) - off} trailing bytes after last segment")
    return CompressedStream(header=header, segments=segments)
