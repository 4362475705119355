"""Self-contained lossless coder for integer subband grids.

Grids are tiled into 64x64 blocks; each block is coded MSB-first by
sign+magnitude bitplanes through an adaptive binary range coder.  Binary
contexts are keyed by (band class, bitplane, count of significant
4-neighbors) and reset per block, so blocks decode independently.  A block
whose coded form would expand is stored raw; if the whole band still
expands, the segment escapes to a single raw chunk.

Segment layout (little-endian):
    band id (u8) | block count (u16) | per block: payload length (u32) + bytes

A block count of 0 signals the raw-band escape: one u32 length followed by
the samples as int32.  Coded block payloads start with the bitplane count;
a leading 0xFF marks a raw block instead.

The numba-compiled kernels below are the only hot loops in the package.
The range coder is the classic carry-propagating byte-wise binary coder:
33-bit low register, 32-bit range, probabilities in 1/65536 units with a
shift-by-5 adaptive update.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

BLOCK = 64
MAX_MAGNITUDE_BITS = 24
PROB_BITS = 16
PROB_ONE = 1 << PROB_BITS
PROB_INIT = PROB_ONE // 2
PROB_MOVE = 5
TOP = 1 << 24

CLASS_LUMA = 0
CLASS_CHROMA = 1

BAND_LL = 0
BAND_SUM = 1
BAND_DIFF = 2
BAND_HH = 3
BAND_SIGN = 4

_RAW_BLOCK = 0xFF

# Context bank layout (one bank per block):
#   significance: class * (25 * 3) + plane * 3 + neighbor_count
#   refinement:   _N_SIG + class * 25 + plane
#   sign:         _N_SIG + _N_REF + class
_PLANES = MAX_MAGNITUDE_BITS + 1
_N_SIG = 2 * _PLANES * 3
_N_REF = 2 * _PLANES
_CTX_TOTAL = _N_SIG + _N_REF + 2


class DecodeError(ValueError):
    """Corrupted or truncated payload; carries the failing byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass
class CodedSegment:
    band_id: int
    payload: bytes
    sample_count: int

    @property
    def declared_bpp(self):
        return 8.0 * len(self.payload) / self.sample_count


# ---------------------------------------------------------------------------
# Range coder primitives.  Encoder state: [low, range, cache_size, cache,
# write_pos]; decoder state: [code, range, read_pos].


@njit(cache=True, inline="always")
def _rc_shift_low(state, out):
    low = state[0]
    if low < 0xFF000000 or low > 0xFFFFFFFF:
        carry = low >> 32
        c = state[3] + carry
        for _ in range(state[2]):
            out[state[4]] = c & 0xFF
            state[4] += 1
            c = 0xFF + carry
        state[2] = 0
        state[3] = (low >> 24) & 0xFF
    state[2] += 1
    state[0] = (low << 8) & 0xFFFFFFFF


@njit(cache=True, inline="always")
def _rc_encode_bit(state, out, probs, ctx, bit):
    p = probs[ctx]
    bound = (state[1] * p) >> PROB_BITS
    if bit == 0:
        state[1] = bound
        probs[ctx] = p + ((PROB_ONE - p) >> PROB_MOVE)
    else:
        state[0] += bound
        state[1] -= bound
        probs[ctx] = p - (p >> PROB_MOVE)
    while state[1] < TOP:
        state[1] = (state[1] << 8) & 0xFFFFFFFF
        _rc_shift_low(state, out)


@njit(cache=True, inline="always")
def _rc_flush(state, out):
    for _ in range(5):
        _rc_shift_low(state, out)


@njit(cache=True, inline="always")
def _read_byte(data, pos):
    if pos < data.size:
        return np.int64(data[pos])
    return np.int64(0)


@njit(cache=True, inline="always")
def _rc_init_decoder(state, data, pos):
    state[0] = 0
    state[1] = 0xFFFFFFFF
    state[2] = pos + 1  # the encoder's leading cache byte carries no payload
    for _ in range(4):
        state[0] = (state[0] << 8) | _read_byte(data, state[2])
        state[2] += 1


@njit(cache=True, inline="always")
def _rc_decode_bit(state, data, probs, ctx):
    p = probs[ctx]
    bound = (state[1] * p) >> PROB_BITS
    if state[0] < bound:
        bit = 0
        state[1] = bound
        probs[ctx] = p + ((PROB_ONE - p) >> PROB_MOVE)
    else:
        bit = 1
        state[0] -= bound
        state[1] -= bound
        probs[ctx] = p - (p >> PROB_MOVE)
    while state[1] < TOP:
        state[1] = (state[1] << 8) & 0xFFFFFFFF
        state[0] = ((state[0] << 8) | _read_byte(data, state[2])) & 0xFFFFFFFF
        state[2] += 1
    return bit


@njit(cache=True)
def _encode_block(vals, h, w, class_id, out):
    """Bitplane-encode one block into out; returns the byte count."""
    nplanes = 0
    for i in range(h):
        for j in range(w):
            m = vals[i, j]
            if m < 0:
                m = -m
            while m >= (1 << nplanes):
                nplanes += 1
    out[0] = nplanes
    if nplanes == 0:
        return 1

    state = np.zeros(5, dtype=np.int64)
    state[1] = 0xFFFFFFFF
    state[2] = 1  # pending leading byte
    state[4] = 1  # out[0] holds nplanes
    probs = np.full(_CTX_TOTAL, PROB_INIT, dtype=np.int64)
    sig = np.zeros((h, w), dtype=np.uint8)

    for p in range(nplanes - 1, -1, -1):
        for i in range(h):
            for j in range(w):
                v = vals[i, j]
                m = -v if v < 0 else v
                bit = (m >> p) & 1
                if sig[i, j] == 0:
                    nb = 0
                    if i > 0 and sig[i - 1, j]:
                        nb += 1
                    if j > 0 and sig[i, j - 1]:
                        nb += 1
                    if i + 1 < h and sig[i + 1, j]:
                        nb += 1
                    if j + 1 < w and sig[i, j + 1]:
                        nb += 1
                    if nb > 2:
                        nb = 2
                    ctx = class_id * (_PLANES * 3) + p * 3 + nb
                    _rc_encode_bit(state, out, probs, ctx, bit)
                    if bit:
                        _rc_encode_bit(state, out, probs,
                                       _N_SIG + _N_REF + class_id,
                                       1 if v < 0 else 0)
                        sig[i, j] = 1
                else:
                    _rc_encode_bit(state, out, probs,
                                   _N_SIG + class_id * _PLANES + p, bit)
    _rc_flush(state, out)
    return state[4]


@njit(cache=True)
def _decode_block(data, pos, h, w, class_id, vals):
    """Inverse of _encode_block; fills vals, returns bytes consumed."""
    nplanes = _read_byte(data, pos)
    for i in range(h):
        for j in range(w):
            vals[i, j] = 0
    if nplanes == 0:
        return 1

    state = np.zeros(3, dtype=np.int64)
    _rc_init_decoder(state, data, pos + 1)
    probs = np.full(_CTX_TOTAL, PROB_INIT, dtype=np.int64)
    sig = np.zeros((h, w), dtype=np.uint8)
    neg = np.zeros((h, w), dtype=np.uint8)

    for p in range(nplanes - 1, -1, -1):
        for i in range(h):
            for j in range(w):
                if sig[i, j] == 0:
                    nb = 0
                    if i > 0 and sig[i - 1, j]:
                        nb += 1
                    if j > 0 and sig[i, j - 1]:
                        nb += 1
                    if i + 1 < h and sig[i + 1, j]:
                        nb += 1
                    if j + 1 < w and sig[i, j + 1]:
                        nb += 1
                    if nb > 2:
                        nb = 2
                    ctx = class_id * (_PLANES * 3) + p * 3 + nb
                    if _rc_decode_bit(state, data, probs, ctx):
                        neg[i, j] = _rc_decode_bit(state, data, probs,
                                                   _N_SIG + _N_REF + class_id)
                        sig[i, j] = 1
                        vals[i, j] = 1 << p
                else:
                    if _rc_decode_bit(state, data, probs,
                                      _N_SIG + class_id * _PLANES + p):
                        vals[i, j] |= 1 << p

    for i in range(h):
        for j in range(w):
            if neg[i, j]:
                vals[i, j] = -vals[i, j]
    return state[2] - pos


@njit(cache=True)
def _encode_bits(flat, out):
    """Binary sequence with a single adaptive context; returns byte count."""
    state = np.zeros(5, dtype=np.int64)
    state[1] = 0xFFFFFFFF
    state[2] = 1
    probs = np.full(1, PROB_INIT, dtype=np.int64)
    for i in range(flat.size):
        _rc_encode_bit(state, out, probs, 0, flat[i])
    _rc_flush(state, out)
    return state[4]


@njit(cache=True)
def _decode_bits(data, pos, n, out_bits):
    state = np.zeros(3, dtype=np.int64)
    _rc_init_decoder(state, data, pos)
    probs = np.full(1, PROB_INIT, dtype=np.int64)
    for i in range(n):
        out_bits[i] = _rc_decode_bit(state, data, probs, 0)
    return state[2] - pos


# ---------------------------------------------------------------------------
# Band-level API.


def _block_grid(h, w):
    for i0 in range(0, h, BLOCK):
        for j0 in range(0, w, BLOCK):
            yield i0, j0, min(BLOCK, h - i0), min(BLOCK, w - j0)


def encode_band(grid, band_class, band_id=0) -> CodedSegment:
    """Losslessly code one integer grid into a segment."""
    a = np.ascontiguousarray(grid, dtype=np.int64)
    if a.ndim != 2:
        raise ValueError("encode_band expects a 2-D grid")
    if a.size and int(np.abs(a).max()) >= (1 << MAX_MAGNITUDE_BITS):
        raise ValueError(
            f"coefficient magnitude {int(np.abs(a).max())} exceeds the "
            f"2^{MAX_MAGNITUDE_BITS} coder limit"
        )
    h, w = a.shape
    class_id = CLASS_LUMA if band_class == "luma" else CLASS_CHROMA
    scratch = np.empty(BLOCK * BLOCK * (MAX_MAGNITUDE_BITS + 2) + 64, dtype=np.uint8)
    blocks = []
    for i0, j0, bh, bw in _block_grid(h, w):
        block = np.ascontiguousarray(a[i0:i0 + bh, j0:j0 + bw])
        n = _encode_block(block, bh, bw, class_id, scratch)
        raw = block.astype("<i4").tobytes()
        if n > len(raw) + 1:
            blocks.append(bytes([_RAW_BLOCK]) + raw)
        else:
            blocks.append(bytes(scratch[:n]))

    body = b"".join(struct.pack("<I", len(b)) + b for b in blocks)
    raw_band = a.astype("<i4").tobytes()
    if len(body) > len(raw_band) + 4:
        payload = (struct.pack("<BH", band_id, 0)
                   + struct.pack("<I", len(raw_band)) + raw_band)
    else:
        payload = struct.pack("<BH", band_id, len(blocks)) + body
    return CodedSegment(band_id=band_id, payload=payload, sample_count=max(a.size, 1))


def decode_band(payload, shape, band_class, expect_band_id=None):
    """Decode a segment made by encode_band; returns (grid, bytes consumed)."""
    h, w = shape
    class_id = CLASS_LUMA if band_class == "luma" else CLASS_CHROMA
    if len(payload) < 3:
        raise DecodeError("segment header truncated", 0)
    band_id, nblocks = struct.unpack_from("<BH", payload, 0)
    if expect_band_id is not None and band_id != expect_band_id:
        raise DecodeError(f"unexpected band id {band_id}", 0)
    pos = 3
    out = np.zeros((h, w), dtype=np.int64)
    data = np.frombuffer(payload, dtype=np.uint8)

    if nblocks == 0:
        if pos + 4 > len(payload):
            raise DecodeError("raw-band length truncated", pos)
        (nbytes,) = struct.unpack_from("<I", payload, pos)
        pos += 4
        if nbytes != 4 * h * w:
            raise DecodeError(f"raw-band length {nbytes} does not match grid", pos)
        if pos + nbytes > len(payload):
            raise DecodeError("raw-band payload truncated", pos)
        out[:, :] = np.frombuffer(payload, dtype="<i4", count=h * w,
                                  offset=pos).reshape(h, w)
        return out, pos + nbytes

    expected = sum(1 for _ in _block_grid(h, w))
    if nblocks != expected:
        raise DecodeError(f"block count {nblocks} does not match grid {h}x{w}", 0)
    for i0, j0, bh, bw in _block_grid(h, w):
        if pos + 4 > len(payload):
            raise DecodeError("block length truncated", pos)
        (nbytes,) = struct.unpack_from("<I", payload, pos)
        pos += 4
        if nbytes == 0 or pos + nbytes > len(payload):
            raise DecodeError("block payload truncated", pos)
        if data[pos] == _RAW_BLOCK:
            if nbytes != 1 + 4 * bh * bw:
                raise DecodeError("raw block length mismatch", pos)
            vals = np.frombuffer(payload, dtype="<i4", count=bh * bw,
                                 offset=pos + 1).reshape(bh, bw)
            out[i0:i0 + bh, j0:j0 + bw] = vals
        else:
            vals = np.empty((bh, bw), dtype=np.int64)
            used = _decode_block(data, pos, bh, bw, class_id, vals)
            if used != nbytes:
                raise DecodeError(f"block consumed {used} of {nbytes} bytes", pos)
            out[i0:i0 + bh, j0:j0 + bw] = vals
        pos += nbytes
    return out, pos


def encode_sign_plane(bits, band_id=BAND_SIGN) -> CodedSegment:
    """Code a binary grid with one adaptive context."""
    b = np.ascontiguousarray(bits, dtype=np.uint8)
    if b.size and b.max() > 1:
        raise ValueError("sign plane must be binary")
    scratch = np.empty(b.size + 128, dtype=np.uint8)
    n = _encode_bits(b.ravel(), scratch)
    if n > b.size // 8 + 16:
        # Packed-raw escape for incompressible planes.
        body = bytes([1]) + np.packbits(b.ravel()).tobytes()
    else:
        body = bytes([0]) + bytes(scratch[:n])
    payload = struct.pack("<BH", band_id, 1) + struct.pack("<I", len(body)) + body
    return CodedSegment(band_id=band_id, payload=payload, sample_count=max(b.size, 1))


def decode_sign_plane(payload, shape, expect_band_id=BAND_SIGN):
    h, w = shape
    if len(payload) < 8:
        raise DecodeError("sign segment truncated", 0)
    band_id, nblocks = struct.unpack_from("<BH", payload, 0)
    if band_id != expect_band_id or nblocks != 1:
        raise DecodeError(f"bad sign segment header ({band_id}, {nblocks})", 0)
    (nbytes,) = struct.unpack_from("<I", payload, 3)
    pos = 7
    if nbytes == 0 or pos + nbytes > len(payload):
        raise DecodeError("sign payload truncated", pos)
    mode = payload[pos]
    if mode == 1:
        npacked = (h * w + 7) // 8
        if nbytes != 1 + npacked:
            raise DecodeError("raw sign plane length mismatch", pos)
        packed = np.frombuffer(payload, dtype=np.uint8, count=npacked, offset=pos + 1)
        bits = np.unpackbits(packed)[: h * w].reshape(h, w)
    elif mode == 0:
        data = np.frombuffer(payload, dtype=np.uint8)
        flat = np.empty(h * w, dtype=np.uint8)
        used = _decode_bits(data, pos + 1, h * w, flat)
        if used + 1 != nbytes:
            raise DecodeError(f"sign plane consumed {used + 1} of {nbytes}", pos)
        bits = flat.reshape(h, w)
    else:
        raise DecodeError(f"unknown sign plane mode {mode}", pos)
    return bits, pos + nbytes


def entropy_estimate(grid):
    """Order-0 entropy in bits/sample of an integer grid."""
    a = np.asarray(grid)
    if a.size == 0:
        raise ValueError("empty grid")
    _, counts = np.unique(a.ravel(), return_counts=True)
    p = counts / a.size
    return float(-(p * np.log2(p)).sum())


def warm_up():
    """Force-compile the numba kernels on tiny inputs."""
    g = np.array([[1, -2], [0, 3]], dtype=np.int64)
    seg = encode_band(g, "luma", 0)
    decode_band(seg.payload, (2, 2), "luma", 0)
    s = encode_sign_plane(np.array([[0, 1], [1, 0]], dtype=np.uint8))
    decode_sign_plane(s.payload, (2, 2))
