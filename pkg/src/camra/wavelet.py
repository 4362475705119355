"""Separable 2-D lifting wavelets: reversible LeGall 5/3 and Daubechies 9/7.

Both kernels use whole-sample symmetric boundary extension and the usual
normalization (lowpass DC gain 1, highpass Nyquist gain 2), so a constant
grid transforms to a constant LL band with zero details.  The 5/3 path is
integer-exact and bit-reversible; the 9/7 path is float64.

Multi-level ("dyadic") decomposition is stored packed in-place: the LL
quadrant is recursively replaced by its own subbands, giving the familiar
pyramid layout.  packet_decompose applies that pyramid to an arbitrary
band, which is how the codec sparsifies detail branches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cfa import DimensionError

# Daubechies 9/7 lifting constants (canonical values, full precision so a
# constant signal nulls the detail bands down to float rounding).
ALPHA = -1.586134342059924
BETA = -0.052980118572961
GAMMA = 0.882911075530934
DELTA = 0.443506852043971
KAPPA = 1.230174104914001


@dataclass
class SubbandSet:
    """The four subbands of one 2-D analysis level.

    Band naming follows w_{vertical,horizontal}: LH is vertically lowpass /
    horizontally highpass, HL the transpose.
    """

    level: int
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    @property
    def bands(self):
        return {"LL": self.ll, "LH": self.lh, "HL": self.hl, "HH": self.hh}


@dataclass
class PacketTree:
    """Dyadic decomposition of one band, stored packed (pyramid layout)."""

    data: np.ndarray
    levels: int
    kernel: str  # "53" or "97"


class TransformCounter:
    """Counts single-level 2-D forward transforms, grouped by grid area.

    Off by default; the bench enables it to compare how many full-image
    level-1 transforms each scheme performs.
    """

    def __init__(self):
        self.enabled = False
        self.areas = []

    def reset(self):
        self.areas = []

    def record(self, shape):
        if self.enabled:
            self.areas.append(shape[0] * shape[1])

    def count_at(self, area):
        return sum(1 for a in self.areas if a == area)


counter = TransformCounter()


def _check_even(shape):
    if shape[-1] % 2 or shape[-2] % 2:
        raise DimensionError(f"transform requires even sides, got {shape[-2]}x{shape[-1]}")


# ---------------------------------------------------------------------------
# 1-D lifting along the last axis.  e/o are even/odd polyphase components;
# neighbor access uses whole-sample symmetric extension.


def _fwd53(x):
    e = x[..., 0::2]
    o = x[..., 1::2]
    e_next = np.concatenate([e[..., 1:], e[..., -1:]], axis=-1)
    d = o - (e + e_next) // 2
    d_prev = np.concatenate([d[..., :1], d[..., :-1]], axis=-1)
    s = e + (d_prev + d + 2) // 4
    return s, d


def _inv53(s, d):
    d_prev = np.concatenate([d[..., :1], d[..., :-1]], axis=-1)
    e = s - (d_prev + d + 2) // 4
    e_next = np.concatenate([e[..., 1:], e[..., -1:]], axis=-1)
    o = d + (e + e_next) // 2
    out = np.empty(e.shape[:-1] + (e.shape[-1] * 2,), dtype=s.dtype)
    out[..., 0::2] = e
    out[..., 1::2] = o
    return out


def _fwd97(x):
    e = x[..., 0::2].astype(np.float64, copy=True)
    o = x[..., 1::2].astype(np.float64, copy=True)

    def nxt(a):
        return np.concatenate([a[..., 1:], a[..., -1:]], axis=-1)

    def prv(a):
        return np.concatenate([a[..., :1], a[..., :-1]], axis=-1)

    d = o + ALPHA * (e + nxt(e))
    s = e + BETA * (prv(d) + d)
    d = d + GAMMA * (s + nxt(s))
    s = s + DELTA * (prv(d) + d)
    return s / KAPPA, d * KAPPA


def _inv97(s, d):
    s = s * KAPPA
    d = d / KAPPA

    def nxt(a):
        return np.concatenate([a[..., 1:], a[..., -1:]], axis=-1)

    def prv(a):
        return np.concatenate([a[..., :1], a[..., :-1]], axis=-1)

    s = s - DELTA * (prv(d) + d)
    d = d - GAMMA * (s + nxt(s))
    e = s - BETA * (prv(d) + d)
    o = d - ALPHA * (e + nxt(e))
    out = np.empty(e.shape[:-1] + (e.shape[-1] * 2,), dtype=np.float64)
    out[..., 0::2] = e
    out[..., 1::2] = o
    return out


_FWD = {"53": _fwd53, "97": _fwd97}
_INV = {"53": _inv53, "97": _inv97}


# ---------------------------------------------------------------------------
# Single-level 2-D transforms.


def _dwt2_packed(grid, kernel):
    """One 2-D level; returns the packed [[LL, LH], [HL, HH]] layout."""
    _check_even(grid.shape)
    counter.record(grid.shape)
    fwd = _FWD[kernel]
    # Horizontal pass (last axis), then vertical via transpose.
    lo, hi = fwd(grid)
    row = np.concatenate([lo, hi], axis=-1)
    lo2, hi2 = fwd(row.T)
    out = np.concatenate([lo2, hi2], axis=-1).T
    return np.ascontiguousarray(out)


def _idwt2_packed(packed, kernel):
    inv = _INV[kernel]
    h, w = packed.shape
    col = inv(packed.T[..., : h // 2], packed.T[..., h // 2:]).T
    out = inv(col[..., : w // 2], col[..., w // 2:])
    return np.ascontiguousarray(out)


def _split(packed):
    h2, w2 = packed.shape[0] // 2, packed.shape[1] // 2
    return (packed[:h2, :w2], packed[:h2, w2:], packed[h2:, :w2], packed[h2:, w2:])


def dwt53_forward(grid) -> SubbandSet:
    """One reversible 5/3 level on a signed integer grid."""
    a = np.asarray(grid)
    if not np.issubdtype(a.dtype, np.integer):
        raise TypeError("5/3 kernel operates on integer grids")
    packed = _dwt2_packed(a.astype(np.int64), "53")
    ll, lh, hl, hh = _split(packed)
    return SubbandSet(1, ll.copy(), lh.copy(), hl.copy(), hh.copy())


def dwt53_inverse(bands: SubbandSet):
    packed = np.block([[bands.ll, bands.lh], [bands.hl, bands.hh]]).astype(np.int64)
    return _idwt2_packed(packed, "53")


def dwt97_forward(grid) -> SubbandSet:
    """One 9/7 level on a real grid (float64)."""
    packed = _dwt2_packed(np.asarray(grid, dtype=np.float64), "97")
    ll, lh, hl, hh = _split(packed)
    return SubbandSet(1, ll.copy(), lh.copy(), hl.copy(), hh.copy())


def dwt97_inverse(bands: SubbandSet):
    packed = np.block([[bands.ll, bands.lh], [bands.hl, bands.hh]]).astype(np.float64)
    return _idwt2_packed(packed, "97")


# ---------------------------------------------------------------------------
# Dyadic (pyramid) decomposition in packed layout.


def max_levels(shape):
    """Largest N with 2^N dividing both sides (each applied level stays even)."""
    n = 0
    h, w = shape
    while h % 2 == 0 and w % 2 == 0 and h > 1 and w > 1:
        n += 1
        h //= 2
        w //= 2
    return n


def packet_decompose(band, levels, kernel) -> PacketTree:
    """Apply the kernel dyadically `levels` times to one band."""
    a = np.asarray(band)
    h, w = a.shape
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if levels and (h % (1 << levels) or w % (1 << levels)):
        raise DimensionError(
            f"band {h}x{w} not divisible by 2^{levels}; reduce the level count"
        )
    if kernel == "53":
        if not np.issubdtype(a.dtype, np.integer):
            raise TypeError("5/3 kernel operates on integer grids")
        out = a.astype(np.int64, copy=True)
    elif kernel == "97":
        out = a.astype(np.float64, copy=True)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    hh, ww = h, w
    for _ in range(levels):
        out[:hh, :ww] = _dwt2_packed(out[:hh, :ww], kernel)
        hh //= 2
        ww //= 2
    return PacketTree(out, levels, kernel)


def packet_reconstruct(tree: PacketTree):
    """Exact inverse of packet_decompose."""
    out = tree.data.copy()
    h, w = out.shape
    sizes = [(h >> k, w >> k) for k in range(tree.levels)]
    for hh, ww in reversed(sizes):
        out[:hh, :ww] = _idwt2_packed(out[:hh, :ww], tree.kernel)
    return out


def packet_subbands(shape, levels):
    """Subband rectangles of the packed layout, deepest first.

    Yields (name, row_slice, col_slice) with names like "LL3", "LH2", ...;
    levels == 0 yields the whole band as "LL0".
    """
    h, w = shape
    if levels == 0:
        return [("LL0", slice(0, h), slice(0, w))]
    out = [("LL%d" % levels, slice(0, h >> levels), slice(0, w >> levels))]
    for lev in range(levels, 0, -1):
        hh, ww = h >> lev, w >> lev
        out.append(("LH%d" % lev, slice(0, hh), slice(ww, 2 * ww)))
        out.append(("HL%d" % lev, slice(hh, 2 * hh), slice(0, ww)))
        out.append(("HH%d" % lev, slice(hh, 2 * hh), slice(ww, 2 * ww)))
    return out
