"""Mosaic file I/O: binary PGM (P5) plus a JSON metadata sidecar.

PGM carries only the sample grid; CFA phase, black offsets, bit depth and
the pipeline parameters travel in a sidecar with keys:

    cfa_pattern   "RGGB" | "GRBG" | "GBRG" | "BGGR"
    black_offset  [r, g, b] integers
    bit_depth     integer (8..16)
    color_matrix  9 floats, row-major (optional)
    illuminant    [r, g, b] floats (optional)
    gamma         "srgb" | "identity" (optional)
"""

from __future__ import annotations

import json

import numpy as np

from .cfa import BayerImage
from .pipeline import PipelineParams


class PgmFormatError(ValueError):
    pass


class MetadataError(ValueError):
    pass


def write_pgm(path, image: BayerImage):
    """Write samples as canonical binary PGM (big-endian u16 per convention)."""
    maxval = (1 << image.bit_depth) - 1
    with open(path, "wb") as f:
        f.write(f"P5\n{image.width} {image.height}\n{maxval}\n".encode("ascii"))
        f.write(image.samples.astype(">u2").tobytes())


def _read_tokens(f, n):
    """Next n whitespace-delimited tokens, skipping '#' comments."""
    tokens = []
    while len(tokens) < n:
        line = f.readline()
        if not line:
            raise PgmFormatError("unexpected end of PGM header")
        hash_pos = line.find(b"#")
        if hash_pos >= 0:
            line = line[:hash_pos]
        tokens.extend(line.split())
    return tokens[:n]


def read_pgm(path):
    """Read a binary PGM; returns (samples int32, maxval)."""
    with open(path, "rb") as f:
        magic = f.readline().split()
        if not magic or magic[0] != b"P5":
            raise PgmFormatError(f"{path}: not a binary PGM (P5)")
        rest = magic[1:]
        need = 3 - len(rest)
        tokens = rest + (_read_tokens(f, need) if need > 0 else [])
        try:
            width, height, maxval = (int(t) for t in tokens)
        except ValueError as e:
            raise PgmFormatError(f"{path}: bad PGM header") from e
        if width <= 0 or height <= 0 or not 0 < maxval < 65536:
            raise PgmFormatError(f"{path}: bad PGM dimensions or maxval")
        dtype = ">u2" if maxval > 255 else np.uint8
        count = width * height
        data = np.frombuffer(f.read(), dtype=dtype, count=-1)
        if data.size < count:
            raise PgmFormatError(f"{path}: truncated PGM payload")
        return data[:count].reshape(height, width).astype(np.int32), maxval


def read_metadata(path):
    """Parse the sidecar; returns (dict, PipelineParams or None)."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as e:
            raise MetadataError(f"{path}: invalid metadata: {e}") from e
    if not isinstance(meta, dict):
        raise MetadataError(f"{path}: metadata must be a JSON object")
    phase = meta.get("cfa_pattern", "RGGB")
    offsets = meta.get("black_offset", [0, 0, 0])
    depth = meta.get("bit_depth")
    if depth is None:
        raise MetadataError(f"{path}: metadata lacks bit_depth")
    try:
        depth = int(depth)
        offsets = tuple(int(v) for v in offsets)
    except (TypeError, ValueError) as e:
        raise MetadataError(f"{path}: bad black_offset or bit_depth") from e
    if len(offsets) != 3:
        raise MetadataError(f"{path}: black_offset needs three entries")

    params = None
    if any(k in meta for k in ("color_matrix", "illuminant", "gamma")):
        cm = meta.get("color_matrix", [1, 0, 0, 0, 1, 0, 0, 0, 1])
        if len(cm) != 9:
            raise MetadataError(f"{path}: color_matrix needs nine entries")
        try:
            params = PipelineParams(
                color_matrix=np.array(cm, dtype=np.float64).reshape(3, 3),
                illuminant=tuple(meta.get("illuminant", (1.0, 1.0, 1.0))),
                gamma=meta.get("gamma", "srgb"))
        except ValueError as e:
            raise MetadataError(f"{path}: {e}") from e
    return {"cfa_pattern": phase, "black_offset": offsets,
            "bit_depth": depth}, params


def write_metadata(path, image: BayerImage, params: PipelineParams | None = None):
    meta = {"cfa_pattern": image.phase,
            "black_offset": list(image.black_offset),
            "bit_depth": image.bit_depth}
    if params is not None:
        meta["color_matrix"] = [float(v) for v in params.color_matrix.ravel()]
        meta["illuminant"] = list(params.illuminant)
        meta["gamma"] = params.gamma
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def load_bayer(pgm_path, meta_path):
    samples, maxval = read_pgm(pgm_path)
    meta, params = read_metadata(meta_path)
    if maxval >= (1 << meta["bit_depth"]):
        raise MetadataError(
            f"PGM maxval {maxval} exceeds declared bit depth {meta['bit_depth']}")
    image = BayerImage(samples, bit_depth=meta["bit_depth"],
                       phase=meta["cfa_pattern"],
                       black_offset=meta["black_offset"])
    return image, params
