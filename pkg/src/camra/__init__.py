"""Compression for Bayer CFA raw sensor images.

Lossless and lossy wavelet coding built around one observation: the level-1
detail subbands of a mosaicked image share a lowpass chroma component and
are therefore highly correlated.  Decorrelate them and they compress like
ordinary luma detail.  A camera-pipeline-aware mode (camra) additionally
moves quantization into the display domain.
"""

from .cfa import BayerImage, ColorImage, DimensionError
from .codec import (decode, encode_camra, encode_lossless, encode_lossy_a,
                    encode_lossy_b)
from .container import CompressedStream, FormatError, StreamHeader, parse_stream
from .pipeline import PipelineParams
from .quantize import QuantizationSpec

__version__ = "0.1.0"

__all__ = [
    "BayerImage", "ColorImage", "CompressedStream", "DimensionError",
    "FormatError", "PipelineParams", "QuantizationSpec", "StreamHeader",
    "decode", "encode_camra", "encode_lossless", "encode_lossy_a",
    "encode_lossy_b", "parse_stream", "__version__",
]
