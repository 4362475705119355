"""Uniform midtread scalar quantization for the lossy subband branches."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantizationSpec:
    """Per-branch step sizes: lowpass, chroma-sum, detail-diff, highpass.

    Rate is controlled purely by sweeping these steps; there is no
    post-compression rate allocator.  The chroma branches use the same step
    as luma by default (multiplier 1.0, no visual weighting).
    """

    step_ll: float
    step_sum: float
    step_diff: float
    step_hh: float

    def __post_init__(self):
        for name, v in self.as_dict().items():
            if v <= 0:
                raise ValueError(f"step {name} must be > 0, got {v}")

    @classmethod
    def uniform(cls, step):
        return cls(step, step, step, step)

    def as_dict(self):
        return {"ll": self.step_ll, "sum": self.step_sum,
                "diff": self.step_diff, "hh": self.step_hh}

    def for_branch(self, branch):
        return self.as_dict()[branch]


def quantize(coefs, step):
    """Midtread: q = round(c / step), ties away from zero."""
    if step <= 0:
        raise ValueError(f"quantizer step must be > 0, got {step}")
    c = np.asarray(coefs, dtype=np.float64) / step
    q = np.sign(c) * np.floor(np.abs(c) + 0.5)
    return q.astype(np.int64)


def dequantize(q, step):
    if step <= 0:
        raise ValueError(f"quantizer step must be > 0, got {step}")
    return np.asarray(q, dtype=np.float64) * step
