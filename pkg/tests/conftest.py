import numpy as np
import pytest

from camra import bench, entropy
from camra.cfa import BayerImage, PHASES


@pytest.fixture(scope="session", autouse=True)
def _warm_numba():
    entropy.warm_up()


@pytest.fixture(scope="session")
def small_corpus():
    """Four 256x256 corpus images; enough for statistical module tests."""
    return bench.generate_corpus(seed=42, count=4, size=256)


def random_mosaic(rng, height=32, width=32, bit_depth=12, phase="RGGB",
                  black_offset=(0, 0, 0)):
    hi = (1 << bit_depth) - 1
    samples = rng.integers(0, hi + 1, size=(height, width)).astype(np.int32)
    return BayerImage(samples, bit_depth=bit_depth, phase=phase,
                      black_offset=black_offset)


def random_mosaics(seed, count, **kw):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        phase = PHASES[i % len(PHASES)]
        bits = (10, 12, 14, 16)[i % 4]
        k = tuple(int(v) for v in rng.integers(0, 300, size=3))
        h = 2 * int(rng.integers(8, 33))
        w = 2 * int(rng.integers(8, 33))
        out.append(random_mosaic(rng, h, w, bits, phase, k))
    return out
