import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camra.quantize import QuantizationSpec, dequantize, quantize


def test_unit_step_examples():
    assert quantize(np.array([0.4]), 1.0)[0] == 0
    assert quantize(np.array([0.6]), 1.0)[0] == 1
    assert quantize(np.array([-0.6]), 1.0)[0] == -1


def test_ties_away_from_zero():
    assert quantize(np.array([0.5]), 1.0)[0] == 1
    assert quantize(np.array([-0.5]), 1.0)[0] == -1


def test_exact_multiples_reconstruct_exactly():
    c = np.arange(-12, 13) * 0.75
    q = quantize(c, 0.75)
    assert np.array_equal(dequantize(q, 0.75), c)


def test_uniform_noise_statistics():
    rng = np.random.default_rng(42)
    c = rng.uniform(-100, 100, size=1_000_000)
    err = np.abs(c - dequantize(quantize(c, 2.0), 2.0))
    assert np.mean(err) == pytest.approx(0.5, rel=0.05)


@given(st.floats(-1e6, 1e6), st.floats(0.01, 1000))
@settings(max_examples=200, deadline=None)
def test_error_bound(c, step):
    err = abs(c - dequantize(quantize(np.array([c]), step), step)[0])
    assert err <= step / 2 + 1e-9 * abs(c)


@given(st.lists(st.floats(-1e5, 1e5), min_size=2, max_size=20))
@settings(max_examples=100, deadline=None)
def test_monotone(values):
    c = np.sort(np.array(values))
    q = quantize(c, 3.0)
    assert np.all(np.diff(q) >= 0)


def test_invalid_step():
    with pytest.raises(ValueError):
        quantize(np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        dequantize(np.array([1]), -2.0)


def test_spec_validation_and_lookup():
    spec = QuantizationSpec.uniform(4.0)
    assert spec.for_branch("ll") == 4.0
    assert spec.as_dict() == {"ll": 4.0, "sum": 4.0, "diff": 4.0, "hh": 4.0}
    with pytest.raises(ValueError):
        QuantizationSpec(1.0, -1.0, 1.0, 1.0)
