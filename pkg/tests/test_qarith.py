import numpy as np
import pytest
from hypothesis import given, strategies as st

from undervolt.qarith import ACC_MAX, ACC_MIN, QTensor, dequantize, mac_step, quantize, relu_requantize, wrap24

int8 = st.integers(-128, 127)
acc24 = st.integers(ACC_MIN, ACC_MAX)


@pytest.mark.parametrize(
    "x, expected",
    [
        (0.0, 0),
        (15.875, 127),
        (100.0, 127),  # 800 saturates
        (-100.0, -128),
        (0.0625, 0),  # half-way rounds to even
        (0.1875, 2),
    ],
)
def test_quantize_examples(x, expected):
    assert quantize([[x]], 0.125).data[0, 0] == expected


def test_quantize_rejects_bad_input():
    with pytest.raises(ValueError):
        quantize([[np.nan]], 0.1)
    with pytest.raises(ValueError):
        quantize([[np.inf]], 0.1)
    with pytest.raises(ValueError):
        quantize([[1.0]], 0.0)


def test_qtensor_invariants():
    q = QTensor(np.array([[1, -2, 3]]), 0.5)
    assert (q.rows, q.cols) == (1, 3)
    assert q.data.dtype == np.int8
    with pytest.raises(ValueError):
        QTensor(np.array([[200]]), 1.0)
    with pytest.raises(ValueError):
        QTensor(np.array([[1]]), -1.0)


@pytest.mark.parametrize(
    "acc, w, a, expected",
    [(0, 0, 55, 0), (100, 3, -4, 88), (2**23 - 1, 1, 1, -(2**23))],
)
def test_mac_step_examples(acc, w, a, expected):
    assert mac_step(acc, w, a) == expected


@given(acc24, int8, int8)
def test_mac_step_is_modular(acc, w, a):
    assert mac_step(acc, w, a) == ((acc + w * a + 2**23) % 2**24) - 2**23


def test_wrap24_array_matches_scalar():
    xs = np.array([-(2**30), -(2**23) - 1, -1, 0, 2**23, 2**25 + 7])
    assert wrap24(xs).tolist() == [wrap24(int(x)) for x in xs]


@given(st.lists(int8, min_size=1, max_size=20), st.sampled_from([0.01, 0.1, 0.37]))
def test_quantize_idempotent_on_representable(values, scale):
    q = QTensor(np.array([values]), scale)
    assert np.array_equal(quantize(dequantize(q), scale).data, q.data)


@pytest.mark.parametrize(
    "acc, out_scale, acc_scale, expected",
    [(-500, 0.5, 0.5, 0), (0, 0.01, 0.001, 0), (1000, 0.01, 0.001, 100), (10**6, 0.01, 0.001, 127)],
)
def test_relu_requantize_examples(acc, out_scale, acc_scale, expected):
    assert relu_requantize(acc, out_scale, acc_scale) == expected


@given(acc24, acc24)
def test_relu_requantize_monotone(a, b):
    lo, hi = sorted((a, b))
    assert relu_requantize(lo, 0.02, 0.0001) <= relu_requantize(hi, 0.02, 0.0001)
