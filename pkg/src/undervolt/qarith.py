"""Fixed-point quantization and the 24-bit MAC datapath."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACC_BITS = 24
ACC_MIN = -(1 << (ACC_BITS - 1))
ACC_MAX = (1 << (ACC_BITS - 1)) - 1
ACC_MASK = (1 << ACC_BITS) - 1
Q_MIN, Q_MAX = -128, 127


@dataclass(frozen=True)
class QTensor:
    """Signed 8-bit matrix with a per-tensor scale (real value = int * scale)."""

    data: np.ndarray
    scale: float

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"QTensor must be 2-D, got shape {data.shape}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if data.dtype != np.int8:
            if data.size and (data.min() < Q_MIN or data.max() > Q_MAX):
                raise ValueError("QTensor values outside [-128, 127]")
            data = data.astype(np.int8)
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


def quantize(x, scale: float) -> QTensor:
    """Round-to-nearest-even of ``x / scale``, saturated to int8."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if not np.all(np.isfinite(x)):
        raise ValueError("quantize: non-finite input values")
    q = np.clip(np.rint(x / scale), Q_MIN, Q_MAX).astype(np.int8)
    return QTensor(q, float(scale))


def dequantize(q: QTensor) -> np.ndarray:
    return q.data.astype(np.float64) * q.scale


def wrap24(x):
    """Two's-complement wraparound into the signed 24-bit range.

    Works on Python ints and on integer numpy arrays.
    """
    if isinstance(x, np.ndarray):
        x = x.astype(np.int64)
        return ((x - ACC_MIN) & ACC_MASK) + ACC_MIN
    return ((int(x) - ACC_MIN) & ACC_MASK) + ACC_MIN


def mac_step(acc: int, w: int, a: int) -> int:
    return wrap24(acc + w * a)


def relu_requantize(acc, out_scale: float, acc_scale: float):
    """ReLU then requantize an accumulator value (or array) to [0, 127]."""
    if not (out_scale > 0 and acc_scale > 0):
        raise ValueError("scales must be positive")
    real = np.maximum(np.asarray(acc, dtype=np.int64), 0) * acc_scale
    q = np.clip(np.rint(real / out_scale), 0, Q_MAX).astype(np.int8)
    return int(q) if q.ndim == 0 else q


def to_bits(x: int) -> int:
    """Raw 24-bit register pattern of a signed accumulator value."""
    return int(x) & ACC_MASK


def from_bits(bits: int) -> int:
    bits &= ACC_MASK
    return bits - (1 << ACC_BITS) if bits & (1 << (ACC_BITS - 1)) else bits
