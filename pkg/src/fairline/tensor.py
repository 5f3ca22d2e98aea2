"""Dense float64 array primitives used by the model and the losses.

Conventions: a Matrix is a 2-D C-contiguous float64 ndarray in batch-rows
layout (each row one sample), a Vector is a 1-D float64 ndarray. Binary
operations require identical shapes; the only broadcasting allowed is
multiplication by a scalar.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyGroupError, ShapeError

Matrix = np.ndarray
Vector = np.ndarray


def matrix(values) -> Matrix:
    """Coerce nested sequences / arrays to a 2-D float64 matrix."""
    a = np.ascontiguousarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    return a


def vector(values) -> Vector:
    """Coerce a sequence / array to a 1-D float64 vector."""
    a = np.ascontiguousarray(values, dtype=np.float64)
    if a.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got ndim={a.ndim}")
    return a


def _check_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul: operands must be 2-D, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return a @ b


def add(a, b):
    _check_same_shape(a, b, "add")
    return a + b


def sub(a, b):
    _check_same_shape(a, b, "sub")
    return a - b


def mul(a, b):
    _check_same_shape(a, b, "mul")
    return a * b


def scale(a, c: float):
    return a * float(c)


# Smallest positive double and the largest double below 1: sigmoid output is
# clamped into this open interval so downstream logs and group means never
# see an exact 0 or 1 even for extreme logits.
_SIG_LO = np.nextafter(0.0, 1.0)
_SIG_HI = np.nextafter(1.0, 0.0)


def sigmoid(t):
    """Numerically stable logistic function, output strictly inside (0, 1).

    Branches on the sign of t so exp() is only ever called on non-positive
    values; large |t| cannot overflow.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return np.clip(out, _SIG_LO, _SIG_HI)


def sigmoid_grad(sig_out):
    """Derivative of sigmoid expressed through its output: s * (1 - s)."""
    return sig_out * (1.0 - sig_out)


def relu(t):
    return np.maximum(t, 0.0)


def relu_grad(t):
    """Subgradient of relu; defined as 0 at t == 0."""
    return (t > 0.0).astype(np.float64)


def vsum(v: Vector) -> float:
    return float(np.sum(v))


def vmean(v: Vector) -> float:
    return float(np.mean(v))


def masked_mean(v: Vector, mask: np.ndarray) -> float:
    """Mean of the entries of v selected by the boolean mask."""
    if v.shape != mask.shape:
        raise ShapeError(f"masked_mean: shape mismatch {v.shape} vs {mask.shape}")
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise EmptyGroupError("masked_mean: mask selects no entries")
    return float(np.sum(v[mask]) / n)
