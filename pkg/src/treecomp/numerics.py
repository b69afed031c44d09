"""Dense float64 kernels and their vector-Jacobian companions.

Every ``foo`` used by the cells has a ``foo_backward`` taking the cotangent of the
output (plus whatever the forward returned) and producing cotangents of the
inputs. Nothing here allocates a tape; callers schedule backward passes by hand.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericsError, ShapeError

DTYPE = np.float64


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=DTYPE)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-d, got shape {arr.shape}")
    return arr


def check_finite(arr, name="array"):
    if not np.all(np.isfinite(arr)):
        raise NumericsError(f"{name} contains NaN or Inf")
    return arr


def affine(W, x, b):
    """``W @ x + b``."""
    W = np.asarray(W, dtype=DTYPE)
    x = as_vector(x, "x")
    b = as_vector(b, "b")
    if W.ndim != 2 or W.shape[1] != x.shape[0] or W.shape[0] != b.shape[0]:
        raise ShapeError(f"affine: W{W.shape} x{x.shape} b{b.shape}")
    return W @ x + b


def affine_backward(dy, W, x):
    """Returns ``(dW, dx, db)`` for ``y = W @ x + b``."""
    dy = as_vector(dy, "dy")
    if dy.shape[0] != W.shape[0]:
        raise ShapeError(f"affine_backward: dy{dy.shape} vs W{W.shape}")
    return np.outer(dy, x), W.T @ dy, dy.copy()


def sigmoid(v):
    """Logistic function, evaluated without overflow for large |v|."""
    v = np.asarray(v, dtype=DTYPE)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid_backward(dy, y):
    """Cotangent of the input given the forward *output* ``y``."""
    return dy * y * (1.0 - y)


def tanh(v):
    return np.tanh(np.asarray(v, dtype=DTYPE))


def tanh_backward(dy, y):
    return dy * (1.0 - y * y)


def hadamard(a, b):
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: {a.shape} vs {b.shape}")
    return a * b


def hadamard_backward(dy, a, b):
    return dy * b, dy * a


def softmax(v):
    v = as_vector(v, "logits")
    if v.shape[0] == 0:
        raise ShapeError("softmax of an empty vector")
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_backward(dy, y):
    """VJP of softmax given its output ``y``: ``y * (dy - <dy, y>)``."""
    return y * (dy - np.dot(dy, y))


def concat(a, b):
    return np.concatenate([as_vector(a, "a"), as_vector(b, "b")])


def concat_backward(dy, p):
    """Split the cotangent of ``concat(a, b)`` where ``len(a) == p``."""
    return dy[:p].copy(), dy[p:].copy()
