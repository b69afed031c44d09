"""Relation distribution over an argument pair, and the training objective."""
from __future__ import annotations

import math

import numpy as np

from . import numerics as nx
from .errors import InvalidArgument, ShapeError


def logits(r1, r2, W, b):
    x = nx.concat(r1, r2)
    if W.shape[1] != x.shape[0]:
        raise ShapeError(f"classifier expects {W.shape[1]} inputs, got {x.shape[0]}")
    return nx.affine(W, x, b)


def predict(r1, r2, W, b):
    """``softmax(W [r1, r2] + b)``."""
    return nx.softmax(logits(r1, r2, W, b))


def argmax(probs):
    """Index of the largest probability; ties go to the lowest index."""
    return int(np.argmax(probs))


def cross_entropy(probs, gold):
    if not 0 <= gold < probs.shape[0]:
        raise InvalidArgument(f"gold label {gold} outside [0, {probs.shape[0]})")
    return -math.log(probs[gold])


def classifier_backward(probs, gold, r1, r2, W):
    """Gradients of ``cross_entropy(predict(r1, r2, W, b), gold)``.

    Returns ``(dW, db, dr1, dr2)``.
    """
    dz = probs.copy()
    dz[gold] -= 1.0
    dW, dx, db = nx.affine_backward(dz, W, nx.concat(r1, r2))
    dr1, dr2 = nx.concat_backward(dx, r1.shape[0])
    return dW, db, dr1, dr2


def l2_penalty(tensors, lam):
    """``(lam / 2) * sum of squared entries``."""
    total = 0.0
    for t in tensors:
        total += float(np.sum(t * t))
    return 0.5 * lam * total


def objective(losses, tensors, lam):
    """Mean cross-entropy plus the L2 term over ``tensors``."""
    if len(losses) == 0:
        raise InvalidArgument("objective over an empty batch")
    return float(sum(losses)) / len(losses) + l2_penalty(tensors, lam)
