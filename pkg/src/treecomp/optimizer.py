"""AdaGrad with row-sparse updates for embedding tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericsError, ShapeError
from .model import SparseRows


@dataclass
class OptimizerState:
    """Running sums of squared gradients, one array per parameter tensor."""

    lr: float = 0.01
    eps: float = 1e-8
    accum: dict = field(default_factory=dict)
    steps: int = 0

    @classmethod
    def for_params(cls, tensors, lr=0.01, eps=1e-8):
        return cls(lr, eps, {k: np.zeros_like(v) for k, v in tensors.items()})


def _validate(params, grads, state):
    for name, g in grads:
        if name not in params:
            raise ShapeError(f"gradient for unknown tensor {name!r}")
        p = params[name]
        if isinstance(g, SparseRows):
            if g.values.shape != (g.rows.shape[0], p.shape[1]):
                raise ShapeError(f"{name}: sparse gradient {g.values.shape} vs table {p.shape}")
            values = g.values
        else:
            if g.shape != p.shape:
                raise ShapeError(f"{name}: gradient {g.shape} vs parameter {p.shape}")
            values = g
        if not np.all(np.isfinite(values)):
            raise NumericsError(f"non-finite gradient for {name!r}")
        state.accum.setdefault(name, np.zeros_like(p))


def adagrad_step(params: dict, grads, state: OptimizerState):
    """Update ``params`` in place: ``G += g*g; theta -= lr * g / (sqrt(G) + eps)``.

    ``grads`` is an iterable of ``(name, grad)`` where ``grad`` is a dense array or a
    :class:`SparseRows`; sparse gradients touch only their rows. Nothing is modified
    if any gradient is malformed or non-finite.
    """
    grads = list(grads.items() if isinstance(grads, dict) else grads)
    _validate(params, grads, state)
    for name, g in grads:
        theta = params[name]
        acc = state.accum[name]
        if isinstance(g, SparseRows):
            rows, values = g
            acc[rows] += values * values
            theta[rows] -= state.lr * values / (np.sqrt(acc[rows]) + state.eps)
        else:
            acc += g * g
            theta -= state.lr * g / (np.sqrt(acc) + state.eps)
    state.steps += 1
    return params, state
