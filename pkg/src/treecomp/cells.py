"""Gated composition cells: Tree-LSTM, Tree-GRU, tag-enhanced variants, sequential steps.

One cell implementation handles any number of predecessors: a binary tree node has
two children, a sequence step has one (the previous position). Gate rows are stacked
in a single matrix per input kind:

    LSTM rows:  [input, forget, output, candidate]      tag rows: [input, forget, output]
    GRU rows:   [reset, update, candidate]              tag rows: [reset, update]

Tag embeddings only feed the sigmoid gates, never the tanh candidate.

The LSTM uses one forget gate shared by all children:
``c = i*u + f*(c_1 + ... + c_k)``. The GRU applies one reset gate to every child and
interpolates against the *sum* of child states: ``h = z*h_cand + (1-z)*(h_1 + ... + h_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numerics as nx
from .errors import ModeError, ShapeError, StateError

LSTM = "lstm"
GRU = "gru"

GATE_ROWS = {LSTM: 4, GRU: 3}
TAG_GATE_ROWS = {LSTM: 3, GRU: 2}


@dataclass
class CellParams:
    kind: str
    W: np.ndarray
    U: np.ndarray
    b: np.ndarray
    M: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in GATE_ROWS:
            raise ValueError(f"unknown cell kind {self.kind!r}")
        rows = GATE_ROWS[self.kind] * self.d
        if self.W.shape[0] != rows or self.U.shape[0] != rows or self.b.shape != (rows,):
            raise ShapeError("gate matrices disagree on the hidden size")
        if self.U.shape[1] % self.d:
            raise ShapeError(f"U has {self.U.shape[1]} columns, not a multiple of d={self.d}")
        if self.M is not None and self.M.shape[0] != TAG_GATE_ROWS[self.kind] * self.d:
            raise ShapeError(f"M has {self.M.shape[0]} rows")

    @property
    def d(self) -> int:
        return self.b.shape[0] // GATE_ROWS[self.kind]

    @property
    def n_children(self) -> int:
        return self.U.shape[1] // self.d

    @property
    def tagged(self) -> bool:
        return self.M is not None

    def tensors(self) -> dict:
        out = {"W": self.W, "U": self.U, "b": self.b}
        if self.M is not None:
            out["M"] = self.M
        return out


def init_cell_params(kind, word_dim, hidden, tag_dim=None, n_children=2, rng=None, scale=0.05):
    """Uniform(-scale, scale) weights, zero biases."""
    rng = np.random.default_rng() if rng is None else rng
    rows = GATE_ROWS[kind] * hidden
    W = rng.uniform(-scale, scale, (rows, word_dim))
    U = rng.uniform(-scale, scale, (rows, n_children * hidden))
    M = None
    if tag_dim is not None:
        M = rng.uniform(-scale, scale, (TAG_GATE_ROWS[kind] * hidden, tag_dim))
    return CellParams(kind, W, U, np.zeros(rows), M)


@dataclass
class NodeState:
    """Output of one cell application plus what backward needs.

    ``c`` is None for GRU states. ``cache`` is None for the zero states that stand
    in for missing children.
    """

    h: np.ndarray
    c: Optional[np.ndarray] = None
    gates: dict = field(default_factory=dict)
    cache: Optional[dict] = None

    @classmethod
    def zero(cls, d, kind=LSTM):
        return cls(np.zeros(d), np.zeros(d) if kind == LSTM else None)


def _inputs(x, t, children, p):
    d = p.d
    if x is None:
        x = np.zeros(p.W.shape[1])
    x = nx.as_vector(x, "x")
    if x.shape[0] != p.W.shape[1]:
        raise ShapeError(f"x has length {x.shape[0]}, expected {p.W.shape[1]}")
    if t is not None and not p.tagged:
        raise ModeError("tag embedding given to a cell without tag matrices")
    if t is None and p.tagged:
        raise ModeError("tag-enhanced cell needs a tag embedding")
    if t is not None:
        t = nx.as_vector(t, "t")
        if t.shape[0] != p.M.shape[1]:
            raise ShapeError(f"t has length {t.shape[0]}, expected {p.M.shape[1]}")
    if len(children) != p.n_children:
        raise ShapeError(f"cell takes {p.n_children} predecessors, got {len(children)}")
    for ch in children:
        if ch.h.shape != (d,):
            raise ShapeError(f"child state has shape {ch.h.shape}, expected ({d},)")
    return x, t


def lstm_compose(x, t, children: Sequence[NodeState], p: CellParams) -> NodeState:
    x, t = _inputs(x, t, children, p)
    d = p.d
    hcat = np.concatenate([ch.h for ch in children])
    csum = children[0].c.copy()
    for ch in children[1:]:
        csum = csum + ch.c
    pre = nx.affine(p.W, x, p.b) + p.U @ hcat
    if t is not None:
        pre[: 3 * d] += p.M @ t
    i = nx.sigmoid(pre[:d])
    f = nx.sigmoid(pre[d : 2 * d])
    o = nx.sigmoid(pre[2 * d : 3 * d])
    u = nx.tanh(pre[3 * d :])
    c = nx.hadamard(i, u) + nx.hadamard(f, csum)
    tc = nx.tanh(c)
    h = nx.hadamard(o, tc)
    gates = {"i": i, "f": f, "o": o, "u": u}
    cache = {"x": x, "t": t, "hcat": hcat, "csum": csum, "tanh_c": tc, "n": len(children)}
    return NodeState(h, c, gates, cache)


def gru_compose(x, t, children: Sequence[NodeState], p: CellParams) -> NodeState:
    x, t = _inputs(x, t, children, p)
    d = p.d
    hcat = np.concatenate([ch.h for ch in children])
    hsum = children[0].h.copy()
    for ch in children[1:]:
        hsum = hsum + ch.h
    base = nx.affine(p.W, x, p.b)
    pre_g = base[: 2 * d] + p.U[: 2 * d] @ hcat
    if t is not None:
        pre_g += p.M @ t
    r = nx.sigmoid(pre_g[:d])
    z = nx.sigmoid(pre_g[d:])
    rh = hcat * np.tile(r, len(children))
    cand = nx.tanh(base[2 * d :] + p.U[2 * d :] @ rh)
    h = nx.hadamard(z, cand) + nx.hadamard(1.0 - z, hsum)
    gates = {"r": r, "z": z, "h_cand": cand}
    cache = {"x": x, "t": t, "hcat": hcat, "hsum": hsum, "rh": rh, "n": len(children)}
    return NodeState(h, None, gates, cache)


def compose(x, t, children, p: CellParams) -> NodeState:
    if p.kind == LSTM:
        return lstm_compose(x, t, children, p)
    return gru_compose(x, t, children, p)


def tree_lstm_compose(x, t, left: NodeState, right: NodeState, p: CellParams) -> NodeState:
    return lstm_compose(x, t, (left, right), p)


def tree_gru_compose(x, t, left: NodeState, right: NodeState, p: CellParams) -> NodeState:
    return gru_compose(x, t, (left, right), p)


def seq_step_lstm(x, prev: NodeState, p: CellParams) -> NodeState:
    return lstm_compose(x, None, (prev,), p)


def seq_step_gru(x, prev: NodeState, p: CellParams) -> NodeState:
    return gru_compose(x, None, (prev,), p)


@dataclass
class CellGradients:
    """Cotangents produced by one backward step.

    ``params`` maps "W"/"U"/"b"/"M" to arrays shaped like the cell's tensors.
    ``dh_children``/``dc_children`` follow the order the children were passed in.
    """

    params: dict
    dx: np.ndarray
    dt: Optional[np.ndarray]
    dh_children: list
    dc_children: list


def _lstm_backward(dh, dc, state, p):
    d = p.d
    cache = state.cache
    g = state.gates
    i, f, o, u = g["i"], g["f"], g["o"], g["u"]
    tc = cache["tanh_c"]
    d_o = dh * tc
    dc = dc + nx.tanh_backward(dh * o, tc)
    dpre = np.concatenate(
        [
            nx.sigmoid_backward(dc * u, i),
            nx.sigmoid_backward(dc * cache["csum"], f),
            nx.sigmoid_backward(d_o, o),
            nx.tanh_backward(dc * i, u),
        ]
    )
    dcsum = dc * f
    dhcat = p.U.T @ dpre
    n = cache["n"]
    return dpre, dpre[: 3 * d], [dhcat[k * d : (k + 1) * d] for k in range(n)], [dcsum.copy() for _ in range(n)]


def _gru_backward(dh, state, p):
    d = p.d
    cache = state.cache
    r, z, cand = state.gates["r"], state.gates["z"], state.gates["h_cand"]
    n = cache["n"]
    hcat = cache["hcat"]
    da_cand = nx.tanh_backward(dh * z, cand)
    da_z = nx.sigmoid_backward(dh * (cand - cache["hsum"]), z)
    dhsum = dh * (1.0 - z)
    drh = p.U[2 * d :].T @ da_cand
    dr = np.zeros(d)
    for k in range(n):
        dr += drh[k * d : (k + 1) * d] * hcat[k * d : (k + 1) * d]
    da_r = nx.sigmoid_backward(dr, r)
    dpre_g = np.concatenate([da_r, da_z])
    dhcat = p.U[: 2 * d].T @ dpre_g
    dh_children = []
    for k in range(n):
        sl = slice(k * d, (k + 1) * d)
        dh_children.append(dhcat[sl] + drh[sl] * r + dhsum)
    dpre = np.concatenate([dpre_g, da_cand])
    return dpre, dpre_g, drh, dh_children


def cell_backward(dh, dc, state: NodeState, p: CellParams) -> CellGradients:
    """Exact VJP of one cell application.

    ``dh``/``dc`` are cotangents of the node's ``h``/``c``; ``dc`` is ignored for GRU
    and may be None (treated as zero) for LSTM.
    """
    if state.cache is None:
        raise StateError("node state has no forward cache")
    dh = nx.as_vector(dh, "dh")
    cache = state.cache
    x, t = cache["x"], cache["t"]
    if p.kind == LSTM:
        dc = np.zeros(p.d) if dc is None else nx.as_vector(dc, "dc")
        dpre, dpre_tag, dh_children, dc_children = _lstm_backward(dh, dc, state, p)
        dU = np.outer(dpre, cache["hcat"])
    else:
        dpre, dpre_tag, drh, dh_children = _gru_backward(dh, state, p)
        dc_children = [None] * cache["n"]
        d = p.d
        dU = np.empty_like(p.U)
        dU[: 2 * d] = np.outer(dpre_tag, cache["hcat"])
        dU[2 * d :] = np.outer(dpre[2 * d :], cache["rh"])
    dW, dx, db = nx.affine_backward(dpre, p.W, x)
    grads = {"W": dW, "U": dU, "b": db}
    dt = None
    if p.tagged:
        grads["M"] = np.outer(dpre_tag, t)
        dt = p.M.T @ dpre_tag
    return CellGradients(grads, dx, dt, dh_children, dc_children)
