"""Pure-Python whole-program kernels, built on the per-node cells.

A *program* is a topologically ordered node list: ``children[j]`` holds the indices
of node ``j``'s predecessors (``-1`` for a zero state), ``words[j]`` its word row
(``-1`` for a zero input), ``tags[j]`` its tag row. The last node is the root.
Binary trees use two predecessor slots, sequences one.
"""
import numpy as np

from .cells import LSTM, CellParams, NodeState, cell_backward, compose

BACKEND = "python"


class Trace:
    def __init__(self, states):
        self.states = states

    @property
    def root_h(self):
        return self.states[-1].h

    def hidden(self):
        return np.array([s.h for s in self.states])


def forward(kind, children, words, tags, E, T, W, U, b, M=None):
    p = CellParams(kind, W, U, b, M)
    zero = NodeState.zero(p.d, kind)
    states = []
    for j in range(children.shape[0]):
        kids = [zero if k < 0 else states[k] for k in children[j]]
        x = E[words[j]] if words[j] >= 0 else None
        t = T[tags[j]] if M is not None else None
        states.append(compose(x, t, kids, p))
    return Trace(states)


def backward(kind, children, words, tags, trace, d_root, E, T, W, U, b, M, gW, gU, gb, gM=None):
    """Accumulate parameter gradients in place; return per-node (dX, dT)."""
    p = CellParams(kind, W, U, b, M)
    n = children.shape[0]
    d = p.d
    DH = np.zeros((n, d))
    DC = np.zeros((n, d))
    DH[n - 1] = d_root
    dX = np.zeros((n, W.shape[1]))
    dT = np.zeros((n, M.shape[1])) if M is not None else None
    for j in range(n - 1, -1, -1):
        g = cell_backward(DH[j], DC[j] if kind == LSTM else None, trace.states[j], p)
        gW += g.params["W"]
        gU += g.params["U"]
        gb += g.params["b"]
        if M is not None:
            gM += g.params["M"]
            dT[j] = g.dt
        if words[j] >= 0:
            dX[j] = g.dx
        for slot, k in enumerate(children[j]):
            if k < 0:
                continue
            DH[k] += g.dh_children[slot]
            if kind == LSTM:
                DC[k] += g.dc_children[slot]
    return dX, dT
