import math

import numpy as np
import pytest

from treecomp.cells import (
    CellParams,
    NodeState,
    cell_backward,
    compose,
    init_cell_params,
    seq_step_gru,
    seq_step_lstm,
    tree_gru_compose,
    tree_lstm_compose,
)
from treecomp.errors import ModeError, ShapeError, StateError

SIG1 = 0.7310585786300049
TANH1 = 0.7615941559557649


def ones(kind, n_children=2, tagged=False):
    rows = 4 if kind == "lstm" else 3
    M = np.ones((rows - 1, 1)) if tagged else None
    return CellParams(kind, np.ones((rows, 1)), np.ones((rows, n_children)), np.zeros(rows), M)


def test_tree_lstm_scalar_example():
    left = NodeState(np.array([0.5]), np.array([1.0]))
    right = NodeState(np.array([-0.5]), np.array([-1.0]))
    s = tree_lstm_compose(np.array([1.0]), None, left, right, ones("lstm"))
    for g in ("i", "f", "o"):
        assert s.gates[g][0] == pytest.approx(SIG1, abs=1e-15)
    assert s.gates["u"][0] == pytest.approx(TANH1, abs=1e-15)
    c = SIG1 * TANH1 + SIG1 * (1.0 - 1.0)
    assert s.c[0] == pytest.approx(c, abs=1e-15)
    assert s.c[0] == pytest.approx(0.5567699411459397, abs=1e-15)
    assert s.h[0] == pytest.approx(SIG1 * math.tanh(c), abs=1e-15)
    assert s.h[0] == pytest.approx(0.36960635293570576, abs=1e-15)


def test_tree_gru_scalar_example():
    left = NodeState(np.array([0.5]), None)
    right = NodeState(np.array([-0.5]), None)
    s = tree_gru_compose(np.array([1.0]), None, left, right, ones("gru"))
    assert s.gates["h_cand"][0] == pytest.approx(TANH1, abs=1e-15)
    assert s.h[0] == pytest.approx(SIG1 * TANH1, abs=1e-15)
    assert s.h[0] == pytest.approx(0.5567699411459397, abs=1e-15)


def test_seq_steps_scalar_example():
    s = seq_step_lstm(np.array([1.0]), NodeState(np.array([0.0]), np.array([0.0])), ones("lstm", 1))
    assert s.c[0] == pytest.approx(0.5567699411459397, abs=1e-15)
    assert s.h[0] == pytest.approx(0.36960635293570576, abs=1e-15)
    prev = NodeState(np.array([0.5]), None)
    g = seq_step_gru(np.array([0.0]), prev, ones("gru", 1))
    r = z = 1 / (1 + math.exp(-0.5))
    cand = math.tanh(0.5 * r)
    assert g.h[0] == pytest.approx(z * cand + (1 - z) * 0.5, abs=1e-15)


def test_tag_term_only_in_sigmoid_gates():
    p = ones("lstm", tagged=True)
    zero = NodeState.zero(1)
    s = tree_lstm_compose(np.array([0.0]), np.array([2.0]), zero, zero, p)
    assert s.gates["i"][0] == pytest.approx(1 / (1 + math.exp(-2)), abs=1e-15)
    assert s.gates["u"][0] == 0.0


@pytest.mark.parametrize("kind", ["lstm", "gru"])
def test_zero_tag_matrix_matches_base(kind, rng):
    base = init_cell_params(kind, 3, 4, rng=rng, scale=0.5)
    tagged = CellParams(kind, base.W, base.U, base.b, np.zeros(((3 if kind == "lstm" else 2) * 4, 2)))
    kids = [NodeState(rng.normal(size=4), rng.normal(size=4) if kind == "lstm" else None) for _ in range(2)]
    x = rng.normal(size=3)
    a = compose(x, None, kids, base)
    b = compose(x, rng.normal(size=2), kids, tagged)
    assert np.max(np.abs(a.h - b.h)) <= 1e-15


def test_single_forget_gate(rng):
    # swapping children changes U's contribution but the forget gate multiplies the
    # child memory sum, so with U = 0 the output is symmetric in the children
    p = init_cell_params("lstm", 2, 3, rng=rng, scale=0.5)
    p.U[:] = 0.0
    kids = [NodeState(rng.normal(size=3), rng.normal(size=3)) for _ in range(2)]
    x = rng.normal(size=2)
    a = compose(x, None, kids, p)
    b = compose(x, None, kids[::-1], p)
    assert np.allclose(a.c, b.c, atol=1e-15)
    assert np.allclose(a.c, a.gates["i"] * a.gates["u"] + a.gates["f"] * (kids[0].c + kids[1].c), atol=1e-15)


@pytest.mark.parametrize("kind", ["lstm", "gru"])
def test_gate_ranges(kind, rng):
    p = init_cell_params(kind, 3, 5, tag_dim=2, rng=rng, scale=1.0)
    for _ in range(50):
        kids = [NodeState(rng.uniform(-1, 1, 5), rng.normal(size=5) if kind == "lstm" else None) for _ in range(2)]
        s = compose(rng.normal(size=3) * 3, rng.normal(size=2), kids, p)
        for name, g in s.gates.items():
            if name in ("i", "f", "o", "r", "z"):
                assert np.all((g > 0) & (g < 1))
        if kind == "lstm":
            assert np.all(np.abs(s.h) < 1)


def numeric_grad(f, arr, eps=1e-6):
    out = np.zeros_like(arr)
    for k in range(arr.size):
        orig = arr.flat[k]
        arr.flat[k] = orig + eps
        hi = f()
        arr.flat[k] = orig - eps
        lo = f()
        arr.flat[k] = orig
        out.flat[k] = (hi - lo) / (2 * eps)
    return out


@pytest.mark.parametrize("kind", ["lstm", "gru"])
@pytest.mark.parametrize("n_children", [1, 2])
@pytest.mark.parametrize("tagged", [False, True])
def test_cell_backward_fd(kind, n_children, tagged, rng):
    p = init_cell_params(kind, 3, 4, tag_dim=2 if tagged else None, n_children=n_children, rng=rng, scale=0.5)
    p.b[:] = rng.uniform(-0.5, 0.5, p.b.shape)
    x = rng.normal(size=3)
    t = rng.normal(size=2) if tagged else None
    kids = [NodeState(rng.normal(size=4), rng.normal(size=4) if kind == "lstm" else None) for _ in range(n_children)]
    wh, wc = rng.normal(size=4), rng.normal(size=4)

    def loss():
        s = compose(x, t, kids, p)
        return wh @ s.h + (wc @ s.c if kind == "lstm" else 0.0)

    s = compose(x, t, kids, p)
    g = cell_backward(wh, wc if kind == "lstm" else None, s, p)
    for name, arr in p.tensors().items():
        assert np.allclose(g.params[name], numeric_grad(loss, arr), atol=1e-8), name
    assert np.allclose(g.dx, numeric_grad(loss, x), atol=1e-8)
    if tagged:
        assert np.allclose(g.dt, numeric_grad(loss, t), atol=1e-8)
    for k, ch in enumerate(kids):
        assert np.allclose(g.dh_children[k], numeric_grad(loss, ch.h), atol=1e-8)
        if kind == "lstm":
            assert np.allclose(g.dc_children[k], numeric_grad(loss, ch.c), atol=1e-8)


def test_errors(rng):
    p = init_cell_params("lstm", 3, 4, rng=rng)
    pt = init_cell_params("lstm", 3, 4, tag_dim=2, rng=rng)
    kids = [NodeState.zero(4), NodeState.zero(4)]
    with pytest.raises(ModeError):
        compose(np.zeros(3), np.zeros(2), kids, p)
    with pytest.raises(ModeError):
        compose(np.zeros(3), None, kids, pt)
    with pytest.raises(ShapeError):
        compose(np.zeros(2), None, kids, p)
    with pytest.raises(ShapeError):
        compose(np.zeros(3), None, kids[:1], p)
    with pytest.raises(StateError):
        cell_backward(np.zeros(4), None, NodeState.zero(4), p)
    with pytest.raises(ShapeError):
        CellParams("lstm", np.zeros((4, 3)), np.zeros((4, 2)), np.zeros(3))
