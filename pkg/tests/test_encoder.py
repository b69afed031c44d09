import numpy as np
import pytest

from treecomp.encoder import chain_program, compile_tree, encode_argument, encoder_backward
from treecomp.errors import InvalidArgument, StateError
from treecomp.model import MODES, Gradients, ModelParams
from treecomp.treebank import BinaryTree

from helpers import program, random_params, random_tree, small_vocab

TREE_MODES = ("tree_lstm", "tree_gru", "tag_tree_lstm", "tag_tree_gru")


def leaf(word, tag="NN"):
    return BinaryTree(tag, word=word)


@pytest.mark.parametrize("mode", sorted(MODES))
def test_zero_parameters_give_zero(mode, rng):
    p = random_params(mode, rng)
    for arr in p.tensors.values():
        arr[:] = 0.0
    r = encode_argument(program(random_tree(rng)), p).r
    assert r.shape == (p.repr_dim,)
    assert np.all(r == 0.0)


def test_two_leaf_tree_matches_hand_composition(rng):
    from treecomp.cells import NodeState, compose

    vocab = small_vocab()
    p = random_params("tag_tree_lstm", rng, vocab)
    tree = BinaryTree("NP", leaf("w1", "DT"), leaf("w2", "NN"))
    cell = p.cell()
    E, T = p["word_emb"], p["tag_emb"]
    z = NodeState.zero(p.hidden)
    left = compose(E[vocab.word_id("w1")], T[vocab.tag_id("DT")], (z, z), cell)
    right = compose(E[vocab.word_id("w2")], T[vocab.tag_id("NN")], (z, z), cell)
    root = compose(np.zeros(p.word_dim), T[vocab.tag_id("NP")], (left, right), cell)
    assert np.allclose(encode_argument(tree, p, vocab=vocab).r, root.h, atol=1e-15)


@pytest.mark.parametrize("mode", TREE_MODES)
def test_tree_modes_see_structure(mode, rng):
    vocab = small_vocab()
    p = random_params(mode, rng, vocab)
    a = BinaryTree("S", BinaryTree("NP", leaf("w1"), leaf("w2")), leaf("w3"))
    b = BinaryTree("S", leaf("w1"), BinaryTree("NP", leaf("w2"), leaf("w3")))
    assert not np.allclose(encode_argument(a, p, vocab=vocab).r, encode_argument(b, p, vocab=vocab).r)


@pytest.mark.parametrize("mode", ["bilstm", "bigru"])
def test_baselines_ignore_structure(mode, rng):
    vocab = small_vocab()
    p = random_params(mode, rng, vocab)
    a = BinaryTree("S", BinaryTree("NP", leaf("w1"), leaf("w2")), leaf("w3"))
    b = BinaryTree("VP", leaf("w1", "JJ"), BinaryTree("PP", leaf("w2", "IN"), leaf("w3")))
    assert np.array_equal(encode_argument(a, p, vocab=vocab).r, encode_argument(b, p, vocab=vocab).r)
    c = BinaryTree("S", leaf("w3"), BinaryTree("NP", leaf("w2"), leaf("w1")))
    assert not np.allclose(encode_argument(a, p, vocab=vocab).r, encode_argument(c, p, vocab=vocab).r)


@pytest.mark.parametrize("mode", sorted(MODES))
def test_encoder_gradient_fd(mode, rng):
    vocab = small_vocab()
    p = random_params(mode, rng, vocab)
    tree = BinaryTree("S", BinaryTree("NP", leaf("w1"), leaf("w1")), leaf("w4"))
    prog = compile_tree(tree, vocab)
    w = rng.normal(size=p.repr_dim)
    enc = encode_argument(prog, p)
    g = Gradients(p)
    encoder_backward(w, enc, p, g)
    for name, arr in p.tensors.items():
        if name.startswith("cls"):
            continue
        analytic = g.full(name)
        for k in rng.choice(arr.size, min(arr.size, 25), replace=False):
            orig = arr.flat[k]
            arr.flat[k] = orig + 1e-6
            hi = w @ encode_argument(prog, p).r
            arr.flat[k] = orig - 1e-6
            lo = w @ encode_argument(prog, p).r
            arr.flat[k] = orig
            assert analytic.flat[k] == pytest.approx((hi - lo) / 2e-6, abs=1e-8), (name, k)


def test_shared_rows_sum(rng):
    # a word used twice receives the sum of both leaves' contributions
    vocab = small_vocab()
    p = random_params("tree_lstm", rng, vocab)
    prog = compile_tree(BinaryTree("S", leaf("w1"), leaf("w1")), vocab)
    enc = encode_argument(prog, p)
    g = Gradients(p)
    encoder_backward(np.ones(p.hidden), enc, p, g)
    rows, vals = g.sparse("word_emb")
    assert list(rows) == [vocab.word_id("w1")]
    chunks = g._chunks["word_emb"][0][1]
    assert np.allclose(vals[0], chunks[0] + chunks[1], atol=0)


def test_deterministic(rng):
    p = random_params("tag_tree_gru", rng)
    prog = program(random_tree(rng))
    assert np.array_equal(encode_argument(prog, p).r, encode_argument(prog, p).r)


def test_unknown_word_maps_to_unk(rng):
    vocab = small_vocab()
    prog = compile_tree(BinaryTree("S", leaf("W1"), leaf("zebra")), vocab)
    assert list(prog.leaf_words) == [vocab.word_id("w1"), 0]


def test_shared_subtree_compiles(rng):
    sub = BinaryTree("NP", leaf("w1"), leaf("w2"))
    prog = compile_tree(BinaryTree("S", sub, sub), small_vocab())
    assert prog.children.tolist() == [[-1, -1], [-1, -1], [0, 1], [-1, -1], [-1, -1], [3, 4], [2, 5]]


def test_chain_program():
    prog = chain_program([3, 1, 2])
    assert prog.children.tolist() == [[-1], [0], [1]]
    with pytest.raises(InvalidArgument):
        chain_program([])


def test_errors(rng):
    p = random_params("tree_lstm", rng)
    with pytest.raises(InvalidArgument):
        encode_argument(leaf("w1"), p)
    with pytest.raises(InvalidArgument):
        encode_argument(leaf("w1"), p, mode="tree_gru", vocab=small_vocab())
    enc = encode_argument(leaf("w1"), p, vocab=small_vocab())
    enc.traces = None
    with pytest.raises(StateError):
        encoder_backward(np.zeros(p.hidden), enc, p, Gradients(p))
    with pytest.raises(InvalidArgument):
        ModelParams.initialize("tag_tree_lstm", np.zeros((3, 2)), 4, 2)
    with pytest.raises(InvalidArgument):
        ModelParams.initialize("cnn", np.zeros((3, 2)), 4, 2)
