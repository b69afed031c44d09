"""Encode one argument into a fixed-size vector.

Tree modes walk the binary tree bottom-up with a composition cell and return the
root's hidden state. Baseline modes ignore the tree and run a sequential cell over
the leaf words in both directions, returning ``[h_forward_last, h_backward_last]``.
Both arguments of an instance go through the same :class:`ModelParams`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels as default_kernels
from .errors import InvalidArgument, StateError
from .model import Gradients, ModelParams, mode_spec
from .treebank import BinaryTree


@dataclass
class TreeProgram:
    """A binary tree flattened in post-order: node ``j``'s children precede it.

    ``children[j] == (-1, -1)`` for leaves; ``words[j] == -1`` for internal nodes.
    """

    children: np.ndarray
    words: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        if self.children.shape[0] == 0:
            raise InvalidArgument("empty tree")

    def __len__(self):
        return self.children.shape[0]

    @property
    def leaf_words(self):
        return self.words[self.words >= 0]


def compile_tree(tree: BinaryTree, vocab) -> TreeProgram:
    # subtrees may be shared objects, so track indices positionally, not by identity
    done = []
    children, words, tags = [], [], []
    for node in tree.postorder():
        if node.is_leaf:
            children.append((-1, -1))
            words.append(vocab.word_id(node.word))
        else:
            right = done.pop()
            left = done.pop()
            children.append((left, right))
            words.append(-1)
        tags.append(vocab.tag_id(node.tag))
        done.append(len(children) - 1)
    return TreeProgram(
        np.array(children, dtype=np.intp).reshape(-1, 2),
        np.array(words, dtype=np.intp),
        np.array(tags, dtype=np.intp),
    )


def chain_program(word_ids) -> TreeProgram:
    """A left-to-right sequence as a program with one predecessor per step."""
    word_ids = np.asarray(word_ids, dtype=np.intp)
    n = word_ids.shape[0]
    children = (np.arange(n, dtype=np.intp) - 1).reshape(n, 1)
    return TreeProgram(children, word_ids.copy(), np.zeros(n, dtype=np.intp))


@dataclass
class EncodedArgument:
    r: np.ndarray
    mode: str
    programs: list
    traces: Optional[list] = field(default=None, repr=False)


def _run(kern, params, prefix, prog):
    t = params.tensors
    return kern.forward(
        params.spec.cell,
        prog.children,
        prog.words,
        prog.tags,
        t["word_emb"],
        t.get("tag_emb"),
        t[f"{prefix}.W"],
        t[f"{prefix}.U"],
        t[f"{prefix}.b"],
        t.get(f"{prefix}.M"),
    )


def encode_argument(tree, params: ModelParams, mode=None, vocab=None, backend=None) -> EncodedArgument:
    """``tree`` may be a :class:`BinaryTree` (then ``vocab`` is required) or a compiled program."""
    if mode is not None and mode != params.mode:
        raise InvalidArgument(f"parameters were built for {params.mode!r}, not {mode!r}")
    kern = backend or default_kernels
    if isinstance(tree, BinaryTree):
        if vocab is None:
            raise InvalidArgument("a vocabulary is needed to encode a raw tree")
        prog = compile_tree(tree, vocab)
    else:
        prog = tree
    if params.spec.tree:
        trace = _run(kern, params, "cell", prog)
        return EncodedArgument(trace.root_h.copy(), params.mode, [prog], [trace])
    seq = prog.leaf_words
    if seq.shape[0] == 0:
        raise InvalidArgument("argument has no words")
    fwd = chain_program(seq)
    bwd = chain_program(seq[::-1])
    tf = _run(kern, params, "fwd", fwd)
    tb = _run(kern, params, "bwd", bwd)
    r = np.concatenate([tf.root_h, tb.root_h])
    return EncodedArgument(r, params.mode, [fwd, bwd], [tf, tb])


def _back(kern, params, prefix, prog, trace, d_root, grads: Gradients):
    t = params.tensors
    g = grads.dense
    dX, dT = kern.backward(
        params.spec.cell,
        prog.children,
        prog.words,
        prog.tags,
        trace,
        np.ascontiguousarray(d_root, dtype=np.float64),
        t["word_emb"],
        t.get("tag_emb"),
        t[f"{prefix}.W"],
        t[f"{prefix}.U"],
        t[f"{prefix}.b"],
        t.get(f"{prefix}.M"),
        g[f"{prefix}.W"],
        g[f"{prefix}.U"],
        g[f"{prefix}.b"],
        g.get(f"{prefix}.M"),
    )
    leaf = prog.words >= 0
    grads.add_rows("word_emb", prog.words[leaf], dX[leaf])
    if dT is not None:
        grads.add_rows("tag_emb", prog.tags, dT)


def encoder_backward(dr, enc: EncodedArgument, params: ModelParams, grads: Gradients, backend=None):
    """Accumulate d(loss)/d(params) into ``grads`` given the cotangent of ``enc.r``."""
    if enc.traces is None:
        raise StateError("encoded argument carries no forward caches")
    kern = backend or default_kernels
    dr = np.asarray(dr, dtype=np.float64)
    if mode_spec(enc.mode).tree:
        _back(kern, params, "cell", enc.programs[0], enc.traces[0], dr, grads)
        return grads
    d = params.hidden
    _back(kern, params, "fwd", enc.programs[0], enc.traces[0], dr[:d], grads)
    _back(kern, params, "bwd", enc.programs[1], enc.traces[1], dr[d:], grads)
    return grads
