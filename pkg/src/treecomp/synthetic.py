"""Random trees and small synthetic corpora for checks and demos.

Records are plain dicts in the JSONL instance format, so they can be written to
disk and fed through the CLI as well as loaded in-process with
:func:`treecomp.corpus.parse_record`.
"""
from __future__ import annotations

import numpy as np

from .corpus import LEVEL1_LABELS
from .treebank import BinaryTree, ParseTree, serialize

POS_TAGS = ("NN", "VB", "DT", "JJ", "IN", "RB", "PRP", "NNS")
PHRASE_TAGS = ("S", "NP", "VP", "PP", "SBAR", "ADJP", "ADVP", "SINV")


def random_binary_tree(rng, words, leaf_tags, internal_tag):
    """Random binary shape over ``words`` (kept in order).

    ``internal_tag`` is a callable drawing a tag for each internal node.
    """
    leaves = [BinaryTree(t, word=w) for w, t in zip(words, leaf_tags)]

    def build(lo, hi):
        if hi - lo == 1:
            return leaves[lo]
        cut = int(rng.integers(lo + 1, hi))
        return BinaryTree(internal_tag(), build(lo, cut), build(cut, hi))

    return build(0, len(leaves))


def random_parse_tree(rng, max_depth=4, max_children=4, words=("a", "b", "c", "d", "e")):
    """Random n-ary tree, unary chains included; for exercising the normalizers."""

    def build(depth):
        if depth >= max_depth or rng.random() < 0.3:
            return ParseTree(str(rng.choice(POS_TAGS)), (), str(rng.choice(words)))
        k = int(rng.integers(1, max_children + 1))
        return ParseTree(str(rng.choice(PHRASE_TAGS)), tuple(build(depth + 1) for _ in range(k)))

    return build(0)


def _record(arg1, arg2, label, split):
    return {"arg1": serialize(arg1), "arg2": serialize(arg2), "labels": [label], "split": split}


def tag_signal_records(n_train=400, n_test=100, seed=0, n_leaves=6, labels=LEVEL1_LABELS):
    """Classes differ only in their constituent tags.

    Every instance shares one pair of word sequences, tree shapes and leaf POS tags;
    class ``k`` draws each internal-node tag from its own two-tag pool. Labels cycle
    through the classes so each split is balanced.
    """
    rng = np.random.default_rng(seed)
    n_classes = len(labels)
    pools = [PHRASE_TAGS[(2 * k) % len(PHRASE_TAGS) : (2 * k) % len(PHRASE_TAGS) + 2] for k in range(n_classes)]
    vocab = [f"w{i}" for i in range(12)]
    shapes = []
    for _ in range(2):
        words = list(rng.choice(vocab, n_leaves))
        pos = list(rng.choice(POS_TAGS, n_leaves))
        shapes.append(random_binary_tree(rng, words, pos, lambda: "X"))

    def retag(tree, pool):
        if tree.is_leaf:
            return tree
        return BinaryTree(str(rng.choice(pool)), retag(tree.left, pool), retag(tree.right, pool))

    out = []
    for i in range(n_train + n_test):
        k = i % n_classes
        split = "train" if i < n_train else "test"
        out.append(_record(retag(shapes[0], pools[k]), retag(shapes[1], pools[k]), labels[k], split))
    return out


def word_signal_records(n=500, train_fraction=0.8, seed=0, labels=LEVEL1_LABELS, min_len=3, max_len=7):
    """Label fixed by a trigger word in each argument: ``label = 2*i + j``.

    Arg1 carries trigger ``i`` of ("alpha", "beta"), arg2 trigger ``j`` of
    ("gamma", "delta"), each at a random position among filler words, under a random
    tree shape with random tags.
    """
    rng = np.random.default_rng(seed)
    fillers = [f"f{i}" for i in range(20)]
    first, second = ("alpha", "beta"), ("gamma", "delta")

    def argument(trigger):
        length = int(rng.integers(min_len, max_len + 1))
        words = list(rng.choice(fillers, length))
        words[int(rng.integers(0, length))] = trigger
        pos = list(rng.choice(POS_TAGS, length))
        return random_binary_tree(rng, words, pos, lambda: str(rng.choice(PHRASE_TAGS)))

    n_train = int(round(n * train_fraction))
    out = []
    for idx in range(n):
        i, j = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        split = "train" if idx < n_train else "test"
        out.append(_record(argument(first[i]), argument(second[j]), labels[2 * i + j], split))
    return out


GRADCHECK_WORDS = tuple(f"v{i}" for i in range(9))


def gradcheck_records(seed=0, max_leaves=8):
    """One random instance whose arguments have at most ``2*max_leaves - 1`` nodes.

    Words come from :data:`GRADCHECK_WORDS` (nine words, ten with UNK).
    """
    rng = np.random.default_rng(seed)
    vocab = list(GRADCHECK_WORDS)

    def argument():
        k = int(rng.integers(2, max_leaves + 1))
        words = list(rng.choice(vocab, k))
        pos = list(rng.choice(POS_TAGS[:3], k))
        return random_binary_tree(rng, words, pos, lambda: str(rng.choice(PHRASE_TAGS[:3])))

    return [_record(argument(), argument(), LEVEL1_LABELS[int(rng.integers(0, 4))], "train")]
