"""Shared builders for tests."""
import numpy as np

from treecomp.corpus import Vocab
from treecomp.encoder import compile_tree
from treecomp.model import MODES, ModelParams
from treecomp.synthetic import POS_TAGS, PHRASE_TAGS, random_binary_tree

WORDS = tuple(f"w{i}" for i in range(9))
TAGS = POS_TAGS + PHRASE_TAGS


def small_vocab(n_labels=4):
    words = {"<unk>": 0, **{w: i + 1 for i, w in enumerate(WORDS)}}
    tags = {"<unk>": 0, **{t: i + 1 for i, t in enumerate(TAGS)}}
    return Vocab(words, tags, tuple(f"L{i}" for i in range(n_labels)))


def random_tree(rng, n_leaves=None, max_leaves=8):
    n = int(rng.integers(1, max_leaves + 1)) if n_leaves is None else n_leaves
    words = [str(w) for w in rng.choice(WORDS, n)]
    pos = [str(t) for t in rng.choice(POS_TAGS, n)]
    return random_binary_tree(rng, words, pos, lambda: str(rng.choice(PHRASE_TAGS)))


def random_params(mode, rng, vocab=None, hidden=4, word_dim=3, tag_dim=2, scale=0.5):
    vocab = vocab or small_vocab()
    emb = rng.uniform(-scale, scale, (len(vocab.word_to_id), word_dim))
    temb = rng.uniform(-scale, scale, (len(vocab.tag_to_id), tag_dim)) if MODES[mode].tagged else None
    p = ModelParams.initialize(mode, emb, len(vocab.label_names), hidden, temb, rng, scale)
    for name, arr in p.tensors.items():
        if name.endswith(".b"):
            arr[:] = rng.uniform(-scale, scale, arr.shape)
    return p


def program(tree, vocab=None):
    return compile_tree(tree, vocab or small_vocab())
