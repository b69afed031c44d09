"""Trainable tensors and their gradient buffers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cells import GATE_ROWS, GRU, LSTM, TAG_GATE_ROWS, CellParams
from .errors import InvalidArgument, ShapeError


@dataclass(frozen=True)
class ModeSpec:
    cell: str
    tree: bool
    tagged: bool


MODES = {
    "tree_lstm": ModeSpec(LSTM, True, False),
    "tree_gru": ModeSpec(GRU, True, False),
    "tag_tree_lstm": ModeSpec(LSTM, True, True),
    "tag_tree_gru": ModeSpec(GRU, True, True),
    "bilstm": ModeSpec(LSTM, False, False),
    "bigru": ModeSpec(GRU, False, False),
}

EMBEDDINGS = ("word_emb", "tag_emb")


def mode_spec(mode) -> ModeSpec:
    try:
        return MODES[mode]
    except KeyError:
        raise InvalidArgument(f"unknown mode {mode!r}; expected one of {sorted(MODES)}") from None


class ModelParams:
    """All trainable tensors of one model, keyed by name.

    Tree modes own ``cell.{W,U,b[,M]}``; bidirectional baselines own a cell per
    direction (``fwd.*``, ``bwd.*``). ``tag_emb`` exists only in tag-enhanced modes.
    """

    def __init__(self, mode, tensors: dict):
        self.mode = mode
        self.spec = mode_spec(mode)
        self.tensors = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in tensors.items()}
        self._check()

    def _check(self):
        need = ["word_emb", "cls.W", "cls.b"]
        prefixes = ["cell"] if self.spec.tree else ["fwd", "bwd"]
        for p in prefixes:
            need += [f"{p}.W", f"{p}.U", f"{p}.b"]
            if self.spec.tagged:
                need.append(f"{p}.M")
        if self.spec.tagged:
            need.append("tag_emb")
        missing = [n for n in need if n not in self.tensors]
        extra = [n for n in self.tensors if n not in need]
        if missing or extra:
            raise ShapeError(f"{self.mode}: missing tensors {missing}, unexpected {extra}")
        for p in prefixes:
            self.cell(p)  # validates gate shapes
        if self.tensors["cls.W"].shape[1] != 2 * self.repr_dim:
            raise ShapeError("classifier width does not match the argument representation")

    @classmethod
    def initialize(cls, mode, word_emb, n_labels, hidden, tag_emb=None, rng=None, scale=0.05):
        spec = mode_spec(mode)
        rng = np.random.default_rng(0) if rng is None else rng
        word_emb = np.array(word_emb, dtype=np.float64)
        word_dim = word_emb.shape[1]
        tensors = {"word_emb": word_emb}
        if spec.tagged:
            if tag_emb is None:
                raise InvalidArgument(f"{mode} needs a tag embedding table")
            tensors["tag_emb"] = np.array(tag_emb, dtype=np.float64)
        tag_dim = tensors["tag_emb"].shape[1] if spec.tagged else 0
        prefixes = ["cell"] if spec.tree else ["fwd", "bwd"]
        n_children = 2 if spec.tree else 1
        for p in prefixes:
            rows = GATE_ROWS[spec.cell] * hidden
            tensors[f"{p}.W"] = rng.uniform(-scale, scale, (rows, word_dim))
            tensors[f"{p}.U"] = rng.uniform(-scale, scale, (rows, n_children * hidden))
            tensors[f"{p}.b"] = np.zeros(rows)
            if spec.tagged:
                tensors[f"{p}.M"] = rng.uniform(-scale, scale, (TAG_GATE_ROWS[spec.cell] * hidden, tag_dim))
        repr_dim = hidden if spec.tree else 2 * hidden
        tensors["cls.W"] = rng.uniform(-scale, scale, (n_labels, 2 * repr_dim))
        tensors["cls.b"] = np.zeros(n_labels)
        return cls(mode, tensors)

    def cell(self, prefix="cell") -> CellParams:
        t = self.tensors
        return CellParams(self.spec.cell, t[f"{prefix}.W"], t[f"{prefix}.U"], t[f"{prefix}.b"], t.get(f"{prefix}.M"))

    @property
    def hidden(self):
        return self.cell("cell" if self.spec.tree else "fwd").d

    @property
    def repr_dim(self):
        return self.hidden if self.spec.tree else 2 * self.hidden

    @property
    def word_dim(self):
        return self.tensors["word_emb"].shape[1]

    @property
    def n_labels(self):
        return self.tensors["cls.b"].shape[0]

    def names(self):
        return list(self.tensors)

    def regularized_names(self, include_embeddings=False):
        return [n for n in self.tensors if include_embeddings or n not in EMBEDDINGS]

    def copy(self):
        return ModelParams(self.mode, {k: v.copy() for k, v in self.tensors.items()})

    def __getitem__(self, name):
        return self.tensors[name]


class SparseRows(NamedTuple):
    rows: np.ndarray
    values: np.ndarray


class Gradients:
    """Gradient buffers: dense for cell/classifier tensors, row-sparse for embeddings.

    Embedding contributions are kept as an ordered list of (rows, values) chunks and
    only summed in :meth:`sparse`, so the reduction order is fixed by insertion order.
    """

    def __init__(self, params: ModelParams):
        self.shapes = {k: v.shape for k, v in params.tensors.items()}
        self.dense = {k: np.zeros_like(v) for k, v in params.tensors.items() if k not in EMBEDDINGS}
        self._chunks = {k: [] for k in params.tensors if k in EMBEDDINGS}

    def add_rows(self, name, rows, values):
        rows = np.asarray(rows, dtype=np.intp)
        if rows.size:
            self._chunks[name].append((rows, np.asarray(values, dtype=np.float64)))

    def sparse(self, name) -> SparseRows:
        chunks = self._chunks[name]
        width = self.shapes[name][1]
        if not chunks:
            return SparseRows(np.zeros(0, dtype=np.intp), np.zeros((0, width)))
        rows = np.concatenate([c[0] for c in chunks])
        vals = np.concatenate([c[1] for c in chunks])
        uniq, inverse = np.unique(rows, return_inverse=True)
        out = np.zeros((uniq.shape[0], width))
        np.add.at(out, inverse, vals)
        return SparseRows(uniq, out)

    def full(self, name):
        """Dense view of any gradient (embeddings scattered into a zero table)."""
        if name in self.dense:
            return self.dense[name]
        out = np.zeros(self.shapes[name])
        rows, vals = self.sparse(name)
        out[rows] = vals
        return out

    def merge(self, other: "Gradients"):
        for k, v in other.dense.items():
            self.dense[k] += v
        for k, chunks in other._chunks.items():
            self._chunks[k].extend(chunks)
        return self

    def scale(self, factor):
        for v in self.dense.values():
            v *= factor
        for k, chunks in self._chunks.items():
            self._chunks[k] = [(r, v * factor) for r, v in chunks]
        return self

    def items(self, densify=()):
        """``(name, grad)`` pairs; embeddings come as :class:`SparseRows` unless densified."""
        for name in self.shapes:
            if name in self.dense:
                yield name, self.dense[name]
            elif name in densify:
                yield name, self.full(name)
            else:
                yield name, self.sparse(name)
