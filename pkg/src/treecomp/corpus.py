"""Instances, vocabularies and pre-trained word vectors.

Instance files are JSONL, one relation per line::

    {"arg1": "(S ...)", "arg2": ["(S ...)", "(S ...)"], "labels": ["Expansion"], "split": "train"}

Each argument is a bracketed tree or a list of them (one per sentence).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, IoError, ParseError
from .treebank import BinaryTree, iter_ptb, normalize

LEVEL1_LABELS = ("Temporal", "Contingency", "Comparison", "Expansion")

# The 11 second-level types left after dropping the five rare ones.
LEVEL2_LABELS = (
    "Temporal.Asynchronous",
    "Temporal.Synchrony",
    "Contingency.Cause",
    "Contingency.Pragmatic cause",
    "Comparison.Contrast",
    "Comparison.Concession",
    "Expansion.Conjunction",
    "Expansion.Instantiation",
    "Expansion.Restatement",
    "Expansion.Alternative",
    "Expansion.List",
)

SPLITS = ("train", "dev", "test")
UNK = "<unk>"


def label_set(level):
    if level == 1:
        return LEVEL1_LABELS
    if level == 2:
        return LEVEL2_LABELS
    raise ValueError(f"level must be 1 or 2, got {level!r}")


def _label_index(label_names):
    index = {name: i for i, name in enumerate(label_names)}
    # second-level types may also be given without their class prefix
    for i, name in enumerate(label_names):
        if "." in name:
            index.setdefault(name.split(".", 1)[1], i)
    return index


@dataclass(frozen=True)
class Instance:
    arg1_tree: BinaryTree
    arg2_tree: BinaryTree
    labels: tuple
    split: str
    uid: Optional[str] = None

    def __post_init__(self):
        if not self.labels:
            raise DataError("instance without labels")
        if self.split not in SPLITS:
            raise DataError(f"unknown split {self.split!r}")


def parse_argument(value, lineno, field):
    texts = [value] if isinstance(value, str) else value
    if not isinstance(texts, list) or not texts or not all(isinstance(t, str) for t in texts):
        raise DataError(f"line {lineno}: {field} must be a tree string or a non-empty list of them")
    trees = []
    try:
        for text in texts:
            trees.extend(iter_ptb(text))
    except ParseError as exc:
        raise DataError(f"line {lineno}: {field}: {exc}") from exc
    if not trees:
        raise DataError(f"line {lineno}: {field} holds no tree")
    return normalize(trees)


def parse_record(record, lineno, label_names):
    index = _label_index(label_names)
    if not isinstance(record, dict):
        raise DataError(f"line {lineno}: expected a JSON object")
    for key in ("arg1", "arg2", "labels"):
        if key not in record:
            raise DataError(f"line {lineno}: missing field {key!r}")
    labels = record["labels"]
    if not isinstance(labels, list) or not labels:
        raise DataError(f"line {lineno}: empty labels")
    ids = []
    for name in labels:
        if name not in index:
            raise DataError(f"line {lineno}: unknown label {name!r}")
        if index[name] not in ids:
            ids.append(index[name])
    split = record.get("split", "train")
    if split not in SPLITS:
        raise DataError(f"line {lineno}: unknown split {split!r}")
    return Instance(
        parse_argument(record["arg1"], lineno, "arg1"),
        parse_argument(record["arg2"], lineno, "arg2"),
        tuple(sorted(ids)),
        split,
        record.get("id"),
    )


def load_instances(path, level=1, label_names: Optional[Sequence[str]] = None) -> list:
    """Read a JSONL instance file; every argument is normalized to a binary tree."""
    names = tuple(label_names) if label_names is not None else label_set(level)
    out = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            out.append(parse_record(record, lineno, names))
    return out


def split_instances(instances, split):
    return [inst for inst in instances if inst.split == split]


def expand_multilabel(instances: Iterable[Instance]) -> list:
    """One single-label copy per gold label for training instances; others untouched."""
    out = []
    for inst in instances:
        if inst.split != "train" or len(inst.labels) == 1:
            out.append(inst)
        else:
            out.extend(replace(inst, labels=(label,)) for label in inst.labels)
    return out


@dataclass
class Vocab:
    word_to_id: dict
    tag_to_id: dict
    label_names: tuple
    unk_id: int = 0
    unk_tag_id: int = 0

    def word_id(self, word):
        return self.word_to_id.get(word.lower(), self.unk_id)

    def tag_id(self, tag):
        return self.tag_to_id.get(tag, self.unk_tag_id)

    def to_json(self):
        return {
            "words": list(self.word_to_id),
            "tags": list(self.tag_to_id),
            "labels": list(self.label_names),
            "unk_id": self.unk_id,
            "unk_tag_id": self.unk_tag_id,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(
                {w: i for i, w in enumerate(obj["words"])},
                {t: i for i, t in enumerate(obj["tags"])},
                tuple(obj["labels"]),
                int(obj["unk_id"]),
                int(obj["unk_tag_id"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed vocabulary: {exc}") from exc

    def digest(self):
        blob = json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        try:
            return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read vocabulary {path}: {exc}") from exc


@dataclass
class EmbeddingTable:
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] == 0:
            raise DataError(f"embedding matrix must be |V| x dim with dim > 0, got {self.matrix.shape}")

    @property
    def dim(self):
        return self.matrix.shape[1]

    def __len__(self):
        return self.matrix.shape[0]


TagEmbeddingTable = EmbeddingTable


def load_glove(path, keep: Optional[set] = None) -> dict:
    """Read GloVe text vectors. With ``keep`` given, other tokens are skipped."""
    vectors = {}
    dim = None
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read embeddings {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            token, fields = parts[0], parts[1:]
            if dim is None:
                dim = len(fields)
                if dim == 0:
                    raise DataError(f"{path}:{lineno}: no vector values")
            elif len(fields) != dim:
                raise DataError(f"{path}:{lineno}: expected {dim} values, found {len(fields)}")
            if token in vectors or (keep is not None and token not in keep):
                continue
            try:
                vectors[token] = np.array([float(v) for v in fields], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric value") from exc
    return vectors


def glove_dim(path):
    """Vector length from the first non-empty line; None for an empty file."""
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if parts:
                    return len(parts) - 1
    except OSError as exc:
        raise IoError(f"cannot read embeddings {path}: {exc}") from exc
    return None


def build_vocab(
    instances,
    embeddings_path=None,
    word_dim=50,
    tag_dim=50,
    rng=None,
    label_names=LEVEL1_LABELS,
    init_scale=0.05,
):
    """Vocabulary from training-split trees plus initial embedding tables.

    Words are lowercased. Rows found in the GloVe file are copied; all other rows
    (including UNK) are drawn from U(-init_scale, init_scale).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    words = {UNK: 0}
    tags = {UNK: 0}
    for inst in instances:
        if inst.split != "train":
            continue
        for tree in (inst.arg1_tree, inst.arg2_tree):
            for node in tree.postorder():
                tags.setdefault(node.tag, len(tags))
                if node.word is not None:
                    words.setdefault(node.word.lower(), len(words))
    vocab = Vocab(words, tags, tuple(label_names))

    word_matrix = rng.uniform(-init_scale, init_scale, (len(words), word_dim))
    tag_matrix = rng.uniform(-init_scale, init_scale, (len(tags), tag_dim))
    if embeddings_path is not None:
        file_dim = glove_dim(embeddings_path)
        if file_dim is not None and file_dim != word_dim:
            raise DataError(f"embedding file has {file_dim}-dim vectors, configured word_dim is {word_dim}")
        pretrained = load_glove(embeddings_path, keep=set(words))
        for token, vec in pretrained.items():
            if token != UNK:
                word_matrix[words[token]] = vec
    return vocab, EmbeddingTable(word_matrix), EmbeddingTable(tag_matrix)
