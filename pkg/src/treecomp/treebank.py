"""Penn-Treebank bracketed trees and their normalization to binary form.

Trees come in as bracketed s-expressions, e.g. ``(S (NP (DT the) (NN cat)) (VP (VBD sat)))``.
Before encoding, an argument's trees are joined under a shared ``Root`` node
(multi-sentence arguments), unary chains are collapsed, and every node with more
than two children is right-binarized.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .errors import InvalidArgument, ParseError

ROOT_TAG = "Root"

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


@dataclass(frozen=True)
class ParseTree:
    tag: str
    children: tuple = ()
    word: Optional[str] = None

    def __post_init__(self):
        if not self.tag or any(ch.isspace() or ch in "()" for ch in self.tag):
            raise InvalidArgument(f"invalid tag {self.tag!r}")
        if (self.word is None) == (len(self.children) == 0):
            raise InvalidArgument("a node carries a word iff it has no children")
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def leaves(self) -> list[str]:
        return [node.word for node in _preorder(self) if node.word is not None]

    def __str__(self):
        return serialize(self)


@dataclass(frozen=True)
class BinaryTree:
    tag: str
    left: Optional["BinaryTree"] = None
    right: Optional["BinaryTree"] = None
    word: Optional[str] = None

    def __post_init__(self):
        if (self.left is None) != (self.right is None):
            raise InvalidArgument("binary node needs both children or neither")
        if (self.word is None) == (self.left is None):
            raise InvalidArgument("a node carries a word iff it has no children")

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    @property
    def children(self) -> tuple:
        return () if self.left is None else (self.left, self.right)

    def leaves(self) -> list[str]:
        return [node.word for node in _preorder(self) if node.word is not None]

    def postorder(self) -> Iterator["BinaryTree"]:
        """Yield nodes children-first; iterative, so deep right spines are fine."""
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded or node.is_leaf:
                yield node
            else:
                stack.append((node, True))
                stack.append((node.right, False))
                stack.append((node.left, False))

    def __len__(self):
        return sum(1 for _ in _preorder(self))

    def __str__(self):
        return serialize(self)


def _preorder(tree):
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokens(text: str):
    return [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]


def _read_tree(text, toks, pos, allow_wrapper):
    """Read one bracketed node starting at ``toks[pos]`` (an open paren).

    Returns ``(tree, next_pos)``. An unlabeled node is only legal as the outermost
    wrapper and must hold exactly one subtree.
    """
    open_at = toks[pos][1]
    pos += 1
    if pos >= len(toks):
        raise ParseError("unbalanced parentheses", _byte_offset(text, len(text)))
    tok, at = toks[pos]
    if tok == "(" or tok == ")":
        label = None
    else:
        label = tok
        pos += 1

    children = []
    words = []
    while True:
        if pos >= len(toks):
            raise ParseError("unbalanced parentheses", _byte_offset(text, len(text)))
        tok, at = toks[pos]
        if tok == ")":
            pos += 1
            break
        if tok == "(":
            child, pos = _read_tree(text, toks, pos, allow_wrapper=False)
            children.append(child)
        else:
            words.append((tok, at))
            pos += 1

    if label is None:
        if not allow_wrapper:
            raise ParseError("empty label", _byte_offset(text, open_at))
        if words or len(children) != 1:
            raise ParseError("wrapper must hold exactly one tree", _byte_offset(text, open_at))
        return children[0], pos
    if words and children:
        raise ParseError("node mixes words and subtrees", _byte_offset(text, words[0][1]))
    if len(words) > 1:
        raise ParseError("leaf with multiple words", _byte_offset(text, words[1][1]))
    if words:
        return ParseTree(label, (), words[0][0]), pos
    if not children:
        raise ParseError("node without children or word", _byte_offset(text, open_at))
    return ParseTree(label, tuple(children)), pos


def _parse_at(text, toks, pos):
    tok, at = toks[pos]
    if tok != "(":
        raise ParseError(f"expected '(' but found {tok!r}", _byte_offset(text, at))
    return _read_tree(text, toks, pos, allow_wrapper=True)


def parse_ptb(text: str) -> ParseTree:
    """Parse exactly one bracketed tree; tokens are kept verbatim."""
    toks = _tokens(text)
    if not toks:
        raise ParseError("empty input", 0)
    tree, pos = _parse_at(text, toks, 0)
    if pos != len(toks):
        raise ParseError("trailing input after tree", _byte_offset(text, toks[pos][1]))
    return tree


def iter_ptb(text: str) -> Iterator[ParseTree]:
    """Parse a sequence of bracketed trees (one per line or spread over lines)."""
    toks = _tokens(text)
    pos = 0
    while pos < len(toks):
        tree, pos = _parse_at(text, toks, pos)
        yield tree


def serialize(tree) -> str:
    """Single-line canonical form: ``(TAG child child)`` / ``(TAG word)``."""
    parts = []
    stack = [tree]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        if item.word is not None:
            parts.append(f"({item.tag} {item.word})")
            continue
        parts.append(f"({item.tag}")
        stack.append(")")
        for child in reversed(item.children):
            stack.append(child)
            stack.append(" ")
    return "".join(parts)


def collapse_unary_chains(tree: ParseTree) -> ParseTree:
    """Remove every node with exactly one child.

    A unary chain is replaced by its lowest node, so preterminal tags survive:
    ``(S (NP (NN dog)))`` becomes ``(NN dog)``.
    """
    while len(tree.children) == 1:
        tree = tree.children[0]
    if tree.is_leaf:
        return tree
    children = tuple(collapse_unary_chains(c) for c in tree.children)
    if all(a is b for a, b in zip(children, tree.children)):
        return tree
    return ParseTree(tree.tag, children)


def binarize_right(tree: ParseTree) -> BinaryTree:
    """Right-branching binarization; inserted nodes reuse the parent's tag."""
    if tree.is_leaf:
        return BinaryTree(tree.tag, word=tree.word)
    kids = [binarize_right(c) for c in tree.children]
    if len(kids) < 2:
        raise InvalidArgument(f"unary node {tree.tag!r}; collapse unary chains first")
    node = BinaryTree(tree.tag, kids[-2], kids[-1])
    for kid in reversed(kids[:-2]):
        node = BinaryTree(tree.tag, kid, node)
    return node


def join_multisentence(trees: Sequence[ParseTree]) -> ParseTree:
    if not trees:
        raise InvalidArgument("need at least one tree")
    if len(trees) == 1:
        return trees[0]
    return ParseTree(ROOT_TAG, tuple(trees))


def normalize(trees: Sequence[ParseTree]) -> BinaryTree:
    """The full preprocessing chain for one argument."""
    return binarize_right(collapse_unary_chains(join_multisentence(trees)))


def from_binary(tree: BinaryTree) -> ParseTree:
    """View a binary tree as a general ParseTree (used when re-reading preprocessed data)."""
    if tree.is_leaf:
        return ParseTree(tree.tag, (), tree.word)
    return ParseTree(tree.tag, (from_binary(tree.left), from_binary(tree.right)))


def to_binary(tree: ParseTree) -> BinaryTree:
    """Convert an already-binary ParseTree without restructuring it."""
    if tree.is_leaf:
        return BinaryTree(tree.tag, word=tree.word)
    if len(tree.children) != 2:
        raise InvalidArgument(f"node {tree.tag!r} has {len(tree.children)} children")
    return BinaryTree(tree.tag, to_binary(tree.children[0]), to_binary(tree.children[1]))
