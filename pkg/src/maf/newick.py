"""Newick reading and writing for rooted binary trees with labelled leaves.

Only the topological subset is supported: leaf labels made of
``[A-Za-z0-9_.-]``, optional ``:length`` suffixes (thrown away), and no
labels on internal nodes.  Nodes are numbered in preorder, so node 0 is
always the root and children keep the left-to-right order of the text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "NewickError",
    "MalformedNewick",
    "NonBinaryNode",
    "DuplicateLabel",
    "UnlabeledLeaf",
    "LabeledTree",
    "parse_newick",
    "write_newick",
    "tree_from_nested",
]


class NewickError(ValueError):
    """Base class for everything the parser rejects."""


class MalformedNewick(NewickError):
    pass


class NonBinaryNode(NewickError):
    pass


class DuplicateLabel(NewickError):
    pass


class UnlabeledLeaf(NewickError):
    pass


@dataclass(eq=False)
class LabeledTree:
    """Node table of a rooted binary tree.

    ``children[v]`` is ``()`` for a leaf and a pair otherwise; ``label[v]`` is
    set exactly on leaves.  ``leaf_of`` maps a label to its leaf node.
    """

    parent: list[int]
    children: list[tuple[int, ...]]
    label: list[str | None]
    root: int = 0
    leaf_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.leaf_of:
            self.leaf_of = {lab: v for v, lab in enumerate(self.label) if lab is not None}

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def labels(self) -> frozenset[str]:
        return frozenset(self.leaf_of)

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n_nodes) if not self.children[v]]

    def internal_nodes(self) -> list[int]:
        return [v for v in range(self.n_nodes) if self.children[v]]

    def preorder(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def node_path(self, v: int) -> str:
        """Child-index path from the root, e.g. ``"01"``; the root is ``""``."""
        steps = []
        while v != self.root:
            p = self.parent[v]
            steps.append("0" if self.children[p][0] == v else "1")
            v = p
        return "".join(reversed(steps))

    def node_at(self, path: str) -> int:
        v = self.root
        for ch in path:
            if ch not in "01" or not self.children[v]:
                raise KeyError(path)
            v = self.children[v][int(ch)]
        return v

    def shape(self):
        """Nested-tuple form; two trees are structurally identical iff equal."""
        return _iterative_nested(self)

    def check(self) -> None:
        roots = [v for v, p in enumerate(self.parent) if p == -1]
        if roots != [self.root]:
            raise MalformedNewick(f"expected exactly one root, found {roots}")
        for v, ch in enumerate(self.children):
            if len(ch) not in (0, 2):
                raise NonBinaryNode(f"node {v} has {len(ch)} children")
            if (self.label[v] is None) != bool(ch):
                raise UnlabeledLeaf(f"node {v}: labels must sit exactly on leaves")
            for c in ch:
                if self.parent[c] != v:
                    raise MalformedNewick(f"parent pointer of node {c} is inconsistent")


def _iterative_nested(tree: LabeledTree):
    # recursion-free so that caterpillars with thousands of leaves are fine
    built: dict[int, object] = {}
    for v in reversed(tree.preorder()):
        ch = tree.children[v]
        built[v] = tree.label[v] if not ch else tuple(built.pop(c) for c in ch)
    return built[tree.root]


def tree_from_nested(nested) -> LabeledTree:
    """Build a tree from nested 2-tuples of label strings, in preorder."""
    parent: list[int] = []
    children: list[list[int]] = []
    label: list[str | None] = []
    stack = [(nested, -1)]
    while stack:
        item, par = stack.pop()
        v = len(parent)
        parent.append(par)
        children.append([])
        if par >= 0:
            children[par].append(v)
        if isinstance(item, tuple):
            if len(item) != 2:
                raise NonBinaryNode(f"node with {len(item)} children")
            label.append(None)
            stack.extend((c, v) for c in reversed(item))
        else:
            label.append(str(item))
    seen: set[str] = set()
    for lab in label:
        if lab is not None:
            if lab in seen:
                raise DuplicateLabel(lab)
            seen.add(lab)
    tree = LabeledTree(parent, [tuple(c) for c in children], label)
    tree.check()
    return tree


_TOKEN = re.compile(r"\s*(?:([(),;])|(:)\s*([-+0-9.eE]+)|([A-Za-z0-9_.\-]+))")


def parse_newick(text: str) -> LabeledTree:
    parent: list[int] = []
    children: list[list[int]] = []
    label: list[str | None] = []
    seen: dict[str, int] = {}
    stack: list[int] = []   # open internal nodes
    pos, n = 0, len(text)
    expect_node = True      # at the start of a subtree
    cur = -1                # most recently closed node
    done = False

    def new_node() -> int:
        v = len(parent)
        parent.append(stack[-1] if stack else -1)
        children.append([])
        label.append(None)
        if stack:
            children[stack[-1]].append(v)
        return v

    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:].strip()
            if not rest:
                break
            raise MalformedNewick(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        if done:
            raise MalformedNewick(f"trailing text after ';' at offset {m.start()}")
        punct, colon, _length, word = m.groups()
        if punct == "(":
            if not expect_node:
                raise MalformedNewick(f"unexpected '(' at offset {m.start()}")
            if not stack and parent:
                raise MalformedNewick(f"second top-level tree at offset {m.start()}")
            stack.append(new_node())
        elif word is not None:
            if expect_node:
                if not stack and parent:
                    raise MalformedNewick(f"second top-level tree at offset {m.start()}")
                v = new_node()
                if word in seen:
                    raise DuplicateLabel(f"label {word!r} appears twice (offset {m.start()})")
                seen[word] = v
                label[v] = word
                cur = v
                expect_node = False
            else:
                raise MalformedNewick(
                    f"internal node label {word!r} at offset {m.start()} is not allowed")
        elif colon:
            if expect_node:
                raise MalformedNewick(f"branch length without a node at offset {m.start()}")
        elif punct == ",":
            if expect_node:
                raise UnlabeledLeaf(f"empty leaf before ',' at offset {m.start()}")
            if not stack:
                raise MalformedNewick(f"',' outside parentheses at offset {m.start()}")
            expect_node = True
        elif punct == ")":
            if expect_node:
                raise UnlabeledLeaf(f"empty leaf before ')' at offset {m.start()}")
            if not stack:
                raise MalformedNewick(f"unbalanced ')' at offset {m.start()}")
            cur = stack.pop()
            k = len(children[cur])
            if k != 2:
                raise NonBinaryNode(f"node closed at offset {m.start()} has {k} children")
            expect_node = False
        elif punct == ";":
            if stack:
                raise MalformedNewick("unbalanced '(' before ';'")
            if expect_node:
                raise MalformedNewick("empty tree")
            done = True
    if not done:
        raise MalformedNewick("missing terminating ';'")
    tree = LabeledTree(parent, [tuple(c) for c in children], label, 0, dict(seen))
    return tree


def write_newick(tree: LabeledTree) -> str:
    parts: list[str] = []
    # explicit stack of (node, state); state 0 = enter, 1 = between kids, 2 = exit
    stack = [(tree.root, 0)]
    while stack:
        v, st = stack.pop()
        ch = tree.children[v]
        if not ch:
            parts.append(tree.label[v])
        elif st == 0:
            parts.append("(")
            stack.append((v, 1))
            stack.append((ch[0], 0))
        elif st == 1:
            parts.append(",")
            stack.append((v, 2))
            stack.append((ch[1], 0))
        else:
            parts.append(")")
    return "".join(parts) + ";"
