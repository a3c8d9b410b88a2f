"""Random instances: a random binary tree plus a walk of random SPR moves.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``; the
tree shape and the SPR walk use separate child streams of the user seed, so
changing ``k`` never changes the first tree.
"""

from __future__ import annotations

import numpy as np

from .core import Instance
from .newick import LabeledTree, tree_from_nested


class InvalidSize(ValueError):
    pass


class TooSmall(ValueError):
    pass


def _rng(seed, *tags: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *tags])))


def random_tree(n: int, seed: int) -> LabeledTree:
    """Labels L0..L{n-1}; the left part of every split has a uniform size in
    [1, m-1] and is a uniform subset (shuffle, take a prefix)."""
    if n < 1:
        raise InvalidSize("a tree needs at least one leaf")
    rng = _rng(seed, 0)
    labels = [f"L{i}" for i in range(n)]
    # build bottom-up from an explicit work list to avoid deep recursion
    out: dict[int, object] = {}
    work = [(0, labels)]
    pending: list[tuple[int, int, int]] = []   # (slot, left slot, right slot)
    next_slot = 1
    while work:
        slot, labs = work.pop()
        m = len(labs)
        if m == 1:
            out[slot] = labs[0]
            continue
        k = int(rng.integers(1, m))        # uniform in [1, m-1]
        perm = rng.permutation(m)
        left = [labs[i] for i in perm[:k]]
        right = [labs[i] for i in perm[k:]]
        a, b = next_slot, next_slot + 1
        next_slot += 2
        pending.append((slot, a, b))
        work.append((b, right))
        work.append((a, left))
    for slot, a, b in reversed(pending):
        out[slot] = (out.pop(a), out.pop(b))
    return tree_from_nested(out[0])


def _spr_once(nested_tree: LabeledTree, rng: np.random.Generator) -> LabeledTree:
    t = nested_tree
    nodes = [v for v in range(t.n_nodes) if v != t.root]
    while True:
        s = nodes[int(rng.integers(len(nodes)))]
        # pruning s must leave something other than a lone leaf to graft onto
        if len(t.leaf_of) - _leaf_count(t, s) >= 2:
            break
    p = t.parent[s]
    sib = [c for c in t.children[p] if c != s][0]
    # remaining tree after pruning s and suppressing p, as child->parent links
    par = dict(enumerate(t.parent))
    kids = {v: list(ch) for v, ch in enumerate(t.children)}
    gp = par[p]
    root = t.root
    if gp < 0:
        root = sib
        par[sib] = -1
    else:
        kids[gp] = [sib if c == p else c for c in kids[gp]]
        par[sib] = gp
    # nodes of the remaining tree, in preorder
    rest, stack = [], [root]
    while stack:
        v = stack.pop()
        rest.append(v)
        stack.extend(reversed(kids[v]))
    # candidate edges: the edge above every node of the remaining tree, where
    # the edge "above the root" means a new root; the edge above sib is where
    # s came from, so it is excluded
    cands = [v for v in rest if v != sib]
    target = cands[int(rng.integers(len(cands)))]

    sub = _subtree_nested(t, s)
    built: dict[int, object] = {}
    for x in reversed(rest):
        val = t.label[x] if not kids[x] else tuple(built.pop(c) for c in kids[x])
        built[x] = (val, sub) if x == target else val
    return tree_from_nested(built[root])


def _leaf_count(t: LabeledTree, v: int) -> int:
    k, st = 0, [v]
    while st:
        x = st.pop()
        if t.children[x]:
            st.extend(t.children[x])
        else:
            k += 1
    return k


def _subtree_nested(t: LabeledTree, v: int):
    built: dict[int, object] = {}
    order, st = [], [v]
    while st:
        x = st.pop()
        order.append(x)
        st.extend(t.children[x])
    for x in reversed(order):
        ch = t.children[x]
        built[x] = t.label[x] if not ch else (built[ch[0]], built[ch[1]])
    return built[v]


def random_spr(tree: LabeledTree, k: int, seed: int) -> LabeledTree:
    """Apply k uniformly random SPR moves.

    The pruned subtree root is uniform over non-root nodes.  The regraft
    edge is uniform over the edges of the tree left after pruning and
    suppressing the old parent, including the edge above its root; the edge
    that would restore the original attachment is excluded.
    """
    if k == 0:
        return tree_from_nested(tree.shape())
    if len(tree.leaf_of) < 3:
        raise TooSmall("SPR moves need at least three leaves")
    rng = _rng(seed, 1)
    t = tree
    for _ in range(k):
        t = _spr_once(t, rng)
    return t


def make_instance(n: int, k: int, seed: int) -> tuple[Instance, int]:
    t1 = random_tree(n, seed)
    t2 = random_spr(t1, k, seed)
    return Instance(t1, t2), k
