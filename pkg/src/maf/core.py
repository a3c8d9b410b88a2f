"""Tree and forest primitives shared by both approximation algorithms.

Conventions used throughout the package:

* Labels are turned into integer ids ``0..n-1`` in sorted string order, so
  comparing ids is the same as comparing the label strings.
* A forest is its base tree plus a set of deleted edges; an edge is named by
  its child node.  ``ForestView.count[v]`` is the number of active leaves
  below ``v`` reachable without crossing a deleted edge.
* ``p(W)`` is the lowest ancestor of ``W`` (inside its component) that also
  sits above some other active leaf.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dual import DualLedger, StepAccounting
from .newick import LabeledTree, tree_from_nested, write_newick

RHO = "_rho_"


class MafError(Exception):
    pass


class DisconnectedLeaves(MafError):
    pass


class UndefinedParent(MafError):
    pass


class NotSiblings(MafError):
    pass


class NoActiveLeaves(MafError):
    pass


class ReservedLabelInUse(MafError):
    pass


class ActiveLeavesRemain(MafError):
    pass


class PartitionMismatch(MafError):
    pass


class LabelMismatch(MafError):
    pass


class InvariantViolation(MafError):
    """A property guaranteed by the analysis did not hold; always a bug."""


# ---------------------------------------------------------------------------
# static tree index


class TreeIndex:
    """Preorder numbering, subtree sizes, depths and O(1) lca queries."""

    def __init__(self, tree: LabeledTree):
        n = tree.n_nodes
        self.tree = tree
        self.parent = tree.parent
        self.children = tree.children
        order = tree.preorder()
        self.order = order
        pre = [0] * n
        for i, v in enumerate(order):
            pre[v] = i
        depth = [0] * n
        for v in order:
            if v != tree.root:
                depth[v] = depth[tree.parent[v]] + 1
        size = [1] * n
        for v in reversed(order):
            p = tree.parent[v]
            if p >= 0:
                size[p] += size[v]
        self.pre, self.depth, self.size = pre, depth, size

        # euler tour + sparse table over depths
        euler: list[int] = []
        first = [0] * n
        stack = [(tree.root, 0)]
        while stack:
            v, i = stack.pop()
            if i == 0:
                first[v] = len(euler)
            euler.append(v)
            ch = tree.children[v]
            if i < len(ch):
                stack.append((v, i + 1))
                stack.append((ch[i], 0))
        self.first = first
        m = len(euler)
        table = [euler]
        j = 1
        while (1 << j) <= m:
            prev = table[-1]
            half = 1 << (j - 1)
            row = []
            for i in range(m - (1 << j) + 1):
                a, b = prev[i], prev[i + half]
                row.append(a if depth[a] <= depth[b] else b)
            table.append(row)
            j += 1
        self.table = table
        self.log = [0] * (m + 1)
        for i in range(2, m + 1):
            self.log[i] = self.log[i >> 1] + 1

    def lca(self, a: int, b: int) -> int:
        i, j = self.first[a], self.first[b]
        if i > j:
            i, j = j, i
        k = self.log[j - i + 1]
        row = self.table[k]
        x, y = row[i], row[j - (1 << k) + 1]
        return x if self.depth[x] <= self.depth[y] else y

    def lca_set(self, nodes: Iterable[int]) -> int:
        # the lca of a set is the lca of its preorder-extreme members
        pre = self.pre
        it = iter(nodes)
        lo = hi = next(it)
        for v in it:
            if pre[v] < pre[lo]:
                lo = v
            elif pre[v] > pre[hi]:
                hi = v
        return lo if lo == hi else self.lca(lo, hi)

    def is_ancestor(self, a: int, b: int) -> bool:
        """True when ``a`` is ``b`` or lies above it."""
        return self.pre[a] <= self.pre[b] < self.pre[a] + self.size[a]


def tree_index(tree: LabeledTree) -> TreeIndex:
    idx = getattr(tree, "_maf_index", None)
    if idx is None:
        idx = TreeIndex(tree)
        tree._maf_index = idx
    return idx


# ---------------------------------------------------------------------------
# instances


class Instance:
    """Two rooted binary trees over one label set."""

    def __init__(self, t1: LabeledTree, t2: LabeledTree):
        if t1.labels != t2.labels:
            only1 = sorted(t1.labels - t2.labels)[:5]
            only2 = sorted(t2.labels - t1.labels)[:5]
            raise LabelMismatch(f"label sets differ (only in t1: {only1}, only in t2: {only2})")
        self.t1, self.t2 = t1, t2
        self.labels: list[str] = sorted(t1.leaf_of)
        self.ids = {lab: i for i, lab in enumerate(self.labels)}
        self.leaf1 = [t1.leaf_of[lab] for lab in self.labels]
        self.leaf2 = [t2.leaf_of[lab] for lab in self.labels]
        self.idx1 = tree_index(t1)
        self.idx2 = tree_index(t2)
        self.label_at1 = [-1] * t1.n_nodes
        self.label_at2 = [-1] * t2.n_nodes
        for i in range(len(self.labels)):
            self.label_at1[self.leaf1[i]] = i
            self.label_at2[self.leaf2[i]] = i

    @classmethod
    def from_nested(cls, a, b) -> "Instance":
        return cls(tree_from_nested(a), tree_from_nested(b))

    @classmethod
    def from_newick(cls, a: str, b: str) -> "Instance":
        from .newick import parse_newick
        return cls(parse_newick(a), parse_newick(b))

    @property
    def n(self) -> int:
        return len(self.labels)

    def tree(self, i: int) -> LabeledTree:
        return self.t1 if i == 1 else self.t2

    def index(self, i: int) -> TreeIndex:
        return self.idx1 if i == 1 else self.idx2

    def leaf(self, i: int) -> list[int]:
        return self.leaf1 if i == 1 else self.leaf2

    def label_at(self, i: int) -> list[int]:
        return self.label_at1 if i == 1 else self.label_at2

    def label_id(self, lab: str) -> int:
        return self.ids[lab]

    def names(self, ids: Iterable[int]) -> list[str]:
        return sorted(self.labels[i] for i in ids)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(write_newick(self.t1).encode())
        h.update(b"\n")
        h.update(write_newick(self.t2).encode())
        return h.hexdigest()


def augment_with_rho(inst: Instance) -> Instance:
    """Hang a fresh leaf ``_rho_`` next to both roots."""
    if RHO in inst.ids:
        raise ReservedLabelInUse(f"label {RHO!r} is already present")
    t1 = tree_from_nested((inst.t1.shape(), RHO))
    t2 = tree_from_nested((inst.t2.shape(), RHO))
    return Instance(t1, t2)


# ---------------------------------------------------------------------------
# triplets and compatibility


class TripletOrientation(enum.Enum):
    UV_W = "uv|w"
    UW_V = "uw|v"
    VW_U = "vw|u"


def _orient(idx: TreeIndex, a: int, b: int, c: int) -> TripletOrientation:
    d = idx.depth
    ab, ac, bc = idx.lca(a, b), idx.lca(a, c), idx.lca(b, c)
    if d[ab] > d[ac]:
        return TripletOrientation.UV_W
    if d[ac] > d[ab]:
        return TripletOrientation.UW_V
    # ab and ac coincide at the top; the remaining pair is the deep one
    return TripletOrientation.VW_U


def orient_triplet(tree: LabeledTree, u: str, v: str, w: str) -> TripletOrientation:
    if len({u, v, w}) != 3:
        raise ValueError("triplet labels must be distinct")
    lf = tree.leaf_of
    return _orient(tree_index(tree), lf[u], lf[v], lf[w])


def compatible_bruteforce(inst: Instance, leaves: Iterable[int]) -> bool:
    """Triplet-by-triplet definition; cubic, meant for small sets and tests."""
    xs = sorted(set(leaves))
    l1, l2 = inst.leaf1, inst.leaf2
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            for k in range(j + 1, len(xs)):
                a, b, c = xs[i], xs[j], xs[k]
                if _orient(inst.idx1, l1[a], l1[b], l1[c]) is not _orient(inst.idx2, l2[a], l2[b], l2[c]):
                    return False
    return True


def compatible_fast(inst: Instance, leaves: Sequence[int]) -> bool:
    """Decide whether T1|S equals T2|S in O(|S| log |S|).

    Every cluster of T1|S is checked against T2: the cluster C is also a
    cluster of T2|S exactly when the T2 subtree at lca2(C) holds |C| members
    of S.  Both restrictions have |S|-1 clusters, so this suffices.
    """
    k = len(leaves)
    if k <= 2:
        return True
    i1, i2 = inst.idx1, inst.idx2
    pre1, pre2, size2, depth1 = i1.pre, i2.pre, i2.size, i1.depth
    l1, l2 = inst.leaf1, inst.leaf2
    items = sorted(((pre1[l1[x]], l1[x], l2[x]) for x in leaves))
    keys2 = sorted(pre2[l2[x]] for x in leaves)
    lca1, lca2 = i1.lca, i2.lca
    left = bisect.bisect_left

    def closes(entry) -> bool:
        if entry[2] < 2:
            return True
        lo = pre2[entry[1]]
        return left(keys2, lo + size2[entry[1]]) - left(keys2, lo) == entry[2]

    stack: list[list[int]] = []
    for _, a, b in items:
        if stack:
            top = stack[-1][0]
            anc = lca1(top, a)
            last = None
            while stack and depth1[stack[-1][0]] > depth1[anc]:
                ent = stack.pop()
                if last is not None:
                    ent[1] = lca2(ent[1], last[1])
                    ent[2] += last[2]
                if not closes(ent):
                    return False
                last = ent
            if last is not None:
                if stack and stack[-1][0] == anc:
                    s = stack[-1]
                    s[1] = lca2(s[1], last[1])
                    s[2] += last[2]
                else:
                    stack.append([anc, last[1], last[2]])
        stack.append([a, b, 1])
    last = None
    while stack:
        ent = stack.pop()
        if last is not None:
            ent[1] = lca2(ent[1], last[1])
            ent[2] += last[2]
        if not closes(ent):
            return False
        last = ent
    return True


def is_compatible_set(inst: Instance, leaves: Iterable[int]) -> bool:
    xs = list(set(leaves))
    if len(xs) <= 12:
        return compatible_bruteforce(inst, xs)
    return compatible_fast(inst, xs)


# ---------------------------------------------------------------------------
# steiner sets


def steiner_from_nodes(idx: TreeIndex, nodes: Iterable[int]) -> set[int]:
    nodes = list(nodes)
    if not nodes:
        raise ValueError("empty leaf set")
    top = idx.lca_set(nodes)
    out = {top}
    par = idx.parent
    for v in nodes:
        while v not in out:
            out.add(v)
            v = par[v]
    return out


def steiner_nodes(view, leaves: Iterable) -> set[int]:
    """V[L] inside one tree; a single leaf gives just that leaf.

    ``view`` is a LabeledTree (leaves given as label strings) or a
    ForestView (leaves given as label ids).
    """
    if isinstance(view, ForestView):
        leaves = list(leaves)
        view.lca(leaves)  # raises DisconnectedLeaves when split
        return steiner_from_nodes(view.index, [view.leaf[x] for x in leaves])
    return steiner_from_nodes(tree_index(view), [view.leaf_of[x] for x in leaves])


def lca_of_set(view, leaves: Iterable) -> int:
    if isinstance(view, ForestView):
        return view.lca(list(leaves))
    return tree_index(view).lca_set(view.leaf_of[x] for x in leaves)


# ---------------------------------------------------------------------------
# forests


class ForestView:
    """A tree with deleted edges plus active-leaf counts per node."""

    def __init__(self, tree: LabeledTree, index: TreeIndex, leaf: list[int], active: Iterable[int]):
        self.tree = tree
        self.index = index
        self.parent = tree.parent
        self.children = tree.children
        self.leaf = leaf
        self.deleted: set[int] = set()
        count = [0] * tree.n_nodes
        for x in active:
            count[leaf[x]] = 1
        for v in reversed(index.order):
            p = tree.parent[v]
            if p >= 0:
                count[p] += count[v]
        self.count = count
        self.n_active_trees = 1 if count[tree.root] else 0

    def is_comp_root(self, v: int) -> bool:
        return v in self.deleted or self.parent[v] < 0

    def comp_root(self, v: int) -> int:
        par, dele = self.parent, self.deleted
        while par[v] >= 0 and v not in dele:
            v = par[v]
        return v

    def root_of(self, x: int) -> int:
        return self.comp_root(self.leaf[x])

    def kids(self, v: int) -> list[int]:
        return [c for c in self.children[v] if c not in self.deleted]

    def lca(self, labels: Sequence[int]) -> int:
        if not labels:
            raise ValueError("empty leaf set")
        nodes = [self.leaf[x] for x in labels]
        r = self.comp_root(nodes[0])
        for v in nodes[1:]:
            if self.comp_root(v) != r:
                raise DisconnectedLeaves("leaves lie in different components")
        return self.index.lca_set(nodes)

    def climb(self, x: int, k: int) -> tuple[int | None, int | None]:
        """From ``x`` (which holds ``k`` active leaves) go up to p; also
        return the child of p on the way, or None when p is ``x`` itself."""
        count, par, dele = self.count, self.parent, self.deleted
        prev = None
        while count[x] == k:
            if par[x] < 0 or x in dele:
                return None, None
            prev, x = x, par[x]
        return x, prev

    def p_of(self, labels: Sequence[int]) -> int | None:
        x = self.lca(labels)
        return self.climb(x, len(labels))[0]

    def p_leaf(self, x: int) -> int | None:
        return self.climb(self.leaf[x], 1)[0]

    def solo(self, x: int) -> bool:
        return self.count[self.root_of(x)] == 1

    def siblings(self, u: int, v: int) -> bool:
        pu = self.p_leaf(u)
        return pu is not None and pu == self.p_leaf(v)

    # mutations -------------------------------------------------------------

    def deactivate(self, x: int) -> None:
        v = self.leaf[x]
        count, par, dele = self.count, self.parent, self.deleted
        if count[v] != 1:
            raise InvariantViolation("leaf is not active in this forest")
        while True:
            count[v] -= 1
            if par[v] < 0 or v in dele:
                break
            v = par[v]
        if count[v] == 0:
            self.n_active_trees -= 1

    def delete_edge(self, c: int) -> None:
        if c in self.deleted or self.parent[c] < 0:
            raise InvariantViolation(f"edge above node {c} cannot be deleted")
        a = self.count[c]
        count, par, dele = self.count, self.parent, self.deleted
        v = par[c]
        while True:
            count[v] -= a
            if par[v] < 0 or v in dele:
                break
            v = par[v]
        dele.add(c)
        if a > 0 and count[v] > 0:
            self.n_active_trees += 1

    def recount(self) -> None:
        count = self.count
        for v in self.index.order:
            if self.children[v]:
                count[v] = 0
        for v in reversed(self.index.order):
            p = self.parent[v]
            if p >= 0 and v not in self.deleted:
                count[p] += count[v]
        self.n_active_trees = sum(1 for r in self.comp_roots() if count[r] > 0)

    # queries ---------------------------------------------------------------

    def comp_roots(self) -> list[int]:
        return [self.tree.root] + sorted(self.deleted)

    def _walk(self, v: int, active_only: bool):
        out, stack = [], [v]
        count, dele, ch, lab = self.count, self.deleted, self.children, self.tree.label
        while stack:
            x = stack.pop()
            if active_only and count[x] == 0:
                continue
            kids = ch[x]
            if not kids:
                out.append(x)
            else:
                stack.extend(c for c in kids if c not in dele)
        return out

    def active_under(self, v: int) -> list[int]:
        """Active leaf nodes below ``v`` within its component."""
        return self._walk(v, True)

    def leaves_under(self, v: int) -> list[int]:
        return self._walk(v, False)

    def pair_at(self, v: int) -> tuple[int, int] | None:
        """If ``v`` holds exactly two active leaves, return their nodes."""
        if self.count[v] != 2:
            return None
        got = self.active_under(v)
        return got[0], got[1]


# ---------------------------------------------------------------------------
# solver state


class CutKind(str, enum.Enum):
    CUT_W = "CutW"
    FINAL_CUT = "FinalCut"
    CUT_U = "CutU"
    CUT_SINGLETON = "CutSingleton"
    PROCEDURE_CUT = "ProcedureCut"


@dataclass(frozen=True)
class CutEvent:
    kind: CutKind
    forest: int
    edge_id: int
    cut_set_leaves: frozenset[int]
    actor_pair: tuple[int, int] | None = None
    deactivated: int | None = None
    iteration: int = 0


@dataclass(frozen=True)
class RedBlueSplit:
    r: frozenset[int]
    b: frozenset[int]
    lca1_union: int


@dataclass(frozen=True)
class AgreementForest:
    blocks: tuple[tuple[int, ...], ...]

    @property
    def value(self) -> int:
        return len(self.blocks) - 1

    def named(self, inst: Instance) -> list[list[str]]:
        return sorted(inst.names(b) for b in self.blocks)


def canonical_blocks(blocks: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(tuple(sorted(b)) for b in blocks))


class SolverState:
    """Forests, active leaves, dual values and the cut trace of one run."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.active: set[int] = set(range(inst.n))
        self.f1 = ForestView(inst.t1, inst.idx1, inst.leaf1, self.active)
        self.f2 = ForestView(inst.t2, inst.idx2, inst.leaf2, self.active)
        self.merges: dict[int, int | None] = {}
        self.dual = DualLedger()
        self.trace: list[CutEvent] = []
        self.iteration = 0
        self.starred = 0
        self.retro_merges: list[tuple[int, int, int]] = []
        self.compatible_nodes: set[int] = set()   # T1 nodes whose active set is known compatible

    def forest(self, i: int) -> ForestView:
        return self.f1 if i == 1 else self.f2

    @property
    def accounting(self) -> StepAccounting:
        return StepAccounting(len(self.f2.deleted), self.dual_objective(), self.starred)

    def dual_objective(self) -> int:
        return self.dual.total + self.f2.n_active_trees - 1

    # basic ops ---------------------------------------------------------------

    def p(self, i: int, labels: Sequence[int]) -> int | None:
        for x in labels:
            if x not in self.active:
                raise InvariantViolation(f"leaf {self.inst.labels[x]} is not active")
        return self.forest(i).p_of(labels)

    def cut(self, i: int, labels: Sequence[int], kind: CutKind,
            actor: tuple[int, int] | None = None, deactivated: int | None = None) -> CutEvent:
        f = self.forest(i)
        labels = list(labels)
        for x in labels:
            if x not in self.active:
                raise InvariantViolation(f"leaf {self.inst.labels[x]} is not active")
        x = f.lca(labels)
        p, c = f.climb(x, len(labels))
        if p is None:
            raise UndefinedParent("no other active leaf in the component")
        if c is None:
            raise InvariantViolation("cut set is not the full active set of a subtree")
        f.delete_edge(c)
        ev = CutEvent(kind, i, c, frozenset(labels), actor, deactivated, self.iteration)
        self.trace.append(ev)
        return ev

    def cut_subtree(self, i: int, node: int, kind: CutKind, actor=None) -> CutEvent:
        f = self.forest(i)
        labs = self.inst.label_at(i)
        return self.cut(i, [labs[v] for v in f.active_under(node)], kind, actor)

    def cut_leaf(self, i: int, x: int, kind: CutKind, actor=None, strict: bool = True) -> CutEvent | None:
        """Sever leaf ``x``; with ``strict=False`` do nothing if it is alone."""
        f = self.forest(i)
        if not strict and f.solo(x):
            return None
        return self.cut(i, [x], kind, actor, x)

    def deactivate(self, x: int) -> None:
        if x not in self.active:
            raise InvariantViolation(f"leaf {self.inst.labels[x]} already inactive")
        self.active.discard(x)
        self.f1.deactivate(x)
        self.f2.deactivate(x)

    def retire(self, x: int, kind: CutKind, f2: str = "strict", f1: str = "loose", actor=None) -> None:
        """Cut ``x`` off in f2 then f1 (per policy), deactivate it, set y_x = 1.

        Policies: "strict" (must be cuttable), "loose" (skip if alone),
        "never".
        """
        for i, pol in ((2, f2), (1, f1)):
            if pol != "never":
                self.cut_leaf(i, x, kind, actor, strict=(pol == "strict"))
        self.deactivate(x)
        self.merges[x] = None
        self.dual.set_leaf(x, 1)

    def merge(self, u: int, v: int, check: bool = True) -> None:
        if check and not (self.f1.siblings(u, v) and self.f2.siblings(u, v)):
            raise NotSiblings(f"{self.inst.labels[u]} and {self.inst.labels[v]} are not siblings in both forests")
        self.deactivate(u)
        self.merges[u] = v

    def shared_tree_outgroup(self, u: int, v: int) -> bool:
        """Is there an active w in the f2 tree of u and v with uv|w in T2?"""
        f = self.f2
        r = f.root_of(u)
        if f.root_of(v) != r:
            return False
        x = self.inst.idx2.lca(self.inst.leaf2[u], self.inst.leaf2[v])
        return f.count[r] > f.count[x]

    def sibling_pairs_f1(self, top: int | None = None) -> list[tuple[int, int]]:
        """Active sibling pairs of f1 below ``top`` (default: whole forest)."""
        f = self.f1
        lab = self.inst.label_at1
        roots = [top] if top is not None else f.comp_roots()
        out = []
        count, dele, ch = f.count, f.deleted, f.children
        for r in roots:
            stack = [r]
            while stack:
                x = stack.pop()
                if count[x] < 2:
                    continue
                kids = [c for c in ch[x] if c not in dele and count[c] > 0]
                if count[x] == 2 and len(kids) == 2:
                    a, b = f.active_under(kids[0])[0], f.active_under(kids[1])[0]
                    a, b = lab[a], lab[b]
                    out.append((a, b) if a < b else (b, a))
                else:
                    stack.extend(kids)
        return out

    def least_sibling_pair_f1(self, top: int | None = None) -> tuple[int, int] | None:
        pairs = self.sibling_pairs_f1(top)
        return min(pairs) if pairs else None


def parent_of_active_set(state: SolverState, forest: int, w: Sequence[int]) -> int | None:
    return state.p(forest, list(w))


def cut_off(state: SolverState, forest: int, w: Sequence[int], kind: CutKind = CutKind.PROCEDURE_CUT) -> CutEvent:
    return state.cut(forest, list(w), kind)


def merge_active(state: SolverState, u: int, v: int, check: bool = True) -> None:
    state.merge(u, v, check)


# ---------------------------------------------------------------------------
# minimal incompatible sibling sets


def _set_compatible(state: SolverState, leaves: list[int]) -> bool:
    if len(leaves) <= 2:
        return True
    inst = state.inst
    key = inst.idx1.lca_set(inst.leaf1[x] for x in leaves)
    if key in state.compatible_nodes:
        return True
    ok = compatible_fast(inst, leaves)
    if ok:
        state.compatible_nodes.add(key)
    return ok


def find_minimal_incompatible(state: SolverState) -> RedBlueSplit | None:
    """Descend from lca1 of the active set to a minimal incompatible node.

    The cache of compatible T1 nodes stays sound for the whole run because
    the active set only shrinks and compatibility is inherited by subsets.
    """
    if not state.active:
        raise NoActiveLeaves("no active leaves")
    inst = state.inst
    idx1 = inst.idx1
    pre1, size1 = idx1.pre, idx1.size
    l1 = inst.leaf1
    act = sorted(state.active, key=lambda x: pre1[l1[x]])
    keys = [pre1[l1[x]] for x in act]
    if _set_compatible(state, act):
        return None
    lo, hi = 0, len(act)
    while True:
        x = idx1.lca(l1[act[lo]], l1[act[hi - 1]])
        c0 = idx1.children[x][0]
        mid = bisect.bisect_left(keys, pre1[c0] + size1[c0], lo, hi)
        left, right = act[lo:mid], act[mid:hi]
        if not left or not right:
            raise InvariantViolation("split at an lca left one side empty")
        if not _set_compatible(state, left):
            hi = mid
        elif not _set_compatible(state, right):
            lo = mid
        else:
            break
    union = act[lo:hi]
    idx2, l2 = inst.idx2, inst.leaf2
    top2 = idx2.lca_set(l2[v] for v in union)
    spans = [idx2.lca_set(l2[v] for v in side) == top2 for side in (left, right)]
    if spans[0] and spans[1]:
        r_side = 0 if min(left) < min(right) else 1
    elif spans[0] or spans[1]:
        r_side = 0 if spans[0] else 1
    else:
        raise InvariantViolation("neither side spans lca2 of the union")
    r, b = (left, right) if r_side == 0 else (right, left)
    return RedBlueSplit(frozenset(r), frozenset(b), x)


# ---------------------------------------------------------------------------
# results and invariants


def component_blocks(f: ForestView, label_at: list[int]) -> list[tuple[int, ...]]:
    out = []
    for r in f.comp_roots():
        leaves = [label_at[v] for v in f.leaves_under(r)]
        if leaves:
            out.append(tuple(sorted(leaves)))
    return out


def extract_forest(state: SolverState) -> AgreementForest:
    if state.active:
        raise ActiveLeavesRemain(f"{len(state.active)} active leaves remain")
    b1 = canonical_blocks(component_blocks(state.f1, state.inst.label_at1))
    b2 = canonical_blocks(component_blocks(state.f2, state.inst.label_at2))
    if b1 != b2:
        raise PartitionMismatch("f1 and f2 induce different partitions")
    return AgreementForest(b1)


def valid_tuple_violations(state: SolverState) -> list[str]:
    """Check the structural part of the valid-tuple invariant.

    Dual feasibility is checked separately (see ``dual``).
    """
    inst = state.inst
    bad: list[str] = []
    f1, f2 = state.f1, state.f2
    if state.active:
        roots = {f1.root_of(x) for x in state.active}
        if len(roots) != 1:
            bad.append("active leaves span several f1 trees")
    for x in state.active:
        if state.dual.y_leaf.get(x, 0) != 0:
            bad.append(f"active leaf {inst.labels[x]} has nonzero y")
    for i, f in ((1, f1), (2, f2)):
        if len([r for r in f.comp_roots() if f.leaves_under(r)]) != len(f.deleted) + 1:
            bad.append(f"forest {i}: tree count differs from cuts + 1")
    inact = []
    for f, lab in ((f1, inst.label_at1), (f2, inst.label_at2)):
        blocks = [tuple(sorted(lab[v] for v in f.leaves_under(r)))
                  for r in f.comp_roots() if f.count[r] == 0]
        inact.append(sorted(b for b in blocks if b))
    if inact[0] != inact[1]:
        bad.append("inactive trees of f1 and f2 do not pair up")
    for b in inact[0]:
        if not is_compatible_set(inst, b):
            bad.append(f"inactive tree {inst.names(b)} is incompatible")
    for x in sorted(state.active):
        reps = []
        for f, lab in ((f1, inst.label_at1), (f2, inst.label_at2)):
            p, c = f.climb(inst.leaf(1 if f is f1 else 2)[x], 1)
            if p is None:
                reps.append(None)
                continue
            reps.append(tuple(sorted(lab[v] for v in f.leaves_under(c))))
        if None not in reps:
            if reps[0] != reps[1]:
                bad.append(f"leaf {inst.labels[x]} represents different sets in f1 and f2")
            elif not is_compatible_set(inst, reps[0]):
                bad.append(f"leaf {inst.labels[x]} represents an incompatible set")
    return bad
