"""Brute-force oracle: agreement-forest verification and exact MAF by
set-partition enumeration.

Nothing here uses the solver's forest machinery.  Trees are read through
plain parent/child tables and leaf sets are Python-int bitmasks over the
label ids of the instance.  A block B is compatible iff the two trees induce
the same clusters on B, and V[B] in one tree is the set of nodes v with a
member of B below v and either a member outside v or members below both of
v's children (plus the leaves of B themselves).
"""

from __future__ import annotations

import os
from typing import Iterable, Iterator, Sequence

from .core import Instance
from .dual import InstanceTooLarge

DEFAULT_CAP = 10
HARD_CAP = 12


class NotAPartition(ValueError):
    pass


def oracle_cap() -> int:
    env = os.environ.get("MAF_ORACLE_CAP")
    return int(env) if env else DEFAULT_CAP


def iter_set_partitions(n: int) -> Iterator[list[int]]:
    """Restricted-growth strings of length n, in lexicographic order."""
    if n == 0:
        yield []
        return
    a = [0] * n
    m = [0] * n   # m[i] = max(a[:i+1])

    def rec(i: int):
        if i == n:
            yield list(a)
            return
        top = m[i - 1] + 1
        for b in range(top + 1):
            a[i] = b
            m[i] = max(m[i - 1], b)
            yield from rec(i + 1)

    a[0] = 0
    m[0] = 0
    yield from rec(1)


class _TreeMasks:
    def __init__(self, tree):
        self.tree = tree
        order, stack = [], [tree.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(tree.children[v])
        self.post = order[::-1]
        self.internal = [v for v in self.post if tree.children[v]]

    def fill(self, leaf_bit: dict[int, int]) -> list[int]:
        below = [0] * self.tree.n_nodes
        ch = self.tree.children
        for v in self.post:
            if ch[v]:
                below[v] = below[ch[v][0]] | below[ch[v][1]]
            else:
                below[v] = leaf_bit[v]
        return below


class Oracle:
    """Per-instance tables for repeated feasibility questions."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.n = inst.n
        self.trees = []
        for i in (1, 2):
            tree = inst.tree(i)
            tm = _TreeMasks(tree)
            bits = {tree.leaf_of[lab]: 1 << k for k, lab in enumerate(inst.labels)}
            below = tm.fill(bits)
            kids = [(below[tree.children[v][0]], below[tree.children[v][1]]) for v in tm.internal]
            self.trees.append((tm.internal, [below[v] for v in tm.internal], kids))
        self._compat: dict[int, bool] = {}
        self._steiner: dict[int, tuple[int, int]] = {}

    def compatible(self, mask: int) -> bool:
        got = self._compat.get(mask)
        if got is None:
            clusters = []
            for _, below, _ in self.trees:
                # clusters of size >= 2 only; singletons come from leaves anyway
                clusters.append({c for c in (b & mask for b in below) if c & (c - 1)})
            got = clusters[0] == clusters[1]
            self._compat[mask] = got
        return got

    def steiner(self, mask: int) -> tuple[int, int]:
        """Internal-node part of V[B] per tree, as bitmasks over internal positions."""
        got = self._steiner.get(mask)
        if got is None:
            parts = []
            for _, below, kids in self.trees:
                s = 0
                for pos, bm in enumerate(below):
                    hit = mask & bm
                    if hit and (mask & ~bm or (mask & kids[pos][0] and mask & kids[pos][1])):
                        s |= 1 << pos
                parts.append(s)
            got = (parts[0], parts[1])
            self._steiner[mask] = got
        return got

    def rooted_steiner(self, mask: int) -> tuple[int, int]:
        """V[B + root]: every internal node above some member of B."""
        parts = []
        for _, below, _ in self.trees:
            s = 0
            for pos, bm in enumerate(below):
                if mask & bm:
                    s |= 1 << pos
            parts.append(s)
        return parts[0], parts[1]


def _to_masks(inst: Instance, partition: Iterable[Iterable]) -> list[int]:
    masks = []
    seen = 0
    for block in partition:
        m = 0
        for x in block:
            k = inst.ids.get(x, -1) if isinstance(x, str) else int(x)
            if not 0 <= k < inst.n:
                raise NotAPartition(f"unknown label {x!r}")
            if (seen | m) >> k & 1:
                raise NotAPartition(f"label {inst.labels[k]!r} appears twice")
            m |= 1 << k
        if m == 0:
            raise NotAPartition("empty block")
        seen |= m
        masks.append(m)
    if seen != (1 << inst.n) - 1:
        raise NotAPartition("blocks do not cover every label")
    return masks


def verify_agreement_forest(inst: Instance, partition: Iterable[Iterable], oracle: Oracle | None = None) -> bool:
    masks = _to_masks(inst, partition)
    orc = oracle or Oracle(inst)
    used = [0, 0]
    for m in masks:
        if not orc.compatible(m):
            return False
        s = orc.steiner(m)
        for t in (0, 1):
            if used[t] & s[t]:
                return False
            used[t] |= s[t]
    return True


def _resolve_cap(inst: Instance, cap: int | None, allow_large: bool) -> None:
    cap = oracle_cap() if cap is None else cap
    if not allow_large:
        cap = min(cap, HARD_CAP)
    if inst.n > cap:
        raise InstanceTooLarge(f"{inst.n} labels exceed the oracle cap {cap}")


def exact_maf(inst: Instance, cap: int | None = None, allow_large: bool = False) -> tuple[int, list[list[str]]]:
    """Optimal #blocks - 1 and the lexicographically first optimal partition
    (restricted-growth order).

    The enumeration walks restricted-growth strings in lexicographic order
    and abandons a prefix as soon as its blocks are already infeasible or
    already use as many blocks as the best complete partition.  Both cuts are
    safe: adding labels to a block never repairs incompatibility or overlap.
    """
    _resolve_cap(inst, cap, allow_large)
    n = inst.n
    orc = Oracle(inst)
    best_k = n + 1
    best: list[int] | None = None
    blocks: list[int] = []
    st: list[tuple[int, int]] = []
    assign = [0] * n

    def feasible_with(j: int, new_mask: int) -> bool:
        if not orc.compatible(new_mask):
            return False
        s = orc.steiner(new_mask)
        for t in (0, 1):
            other = 0
            for q, sq in enumerate(st):
                if q != j:
                    other |= sq[t]
            if other & s[t]:
                return False
        return True

    def rec(i: int) -> None:
        nonlocal best_k, best
        if len(blocks) >= best_k:
            return
        if i == n:
            if len(blocks) < best_k:
                best_k = len(blocks)
                best = list(assign)
            return
        bit = 1 << i
        for j in range(len(blocks)):
            m = blocks[j] | bit
            if feasible_with(j, m):
                old_m, old_s = blocks[j], st[j]
                blocks[j], st[j] = m, orc.steiner(m)
                assign[i] = j
                rec(i + 1)
                blocks[j], st[j] = old_m, old_s
        if len(blocks) + 1 < best_k:
            blocks.append(bit)
            st.append(orc.steiner(bit))
            assign[i] = len(blocks) - 1
            rec(i + 1)
            blocks.pop()
            st.pop()

    rec(0)
    assert best is not None
    groups: dict[int, list[str]] = {}
    for i, g in enumerate(best):
        groups.setdefault(g, []).append(inst.labels[i])
    return best_k - 1, [groups[g] for g in sorted(groups)]


def exact_maf_naive(inst: Instance, cap: int = 8) -> int:
    """Full enumeration with no pruning at all; for cross-checking."""
    if inst.n > cap:
        raise InstanceTooLarge(f"{inst.n} labels exceed {cap}")
    orc = Oracle(inst)
    best = inst.n
    for rgs in iter_set_partitions(inst.n):
        k = max(rgs) + 1
        if k - 1 >= best:
            continue
        parts = [[] for _ in range(k)]
        for x, g in enumerate(rgs):
            parts[g].append(x)
        if verify_agreement_forest(inst, parts, orc):
            best = k - 1
    return best


def root_constrained_maf(inst: Instance, cap: int = 9) -> int:
    """Optimum of the formulation where the roots themselves must agree.

    One block may be attached to the root: its Steiner set then contains
    every node above its leaves.  If no block is attached, the root forms a
    block of its own, which costs one extra component.
    """
    if inst.n > cap:
        raise InstanceTooLarge(f"{inst.n} labels exceed {cap}")
    orc = Oracle(inst)
    best = inst.n + 1
    for rgs in iter_set_partitions(inst.n):
        k = max(rgs) + 1
        if k - 1 >= best:
            continue
        masks = [0] * k
        for x, g in enumerate(rgs):
            masks[g] |= 1 << x
        if not all(orc.compatible(m) for m in masks):
            continue
        plain = [orc.steiner(m) for m in masks]
        for root_block in range(-1, k):
            used = [0, 0]
            ok = True
            for q in range(k):
                s = orc.rooted_steiner(masks[q]) if q == root_block else plain[q]
                for t in (0, 1):
                    if used[t] & s[t]:
                        ok = False
                    used[t] |= s[t]
            if ok:
                value = k - 1 if root_block >= 0 else k
                best = min(best, value)
    return best
