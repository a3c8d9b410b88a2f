"""Dual bookkeeping for the reformulated dual LP.

The dual has a y value on every node of both trees (leaves are shared, so a
leaf has one y) and a z value on leaf sets.  The z side is never stored:
z_A = 1 exactly for the active leaf set A of each tree of f2.  A solution is
feasible when every compatible leaf set L has load

    sum of y over V[L] in both trees + number of active f2 trees meeting L

at most 1, internal y values are <= 0 and leaf y values lie in [0, 1].
The objective is sum(y) + sum(z) - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .core import Instance, SolverState


class InstanceTooLarge(Exception):
    pass


@dataclass
class DualLedger:
    y_leaf: dict[int, int] = field(default_factory=dict)
    y_internal: dict[tuple[int, int], int] = field(default_factory=dict)
    total: int = 0

    def set_leaf(self, x: int, value: int) -> None:
        self.total += value - self.y_leaf.get(x, 0)
        if value:
            self.y_leaf[x] = value
        else:
            self.y_leaf.pop(x, None)

    def add_internal(self, tree: int, node: int, delta: int) -> None:
        key = (tree, node)
        val = self.y_internal.get(key, 0) + delta
        self.total += delta
        if val:
            self.y_internal[key] = val
        else:
            self.y_internal.pop(key, None)

    def sign_violations(self) -> list[str]:
        bad = [f"y_leaf[{x}]={v}" for x, v in self.y_leaf.items() if not 0 <= v <= 1]
        bad += [f"y_internal[{k}]={v}" for k, v in self.y_internal.items() if v > 0]
        return bad

    def copy(self) -> "DualLedger":
        return DualLedger(dict(self.y_leaf), dict(self.y_internal), self.total)


@dataclass(frozen=True)
class StepAccounting:
    """Snapshot of the primal cut count, dual objective and starred ops."""

    delta_p: int
    delta_d: int
    starred_ops: int

    def __sub__(self, other: "StepAccounting") -> "StepAccounting":
        return StepAccounting(self.delta_p - other.delta_p, self.delta_d - other.delta_d,
                              self.starred_ops - other.starred_ops)


@dataclass(frozen=True)
class DualCertificate:
    y_leaf: dict[int, int]
    y_internal: dict[tuple[int, int], int]
    active_sets: tuple[tuple[int, ...], ...]
    objective: int


def certificate_of(state: "SolverState") -> DualCertificate:
    return DualCertificate(dict(state.dual.y_leaf), dict(state.dual.y_internal),
                           tuple(active_tree_sets(state)), state.dual_objective())


def active_tree_sets(state: "SolverState") -> list[tuple[int, ...]]:
    f = state.f2
    lab = state.inst.label_at2
    out = []
    for r in f.comp_roots():
        if f.count[r]:
            out.append(tuple(sorted(lab[v] for v in f.active_under(r))))
    return sorted(out)


def dual_objective(state: "SolverState") -> int:
    return state.dual_objective()


def compute_load(state: "SolverState", leaves: Iterable[int]) -> int:
    from .core import steiner_from_nodes

    inst = state.inst
    leaves = sorted(set(leaves))
    if not leaves:
        raise ValueError("empty leaf set")
    y = state.dual
    load = sum(y.y_leaf.get(x, 0) for x in leaves)
    for i in (1, 2):
        idx, leaf = inst.index(i), inst.leaf(i)
        for v in steiner_from_nodes(idx, [leaf[x] for x in leaves]):
            if idx.children[v]:
                load += y.y_internal.get((i, v), 0)
    ls = set(leaves)
    load += sum(1 for a in active_tree_sets(state) if ls.intersection(a))
    return load


# ---------------------------------------------------------------------------
# exhaustive verifier


def compatible_masks(inst: "Instance") -> list[bool]:
    """compatible[mask] for every subset of the labels (n <= 16 or so)."""
    cached = getattr(inst, "_maf_compat_masks", None)
    if cached is not None:
        return cached
    from .core import _orient

    n = inst.n
    l1, l2 = inst.leaf1, inst.leaf2
    bad_pairs = [0] * (n * n)   # bad_pairs[i*n+j] = mask of h forming an inconsistent triplet
    for i in range(n):
        for j in range(i + 1, n):
            m = 0
            for h in range(n):
                if h != i and h != j:
                    if _orient(inst.idx1, l1[i], l1[j], l1[h]) is not _orient(inst.idx2, l2[i], l2[j], l2[h]):
                        m |= 1 << h
            bad_pairs[i * n + j] = m
    comp = [True] * (1 << n)
    for mask in range(1, 1 << n):
        h = mask.bit_length() - 1
        rest = mask ^ (1 << h)
        if not comp[rest]:
            comp[mask] = False
            continue
        ok = True
        bits = [i for i in range(h) if rest >> i & 1]
        for a in range(len(bits)):
            row = bits[a] * n
            for b in range(a + 1, len(bits)):
                if bad_pairs[row + bits[b]] >> h & 1:
                    ok = False
                    break
            if not ok:
                break
        comp[mask] = ok
    inst._maf_compat_masks = comp
    return comp


def _below_masks(inst: "Instance", i: int) -> list[int]:
    tree, idx = inst.tree(i), inst.index(i)
    lab = inst.label_at(i)
    below = [0] * tree.n_nodes
    for v in reversed(idx.order):
        if not tree.children[v]:
            below[v] = 1 << lab[v]
        else:
            a, b = tree.children[v]
            below[v] = below[a] | below[b]
    return below


def dual_violations(state: "SolverState", limit: int = 12, stop_at_first: bool = False) -> list[tuple[int, ...]]:
    """All compatible leaf sets with load > 1 (as sorted label-id tuples)."""
    return ledger_violations(state.inst, state.dual, active_tree_sets(state), limit, stop_at_first)


def ledger_violations(inst: "Instance", y: DualLedger, active_sets: Iterable[Iterable[int]],
                      limit: int = 12, stop_at_first: bool = False) -> list[tuple[int, ...]]:
    """Same check for a bare (y, z) pair, e.g. one read back from a certificate."""
    n = inst.n
    if n > limit:
        raise InstanceTooLarge(f"{n} labels exceed the verification limit {limit}")
    comp = compatible_masks(inst)
    # node tests: (below, left, right, weight)
    tests = []
    belows = {i: _below_masks(inst, i) for i in (1, 2)}
    for (i, v), w in y.y_internal.items():
        below = belows[i]
        a, b = inst.tree(i).children[v]
        tests.append((below[v], below[a], below[b], w))
    leaf_w = [(1 << x, w) for x, w in y.y_leaf.items()]
    zmasks = []
    for a in active_sets:
        m = 0
        for x in a:
            m |= 1 << x
        zmasks.append(m)
    full = (1 << n) - 1
    bad = []
    for mask in range(1, full + 1):
        if not comp[mask]:
            continue
        load = 0
        for bit, w in leaf_w:
            if mask & bit:
                load += w
        for bm, lm, rm, w in tests:
            if mask & bm and (mask & ~bm or (mask & lm and mask & rm)):
                load += w
        for zm in zmasks:
            if mask & zm:
                load += 1
        if load > 1:
            bad.append(tuple(x for x in range(n) if mask >> x & 1))
            if stop_at_first:
                break
    return bad


def verify_dual_feasibility(state: "SolverState", limit: int = 12) -> bool:
    if state.dual.sign_violations():
        return False
    return not dual_violations(state, limit, stop_at_first=True)


def lemma_ratio_check(state: "SolverState", factor: Fraction) -> bool:
    """dual objective >= factor * (number of f2 cuts), in exact arithmetic."""
    acc = state.accounting
    return Fraction(acc.delta_d) >= Fraction(factor) * acc.delta_p
