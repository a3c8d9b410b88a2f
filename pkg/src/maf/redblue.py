"""The Red-Blue 2-approximation.

Outline of one round: after preprocessing (merging common cherries and
retiring leaves that are alone in f2), find a minimal incompatible active
sibling set R+B, resolve the red side R pair by pair, and if that fails to
pay for itself, drain the blue side B as well and finish the three
surviving leaves with one of three endgames depending on how many f2 trees
hold them.  In two of the endgames an earlier cut may be undone
("retroactive merge") when no starred operation paid for it.

The starred operations are the cross-tree final cut and the merge that
follows a cut; they are the only resolve_pair outcomes that raise the dual
by one while cutting one edge.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable

from .core import (AgreementForest, CutEvent, CutKind, Instance, InvariantViolation,
                   MafError, SolverState, extract_forest, find_minimal_incompatible,
                   steiner_from_nodes)
from .dual import DualCertificate, StepAccounting, certificate_of


class NotSiblingsInF1(MafError):
    pass


class TraceEventMissing(MafError):
    pass


CROSS_FINAL_CUT = "CrossTreeFinalCut"
CROSS_SOLO_CUT = "CrossTreeSoloCut"
PLAIN_MERGE = "PlainMerge"
MERGE_AFTER_CUT = "MergeAfterCut"
CUT_W_THEN_CUT_U = "CutWThenCutU"
STARRED = frozenset({CROSS_FINAL_CUT, MERGE_AFTER_CUT})


@dataclass(frozen=True)
class ResolvePairOutcome:
    kind: str
    deactivated: int
    cut_events: tuple[CutEvent, ...]
    u: int
    v: int


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    r: frozenset[int]
    b: frozenset[int]
    result: str
    before: StepAccounting
    after: StepAccounting
    endgame: StepAccounting | None
    retro: bool
    active_before: int
    active_after: int


# ---------------------------------------------------------------------------
# preprocessing


def preprocess(state: SolverState) -> None:
    """Merge pairs that are siblings in both forests; retire leaves alone in f2.

    Candidates live in two heaps and are re-validated when popped, so stale
    entries are harmless.  After each change only the neighbourhood of the
    touched leaf can produce new candidates.
    """
    inst = state.inst
    f1, f2 = state.f1, state.f2
    active = state.active
    pairs: list[tuple[int, int]] = []
    solos: list[int] = []

    def push_pair(f, lab, node):
        pr = f.pair_at(node)
        if pr is not None:
            a, b = lab[pr[0]], lab[pr[1]]
            heapq.heappush(pairs, (a, b) if a < b else (b, a))

    def touch(i: int, node: int) -> None:
        f = f1 if i == 1 else f2
        lab = inst.label_at(i)
        count = f.count
        x = node
        while count[x] < 2 and not f.is_comp_root(x):
            x = f.parent[x]
        if count[x] == 2:
            push_pair(f, lab, x)
        elif count[x] == 1 and i == 2:
            heapq.heappush(solos, lab[f.active_under(x)[0]])

    for i, f in ((1, f1), (2, f2)):
        lab = inst.label_at(i)
        count, ch, dele = f.count, f.children, f.deleted
        for v in f.index.order:
            if count[v] == 2 and ch[v]:
                a, b = ch[v]
                if a not in dele and b not in dele and count[a] == 1 and count[b] == 1:
                    push_pair(f, lab, v)
    for r in f2.comp_roots():
        if f2.count[r] == 1:
            solos.append(inst.label_at2[f2.active_under(r)[0]])
    heapq.heapify(solos)

    while True:
        acted = False
        while pairs:
            a, b = heapq.heappop(pairs)
            if a in active and b in active and f1.siblings(a, b) and f2.siblings(a, b):
                state.merge(a, b, check=False)
                touch(1, inst.leaf1[b])
                touch(2, inst.leaf2[b])
                acted = True
                break
        if acted:
            continue
        while solos:
            u = heapq.heappop(solos)
            if u in active and f2.solo(u):
                p1 = f1.p_leaf(u)
                if p1 is not None:
                    state.cut_leaf(1, u, CutKind.CUT_SINGLETON)
                state.deactivate(u)
                state.merges[u] = None
                state.dual.set_leaf(u, 1)
                if p1 is not None:
                    touch(1, p1)
                acted = True
                break
        if not acted:
            return


# ---------------------------------------------------------------------------
# resolving pairs and sets


def _in_component(f, node: int, root: int) -> bool:
    return f.comp_root(node) == root


def resolve_pair(state: SolverState, u: int, v: int) -> ResolvePairOutcome:
    """Resolve an active sibling pair of f1 (one call of ResolvePair)."""
    f1, f2 = state.f1, state.f2
    inst = state.inst
    if not f1.siblings(u, v):
        raise NotSiblingsInF1(f"{inst.labels[u]} and {inst.labels[v]} are not active siblings in f1")
    n_events = len(state.trace)
    ru, rv = f2.root_of(u), f2.root_of(v)
    if ru != rv:
        top = inst.idx2.lca(inst.leaf2[u], inst.leaf2[v])
        if _in_component(f2, top, ru):
            u, v = v, u
        elif not _in_component(f2, top, rv):
            u, v = min(u, v), max(u, v)
        actor = (u, v)
        if f2.count[f2.root_of(u)] > 1:
            state.cut_leaf(2, u, CutKind.FINAL_CUT, actor)
            state.cut_leaf(1, u, CutKind.FINAL_CUT, actor)
            kind = CROSS_FINAL_CUT
        else:
            state.cut_leaf(1, u, CutKind.CUT_SINGLETON, actor)
            kind = CROSS_SOLO_CUT
        state.deactivate(u)
        state.merges[u] = None
        state.dual.set_leaf(u, 1)
    elif f2.siblings(u, v):
        u, v = min(u, v), max(u, v)
        state.merge(u, v)
        kind = PLAIN_MERGE
    else:
        top = inst.idx2.lca(inst.leaf2[u], inst.leaf2[v])
        pu, pv = f2.p_leaf(u), f2.p_leaf(v)
        if pu == top:
            u, v = v, u
        elif pv != top:
            u, v = min(u, v), max(u, v)
        actor = (u, v)
        pnode = f2.p_leaf(u)
        lu = inst.leaf2[u]
        idx2 = inst.idx2
        off = [c for c in f2.children[pnode] if not idx2.is_ancestor(c, lu)]
        if len(off) != 1 or off[0] in f2.deleted or f2.count[off[0]] == 0:
            raise InvariantViolation("p2(u) has no active subtree off the u-v path")
        state.cut_subtree(2, off[0], CutKind.CUT_W, actor)
        state.dual.add_internal(2, pnode, -1)
        if f2.siblings(u, v):
            state.merge(u, v)
            state.dual.set_leaf(u, 1)
            kind = MERGE_AFTER_CUT
        else:
            state.cut_leaf(2, u, CutKind.CUT_U, actor)
            state.cut_leaf(1, u, CutKind.CUT_U, actor)
            state.deactivate(u)
            state.merges[u] = None
            state.dual.set_leaf(u, 1)
            kind = CUT_W_THEN_CUT_U
    if kind in STARRED:
        state.starred += 1
    return ResolvePairOutcome(kind, u, tuple(state.trace[n_events:]), u, v)


def _drain(state: SolverState, leaves: frozenset[int], top: int, keep: int) -> list[int]:
    """Resolve sibling pairs below f1 node ``top`` until ``keep`` remain."""
    while len(leaves & state.active) > keep:
        pair = state.least_sibling_pair_f1(top)
        if pair is None:
            raise InvariantViolation("no active sibling pair inside the set")
        resolve_pair(state, *pair)
    return sorted(leaves & state.active)


def resolve_set(state: SolverState, r: frozenset[int]) -> tuple[bool, tuple[int, int] | None]:
    """ResolveSet(R).  Returns (True, None) on success, (False, (r1, r2)) on
    failure with the two survivors still active."""
    inst = state.inst
    f2 = state.f2
    top = state.f1.lca(sorted(r))
    state.dual.add_internal(1, top, -1)
    starred0 = state.starred
    uh, vh = _drain(state, frozenset(r), top, 2)
    if f2.siblings(uh, vh):
        state.merge(uh, vh)
        state.dual.set_leaf(uh, 1)
        return True, None
    if f2.root_of(uh) != f2.root_of(vh) or not state.shared_tree_outgroup(uh, vh):
        state.retire(uh, CutKind.PROCEDURE_CUT, f2="loose", f1="loose")
        state.retire(vh, CutKind.PROCEDURE_CUT, f2="loose", f1="loose")
        return True, None
    if state.starred > starred0:
        resolve_pair(state, uh, vh)
        (last,) = [x for x in (uh, vh) if x in state.active]
        state.retire(last, CutKind.PROCEDURE_CUT, f2="strict", f1="loose")
        return True, None
    return False, (uh, vh)


# ---------------------------------------------------------------------------
# endgames after a failed ResolveSet


def handle_triplet_one_tree(state: SolverState, r1: int, r2: int, b: int) -> str:
    inst = state.inst
    idx2, l2 = inst.idx2, inst.leaf2
    top = idx2.lca_set([l2[r1], l2[r2], l2[b]])
    if idx2.lca(l2[b], l2[r1]) == top:
        r1, r2 = r2, r1
    x = idx2.lca(l2[r1], l2[b])
    if x == top:
        raise InvariantViolation("no triplet orientation b r | r")
    state.cut_subtree(2, x, CutKind.PROCEDURE_CUT)
    state.dual.add_internal(2, x, -1)
    state.retire(r2, CutKind.PROCEDURE_CUT, f2="strict", f1="strict")
    if state.f2.siblings(r1, b):
        state.merge(b, r1)
        state.dual.set_leaf(b, 1)
        return "4a-merge"
    state.retire(r1, CutKind.PROCEDURE_CUT, f2="strict", f1="strict")
    state.retire(b, CutKind.PROCEDURE_CUT, f2="strict", f1="loose")
    return "4a-cut"


def handle_triplet_three_trees(state: SolverState, r1: int, r2: int, b: int, starred0: int) -> str:
    f2 = state.f2
    state.retire(b, CutKind.PROCEDURE_CUT, f2="strict", f1="strict")
    solo1 = f2.solo(r1)
    state.retire(r1, CutKind.PROCEDURE_CUT, f2="loose", f1="strict")
    solo2 = f2.solo(r2)
    state.retire(r2, CutKind.PROCEDURE_CUT, f2="loose", f1="loose")
    if solo1 and solo2 and state.starred == starred0:
        retroactive_merge(state, r2)
        return "4b-retro"
    return "4b"


def handle_triplet_two_trees(state: SolverState, r1: int, r2: int, b: int, starred0: int) -> str:
    f2 = state.f2
    roots = {x: f2.root_of(x) for x in (r1, r2, b)}
    (uh,) = [x for x in roots if list(roots.values()).count(roots[x]) == 1]
    v1, v2 = sorted(x for x in roots if x != uh)
    uh_solo = f2.solo(uh)
    state.retire(uh, CutKind.PROCEDURE_CUT, f2="never" if uh_solo else "strict", f1="strict")
    if f2.siblings(v1, v2):
        if b not in (v1, v2):
            raise InvariantViolation("sibling survivors without the blue leaf")
        other = v2 if v1 == b else v1
        state.merge(b, other)
        state.dual.set_leaf(b, 1)
        return "4c-merge"
    resolve_pair(state, v1, v2)
    (last,) = [x for x in (v1, v2) if x in state.active]
    state.retire(last, CutKind.PROCEDURE_CUT, f2="strict", f1="loose")
    if uh_solo and state.starred == starred0:
        retroactive_merge(state, uh)
        return "4c-retro"
    return "4c"


def _leaf_reachable(f, start: int, inside: set[int]) -> bool:
    """Does the component part reachable from ``start`` avoiding ``inside`` hold a leaf?"""
    seen, stack = {start}, [start]
    par, ch, dele = f.parent, f.children, f.deleted
    while stack:
        x = stack.pop()
        if not ch[x]:
            return True
        nbrs = [c for c in ch[x] if c not in dele]
        if par[x] >= 0 and x not in dele:
            nbrs.append(par[x])
        for y in nbrs:
            if y not in inside and y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def retroactive_merge(state: SolverState, target: int) -> None:
    """Undo the separation between ``target`` and the leaf u' whose
    ResolvePair(u', v') cut off the set W containing ``target``."""
    inst = state.inst
    events = [e for e in state.trace
              if e.iteration == state.iteration and e.kind == CutKind.CUT_W and e.forest == 2
              and e.actor_pair is not None and target in e.cut_set_leaves]
    if not events:
        raise TraceEventMissing(f"no CutW event of this round contains {inst.labels[target]}")
    ev = events[-1]
    u_prime = ev.actor_pair[0]
    follow = [e for e in state.trace[state.trace.index(ev):]
              if e.kind == CutKind.CUT_U and e.deactivated == u_prime]
    if not follow:
        raise TraceEventMissing("the ResolvePair that cut W did not cut its own leaf")
    f2 = state.f2
    lab2 = inst.label_at2
    s_leaves: set[int] = set()
    for x in (target, u_prime):
        r = f2.root_of(x)
        if f2.count[r]:
            raise InvariantViolation("retroactive merge touches an active tree")
        s_leaves.update(lab2[v] for v in f2.leaves_under(r))
    for i in (1, 2):
        f = state.forest(i)
        if f.root_of(target) == f.root_of(u_prime):
            raise InvariantViolation("trees to merge are already one")
        leaf = inst.leaf(i)
        inside = steiner_from_nodes(f.index, [leaf[x] for x in s_leaves])
        before = len(f.deleted)
        for c in [c for c in f.deleted if c in inside and f.parent[c] in inside]:
            f.deleted.discard(c)
        for node in sorted(inside):
            edges = [(c, c) for c in f.children[node]]
            if f.parent[node] >= 0:
                edges.append((f.parent[node], node))
            for other, edge in edges:
                if other in inside or edge in f.deleted:
                    continue
                if _leaf_reachable(f, other, inside):
                    f.deleted.add(edge)
        f.recount()
        if len(f.deleted) != before - 1:
            raise InvariantViolation(
                f"retroactive merge changed forest {i} by {len(f.deleted) - before} edges")
        got = {inst.label_at(i)[v] for v in f.leaves_under(f.root_of(target))}
        if got != s_leaves:
            raise InvariantViolation("merged tree does not hold exactly the two old trees")
    state.retro_merges.append((state.iteration, target, u_prime))


# ---------------------------------------------------------------------------
# main loop


def run_red_blue_state(
    inst: Instance,
    on_iteration: Callable[[SolverState, IterationRecord], None] | None = None,
) -> tuple[SolverState, list[IterationRecord]]:
    state = SolverState(inst)
    records: list[IterationRecord] = []
    preprocess(state)
    while state.active:
        split = find_minimal_incompatible(state)
        if split is None:
            raise InvariantViolation("active set is compatible after preprocessing")
        state.iteration += 1
        before = state.accounting
        n_before = len(state.active)
        starred0 = state.starred
        top_r = state.f1.lca(sorted(split.r))
        top_b = state.f1.lca(sorted(split.b))
        ok, survivors = resolve_set(state, split.r)
        endgame = None
        result = "success"
        retro = False
        if not ok:
            r1, r2 = survivors
            state.dual.add_internal(1, top_r, +1)
            state.dual.add_internal(1, split.lca1_union, -1)
            (b,) = _drain(state, split.b, top_b, 1)
            n_trees = len({state.f2.root_of(x) for x in (r1, r2, b)})
            mark = state.accounting
            if n_trees == 1:
                result = handle_triplet_one_tree(state, r1, r2, b)
            elif n_trees == 3:
                result = handle_triplet_three_trees(state, r1, r2, b, starred0)
            else:
                result = handle_triplet_two_trees(state, r1, r2, b, starred0)
            retro = result.endswith("retro")
            endgame = state.accounting - mark
        preprocess(state)
        rec = IterationRecord(state.iteration, split.r, split.b, result, before,
                              state.accounting, endgame, retro, n_before, len(state.active))
        records.append(rec)
        if on_iteration is not None:
            on_iteration(state, rec)
    return state, records


def run_red_blue(
    inst: Instance,
    on_iteration: Callable[[SolverState, IterationRecord], None] | None = None,
) -> tuple[AgreementForest, DualCertificate, StepAccounting]:
    state, _ = run_red_blue_state(inst, on_iteration)
    return extract_forest(state), certificate_of(state), state.accounting
