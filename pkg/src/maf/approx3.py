"""The duality-based 3-approximation.

Each round takes the active sibling pair of f1 with the least labels and
either retires a leaf that is alone in f2, merges a pair that is also a
sibling pair in f2, or cuts both leaves off (after first detaching one
active subtree between them when they share an f2 tree with an outgroup).
"""

from __future__ import annotations

from typing import Callable

from .core import (AgreementForest, CutKind, InvariantViolation, Instance,
                   SolverState, extract_forest)
from .dual import DualCertificate, StepAccounting, certificate_of


def _first_subtree_between(state: SolverState, u: int, v: int) -> tuple[int, int]:
    """Walking from u up to lca2(u,v) and then from v, the first off-path
    child carrying active leaves.  Returns (that child, its parent)."""
    f = state.f2
    inst = state.inst
    top = inst.idx2.lca(inst.leaf2[u], inst.leaf2[v])
    sides = []
    for start in (inst.leaf2[u], inst.leaf2[v]):
        steps = []
        prev, x = start, f.parent[start]
        while x != top:
            steps.append((prev, x))
            prev, x = x, f.parent[x]
        sides.append(steps)
    # u's side bottom-up, then v's side top-down
    for prev, x in sides[0] + sides[1][::-1]:
        for c in f.children[x]:
            if c != prev and c not in f.deleted and f.count[c] > 0:
                return c, x
    raise InvariantViolation("no active subtree hangs between u and v")


def step(state: SolverState, u: int, v: int) -> str:
    """One round of the main loop on the f1 sibling pair (u, v)."""
    f2 = state.f2
    solo = [x for x in (u, v) if f2.solo(x)]
    if solo:
        x = solo[0]
        state.cut_leaf(1, x, CutKind.CUT_SINGLETON)
        state.deactivate(x)
        state.merges[x] = None
        state.dual.set_leaf(x, 1)
        return "solo"
    if f2.siblings(u, v):
        state.merge(u, v)
        return "merge"
    if state.shared_tree_outgroup(u, v):
        c, p = _first_subtree_between(state, u, v)
        state.cut_subtree(2, c, CutKind.CUT_W)
        state.dual.add_internal(2, p, -1)
    top1 = state.inst.idx1.lca(state.inst.leaf1[u], state.inst.leaf1[v])
    for x in (u, v):
        state.cut_leaf(2, x, CutKind.PROCEDURE_CUT)
        state.cut_leaf(1, x, CutKind.PROCEDURE_CUT, strict=False)
        state.deactivate(x)
        state.merges[x] = None
        state.dual.set_leaf(x, 1)
    state.dual.add_internal(1, top1, -1)
    return "cut"


def run_three_approx(
    inst: Instance,
    on_iteration: Callable[[SolverState, str], None] | None = None,
) -> tuple[AgreementForest, DualCertificate, StepAccounting]:
    state = run_three_approx_state(inst, on_iteration)
    return extract_forest(state), certificate_of(state), state.accounting


def run_three_approx_state(
    inst: Instance,
    on_iteration: Callable[[SolverState, str], None] | None = None,
) -> SolverState:
    state = SolverState(inst)
    while len(state.active) >= 2:
        state.iteration += 1
        pair = state.least_sibling_pair_f1()
        if pair is None:
            raise InvariantViolation("no active sibling pair in f1")
        what = step(state, *pair)
        if on_iteration is not None:
            on_iteration(state, what)
    if state.active:
        (last,) = state.active
        state.deactivate(last)
        state.merges[last] = None
        state.dual.set_leaf(last, 1)
    return state
