from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import maf.redblue as rb
from maf.core import (CutKind, Instance, SolverState, extract_forest, find_minimal_incompatible,
                      valid_tuple_violations)
from maf.dual import lemma_ratio_check, verify_dual_feasibility
from maf.exact import exact_maf, verify_agreement_forest
from maf.gen import make_instance, random_tree
from maf.redblue import (CROSS_FINAL_CUT, CROSS_SOLO_CUT, CUT_W_THEN_CUT_U, MERGE_AFTER_CUT,
                         PLAIN_MERGE, STARRED, NotSiblingsInF1, TraceEventMissing, preprocess,
                         resolve_pair, resolve_set, run_red_blue, run_red_blue_state)

from conftest import FIG3, FIG4, RETRO_4B, inst as make


def lab(i, *names):
    return [i.ids[x] for x in names]


# ---------------------------------------------------------------------------
# preprocessing

def test_preprocess_identical_trees():
    i = Instance.from_newick("((a,b),(c,d));", "((a,b),(c,d));")
    s = SolverState(i)
    preprocess(s)
    assert not s.active
    assert len(s.f2.deleted) == 0 and s.dual_objective() == 0


def test_preprocess_no_change_on_conflict():
    i = Instance.from_newick("((a,b),c);", "((a,c),b);")
    s = SolverState(i)
    preprocess(s)
    assert s.active == {0, 1, 2} and not s.trace and s.dual.total == 0


def test_preprocess_retires_lone_f2_leaf():
    i = Instance.from_newick("((a,c),b);", "((a,b),c);")
    s = SolverState(i)
    c = i.ids["c"]
    s.cut_leaf(2, c, CutKind.PROCEDURE_CUT)
    d0 = s.dual_objective()
    preprocess(s)
    assert c not in s.active and s.dual.y_leaf[c] == 1
    assert i.leaf1[c] in s.f1.deleted
    assert s.dual_objective() == d0 and len(s.f2.deleted) == 1


# ---------------------------------------------------------------------------
# ResolvePair: one micro-instance per accounting row.  u is always the leaf
# that ends up deactivated.

TABLE = [
    # (kind, T1, T2, subtree pre-cut in f2, dP, dD)
    (CROSS_FINAL_CUT, "((u,v),(w,x));", "((u,w),(v,x));", ["u", "w"], 1, 1),
    (CROSS_SOLO_CUT, "((u,v),w);", "((u,v),w);", ["u"], 0, 0),
    (PLAIN_MERGE, "((u,v),w);", "((u,v),w);", None, 0, 0),
    (MERGE_AFTER_CUT, "((u,v),w);", "((u,w),v);", None, 1, 1),
    (CUT_W_THEN_CUT_U, "((u,v),(w,x));", "(((u,w),x),v);", None, 2, 1),
]


@pytest.mark.parametrize("kind,t1,t2,pre,dp,dd", TABLE, ids=[r[0] for r in TABLE])
def test_resolve_pair_accounting(kind, t1, t2, pre, dp, dd):
    i = Instance.from_newick(t1, t2)
    s = SolverState(i)
    if pre:
        s.cut(2, lab(i, *pre), CutKind.PROCEDURE_CUT)
    before = s.accounting
    out = resolve_pair(s, *lab(i, "u", "v"))
    delta = s.accounting - before
    assert out.kind == kind
    assert (delta.delta_p, delta.delta_d) == (dp, dd)
    assert out.deactivated == i.ids["u"] and i.ids["u"] not in s.active
    starred = kind in STARRED
    assert delta.starred_ops == int(starred)
    assert (dp == 2 * dd - 1) == starred
    assert not valid_tuple_violations(s)
    if pre is None:
        # a hand-made pre-cut carries no dual update, so only fresh states
        # are valid starting points
        assert verify_dual_feasibility(s)


def test_resolve_pair_events():
    i = Instance.from_newick("((u,v),(w,x));", "(((u,w),x),v);")
    s = SolverState(i)
    out = resolve_pair(s, *lab(i, "u", "v"))
    kinds = [e.kind for e in out.cut_events]
    assert kinds == [CutKind.CUT_W, CutKind.CUT_U, CutKind.CUT_U]
    cut_w = out.cut_events[0]
    assert cut_w.cut_set_leaves == frozenset(lab(i, "w")) and cut_w.actor_pair == tuple(lab(i, "u", "v"))
    assert all(e.edge_id in s.forest(e.forest).deleted for e in out.cut_events)


def test_resolve_pair_relabels_toward_lca_side():
    # the lca of u,v in T2 lies in v's tree after the pre-cut, so v is the one cut
    i = Instance.from_newick("((u,v),(w,x));", "(((v,w),x),u);")
    s = SolverState(i)
    out = resolve_pair(s, *lab(i, "u", "v"))
    assert out.kind == CUT_W_THEN_CUT_U and out.deactivated == i.ids["v"]


def test_resolve_pair_requires_f1_siblings():
    i = Instance.from_newick("((u,v),w);", "((u,v),w);")
    with pytest.raises(NotSiblingsInF1):
        resolve_pair(SolverState(i), *lab(i, "u", "w"))


# ---------------------------------------------------------------------------
# ResolveSet

def test_resolve_set_outgroup_missing_succeeds():
    i = Instance.from_newick("((a,b),c);", "((a,c),b);")
    s = SolverState(i)
    before = s.accounting
    ok, surv = resolve_set(s, frozenset(lab(i, "a", "b")))
    d = s.accounting - before
    assert ok and surv is None
    assert s.active == {i.ids["c"]}
    assert 2 * d.delta_d >= d.delta_p


def test_resolve_set_final_merge():
    i = Instance.from_newick("(((a,b),c),d);", "(((a,b),d),c);")
    s = SolverState(i)
    before = s.accounting
    ok, _ = resolve_set(s, frozenset(lab(i, "a", "b")))
    d = s.accounting - before
    assert ok and (d.delta_p, d.delta_d) == (0, 0)
    assert s.merges[i.ids["a"]] == i.ids["b"] and s.dual.y_leaf[i.ids["a"]] == 1


def test_resolve_set_fail():
    i = Instance.from_newick("((L0,L1),(L3,(L4,L2)));", "((L1,L0),((L3,L2),L4));")
    s = SolverState(i)
    preprocess(s)
    sp = find_minimal_incompatible(s)
    assert sp.r == frozenset(lab(i, "L2", "L4")) and sp.b == frozenset(lab(i, "L3"))
    ok, surv = resolve_set(s, sp.r)
    assert not ok and sorted(surv) == lab(i, "L2", "L4")
    assert set(surv) <= s.active


# ---------------------------------------------------------------------------
# endgames

def _records(i):
    return run_red_blue_state(i)[1]


def _sweep(predicate, limit=4000):
    for seed in range(limit):
        n = 5 + seed % 8
        i = make_instance(n, 1 + seed % 4, seed)[0] if seed % 2 else \
            Instance(random_tree(n, seed), random_tree(n, seed + 7777))
        for r in _records(i):
            if predicate(r):
                yield i, r


@pytest.mark.parametrize("result,dp,dd", [("4a-merge", 2, 2), ("4a-cut", 4, 3)])
def test_one_tree_endgame_accounting(result, dp, dd):
    hits = 0
    for _, r in _sweep(lambda r: r.result == result, 400):
        assert (r.endgame.delta_p, r.endgame.delta_d) == (dp, dd)
        hits += 1
    assert hits > 0


def test_two_tree_endgame_accounting():
    hits = set()
    for _, r in _sweep(lambda r: r.result.startswith("4c"), 600):
        e = r.endgame
        if r.result == "4c-merge":
            assert e.delta_d == 1 + e.delta_p and e.delta_p in (0, 1)
        elif r.result == "4c":
            c = e.starred_ops
            assert e.delta_p == e.delta_d + (1 - c)
        else:
            # the merge gives back the one uncovered cut
            assert e.starred_ops == 0 and e.delta_p == e.delta_d
        hits.add(r.result)
    assert hits == {"4c", "4c-merge", "4c-retro"}


def test_three_tree_endgame_accounting():
    hits = 0
    for _, r in _sweep(lambda r: r.result == "4b", 3000):
        assert r.endgame.delta_p == r.endgame.delta_d
        hits += 1
    assert hits > 0


def test_three_tree_retro_merge():
    i = make(RETRO_4B)
    state, recs = run_red_blue_state(i)
    retro = [r for r in recs if r.result == "4b-retro"]
    assert len(retro) == 1
    assert retro[0].endgame.starred_ops == 0
    f = extract_forest(state)
    assert verify_agreement_forest(i, f.blocks)
    assert f.value <= 2 * exact_maf(i)[0]


# ---------------------------------------------------------------------------
# retroactive merge on the two figure instances

@pytest.mark.parametrize("pair,partner", [(FIG3, "r1"), (FIG4, "b")], ids=["fig3", "fig4"])
def test_figure_retroactive_merge(pair, partner, monkeypatch):
    i = make(pair)
    counts = []
    real = rb.retroactive_merge

    def spy(state, target):
        before = (len(state.f1.deleted), len(state.f2.deleted))
        real(state, target)
        counts.append((before, (len(state.f1.deleted), len(state.f2.deleted)),
                       state.retro_merges[-1]))

    monkeypatch.setattr(rb, "retroactive_merge", spy)
    state, recs = run_red_blue_state(i)
    assert [r.result for r in recs] == ["4c-retro"]
    (before, after, (_, target, u_prime)), = counts
    assert after == (before[0] - 1, before[1] - 1)
    assert sorted([i.labels[target], i.labels[u_prime]]) == sorted(["a", partner])
    f = extract_forest(state)
    assert sorted(["a", partner]) in f.named(i)
    assert verify_agreement_forest(i, f.blocks)
    assert verify_dual_feasibility(state)
    assert state.accounting.delta_p == f.value == 4
    assert exact_maf(i)[0] == 3 and state.dual_objective() == 2


def test_retroactive_merge_needs_trace():
    i = Instance.from_newick("((a,b),c);", "((a,c),b);")
    s = SolverState(i)
    with pytest.raises(TraceEventMissing):
        rb.retroactive_merge(s, 0)


# ---------------------------------------------------------------------------
# whole runs

def test_identical_trees():
    i = Instance.from_newick("((a,b),(c,d));", "((a,b),(c,d));")
    forest, cert, acc = run_red_blue(i)
    assert forest.value == 0 and cert.objective == 0 and acc.delta_p == 0


def test_three_leaf_conflict():
    i = Instance.from_newick("((a,b),c);", "((a,c),b);")
    forest, cert, _ = run_red_blue(i)
    assert forest.value in (1, 2) and cert.objective >= 1


@given(st.integers(3, 10), st.integers(0, 5), st.integers(0, 10**6), st.booleans())
@settings(max_examples=150, deadline=None)
def test_run_invariants(n, k, seed, independent):
    i = Instance(random_tree(n, seed), random_tree(n, seed + 1)) if independent else make_instance(n, k, seed)[0]
    problems = []

    def check(state, rec):
        if rec.active_after >= rec.active_before:
            problems.append("no progress")
        problems.extend(valid_tuple_violations(state))
        d = rec.after - rec.before
        if 2 * d.delta_d < d.delta_p:
            problems.append(f"iteration ratio {d}")
        if not verify_dual_feasibility(state):
            problems.append("infeasible dual")

    forest, cert, acc = run_red_blue(i, check)
    assert not problems
    opt = exact_maf(i)[0]
    assert cert.objective <= opt <= forest.value <= 2 * opt
    assert acc.delta_p == forest.value
    s, _ = run_red_blue_state(i)
    assert lemma_ratio_check(s, Fraction(1, 2))
