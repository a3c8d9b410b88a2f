from fractions import Fraction

from hypothesis import given, settings, strategies as st

from maf.approx3 import run_three_approx, run_three_approx_state
from maf.core import CutKind, Instance, extract_forest, valid_tuple_violations
from maf.dual import lemma_ratio_check, verify_dual_feasibility
from maf.exact import exact_maf, verify_agreement_forest
from maf.gen import make_instance


def test_identical_trees():
    inst = Instance.from_newick("((a,b),c);", "((a,b),c);")
    forest, cert, acc = run_three_approx(inst)
    assert forest.blocks == ((0, 1, 2),)
    assert acc.delta_p == 0 and cert.objective == 0


def test_three_leaf_conflict():
    inst = Instance.from_newick("((a,b),c);", "((a,c),b);")
    forest, cert, acc = run_three_approx(inst)
    assert exact_maf(inst)[0] == 1
    assert 1 <= forest.value <= 3
    assert cert.objective <= 1
    assert verify_agreement_forest(inst, forest.blocks)


def test_subtree_nearest_u_is_cut():
    # u,v are an f1 cherry; in T2 both {w} (next to u) and {x} (next to v)
    # hang between them, and y is an outgroup, so W = {w}
    inst = Instance.from_newick("(((u,v),(w,x)),y);", "(((u,w),(x,v)),y);")
    s = run_three_approx_state(inst)
    cut_w = [e for e in s.trace if e.kind == CutKind.CUT_W]
    assert cut_w and cut_w[0].cut_set_leaves == frozenset({inst.ids["w"]})
    t2 = inst.t2
    assert s.dual.y_internal.get((2, t2.parent[t2.leaf_of["u"]])) == -1


def test_final_leaf_gets_y_one():
    inst = Instance.from_newick("((a,b),c);", "((a,b),c);")
    s = run_three_approx_state(inst)
    assert not s.active
    assert s.dual.y_leaf == {inst.ids["c"]: 1}
    assert s.merges[inst.ids["a"]] == inst.ids["b"]


@given(st.integers(3, 9), st.integers(0, 4), st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_every_iteration_feasible(n, k, seed):
    inst, _ = make_instance(n, k, seed)
    seen = []

    def check(state, _what):
        seen.append((verify_dual_feasibility(state), valid_tuple_violations(state),
                     lemma_ratio_check(state, Fraction(1, 3))))

    forest, cert, acc = run_three_approx(inst, check)
    assert all(ok and not bad and ratio for ok, bad, ratio in seen)
    assert acc.delta_p == forest.value
    opt = exact_maf(inst)[0]
    assert cert.objective <= opt <= forest.value <= 3 * opt


def test_partition_same_from_both_forests():
    inst, _ = make_instance(40, 8, 3)
    s = run_three_approx_state(inst)
    f = extract_forest(s)   # raises when f1 and f2 disagree
    assert verify_agreement_forest(inst, f.blocks)
