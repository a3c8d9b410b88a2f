import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from maf.approx3 import run_three_approx_state
from maf.core import CutKind, Instance, SolverState, compatible_bruteforce
from maf.dual import (DualLedger, InstanceTooLarge, StepAccounting, compute_load, dual_objective,
                      dual_violations, lemma_ratio_check, verify_dual_feasibility)
from maf.gen import make_instance
from maf.redblue import run_red_blue_state


def test_objective_examples():
    inst = Instance.from_newick("((a,b),c);", "((a,c),b);")
    s = SolverState(inst)
    assert dual_objective(s) == 0
    c = inst.ids["c"]
    s.cut_leaf(2, c, CutKind.PROCEDURE_CUT)
    assert dual_objective(s) == 1       # two active f2 trees
    s.cut_leaf(1, c, CutKind.PROCEDURE_CUT)
    s.deactivate(c)
    s.dual.set_leaf(c, 1)
    assert dual_objective(s) == 1       # c's tree went inactive, y_c took over


def test_load_examples():
    inst = Instance.from_newick("((a,b),c);", "((a,c),b);")
    s = SolverState(inst)
    for k in range(1, 4):
        for sub in itertools.combinations(range(3), k):
            assert compute_load(s, sub) == 1
    a, b, c = (inst.ids[x] for x in "abc")
    ab = inst.t1.parent[inst.t1.leaf_of["a"]]
    s.dual.add_internal(1, ab, -1)
    assert compute_load(s, [a, b]) == 0
    assert compute_load(s, [a]) == 1    # a single leaf has no internal Steiner node
    s.cut_leaf(2, c, CutKind.PROCEDURE_CUT)
    s.cut_leaf(1, c, CutKind.PROCEDURE_CUT)
    s.deactivate(c)
    s.dual.set_leaf(c, 1)
    assert compute_load(s, [c]) == 1
    with pytest.raises(ValueError):
        compute_load(s, [])


def test_initial_state_feasible():
    inst, _ = make_instance(8, 3, 1)
    s = SolverState(inst)
    assert verify_dual_feasibility(s)
    assert lemma_ratio_check(s, Fraction(1, 2))


def test_adversarial_leaf_value_is_flagged():
    # y_a = 1 while a still shares an active f2 tree with b: {a,b} then has load 2
    inst = Instance.from_newick("((a,b),c);", "((a,b),c);")
    s = SolverState(inst)
    s.dual.set_leaf(inst.ids["a"], 1)
    assert not verify_dual_feasibility(s)
    assert (inst.ids["a"], inst.ids["b"]) in dual_violations(s)


def test_sign_constraints():
    led = DualLedger()
    led.add_internal(1, 3, +1)
    led.set_leaf(0, 2)
    assert len(led.sign_violations()) == 2
    led.add_internal(1, 3, -1)
    assert led.y_internal == {} and led.total == 2


def test_too_large():
    inst, _ = make_instance(14, 2, 0)
    with pytest.raises(InstanceTooLarge):
        verify_dual_feasibility(SolverState(inst))


def test_accounting_difference():
    assert StepAccounting(5, 3, 1) - StepAccounting(2, 2, 0) == StepAccounting(3, 1, 1)


def _loads_by_definition(state):
    """Independent loads: compute_load over every compatible subset."""
    n = state.inst.n
    bad = []
    for k in range(1, n + 1):
        for sub in itertools.combinations(range(n), k):
            if compatible_bruteforce(state.inst, sub) and compute_load(state, sub) > 1:
                bad.append(sub)
    return bad


@given(st.integers(3, 7), st.integers(1, 4), st.integers(0, 10**6), st.booleans())
@settings(max_examples=40, deadline=None)
def test_bitmask_verifier_matches_definition(n, k, seed, red_blue):
    inst, _ = make_instance(n, k, seed)
    states = []

    def grab(state, _):
        # check mid-run states, not only terminal ones
        states.append(sorted(dual_violations(state)) == sorted(_loads_by_definition(state)))

    if red_blue:
        run_red_blue_state(inst, grab)
    else:
        run_three_approx_state(inst, grab)
    assert all(states)


def test_lemma_ratio_check_examples():
    inst = Instance.from_newick("((a,b),c);", "((a,c),b);")
    s = run_three_approx_state(inst)
    assert lemma_ratio_check(s, Fraction(1, 3))
    s, _ = run_red_blue_state(inst)
    assert lemma_ratio_check(s, Fraction(1, 2))
    # a made-up accounting that would break the half bound
    s.dual.add_internal(1, inst.t1.root, -5)
    assert not lemma_ratio_check(s, Fraction(1, 2))
