import pytest
from hypothesis import given, settings, strategies as st

from maf.core import Instance, augment_with_rho
from maf.exact import exact_maf
from maf.gen import InvalidSize, TooSmall, make_instance, random_spr, random_tree
from maf.newick import write_newick

# frozen outputs; they pin the generator and RNG streams
GOLDEN = [
    (6, 1, 0, "((L0,((L2,L3),(L4,L5))),L1);", "((L0,(L2,(L4,L5))),(L1,L3));"),
    (8, 2, 42, "(L3,((L2,L5),(L6,((L4,L0),(L1,L7)))));", "((L3,(L6,(L4,L0))),((L2,L5),(L1,L7)));"),
]


@pytest.mark.parametrize("n,k,seed,t1,t2", GOLDEN)
def test_golden(n, k, seed, t1, t2):
    inst, bound = make_instance(n, k, seed)
    assert (write_newick(inst.t1), write_newick(inst.t2), bound) == (t1, t2, k)


def test_sizes():
    assert write_newick(random_tree(1, 9)) == "L0;"
    with pytest.raises(InvalidSize):
        random_tree(0, 1)
    t = random_tree(2000, 3)
    internal = [v for v in range(t.n_nodes) if t.children[v]]
    assert len(internal) == 1999 and all(len(t.children[v]) == 2 for v in internal)
    with pytest.raises(TooSmall):
        random_spr(random_tree(2, 0), 1, 0)


def test_determinism_and_stream_split():
    assert write_newick(random_tree(30, 7)) == write_newick(random_tree(30, 7))
    a, _ = make_instance(30, 2, 7)
    b, _ = make_instance(30, 9, 7)
    assert write_newick(a.t1) == write_newick(b.t1)


def test_zero_moves():
    t = random_tree(12, 4)
    assert write_newick(random_spr(t, 0, 4)) == write_newick(t)
    inst, bound = make_instance(12, 0, 4)
    assert bound == 0 and write_newick(inst.t1) == write_newick(inst.t2)


@given(st.integers(3, 40), st.integers(1, 10), st.integers(0, 2**40))
@settings(max_examples=60, deadline=None)
def test_spr_output_is_valid(n, k, seed):
    t = random_spr(random_tree(n, seed), k, seed)
    t.check()
    assert t.labels == frozenset(f"L{i}" for i in range(n))


@pytest.mark.parametrize("seed", range(50))
def test_one_move_is_distance_one(seed):
    t = random_tree(6, seed)
    inst = Instance(t, random_spr(t, 1, seed))
    assert exact_maf(augment_with_rho(inst))[0] <= 1


def test_bound_holds_after_two_moves():
    for seed in range(100):
        inst, k = make_instance(8, 2, seed)
        assert exact_maf(augment_with_rho(inst))[0] <= k
