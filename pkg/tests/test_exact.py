import pytest
from hypothesis import given, settings, strategies as st

from maf.core import Instance, augment_with_rho
from maf.dual import InstanceTooLarge
from maf.exact import (NotAPartition, exact_maf, exact_maf_naive, iter_set_partitions,
                       root_constrained_maf, verify_agreement_forest)
from maf.gen import make_instance, random_tree

CROSS = ("((a,b),(c,d));", "((a,c),(b,d));")


def test_bell_numbers():
    assert [sum(1 for _ in iter_set_partitions(n)) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]
    assert list(iter_set_partitions(3))[:2] == [[0, 0, 0], [0, 0, 1]]


def test_verify_examples():
    same = Instance.from_newick("((a,b),c);", "((a,b),c);")
    assert verify_agreement_forest(same, [["a", "b", "c"]])
    cross = Instance.from_newick(*CROSS)
    # both blocks need the T2 root
    assert not verify_agreement_forest(cross, [["a", "b"], ["c", "d"]])
    assert verify_agreement_forest(cross, [["a", "b"], ["c"], ["d"]])
    conflict = Instance.from_newick("((a,b),c);", "((a,c),b);")
    assert not verify_agreement_forest(conflict, [["a", "b", "c"]])


@pytest.mark.parametrize("blocks", [[["a", "b"]], [["a", "b"], ["b", "c", "d"]],
                                    [["a", "b"], ["c", "d"], []], [["a", "b", "c", "d", "e"]]])
def test_not_a_partition(blocks):
    with pytest.raises(NotAPartition):
        verify_agreement_forest(Instance.from_newick(*CROSS), blocks)


def test_exact_examples():
    assert exact_maf(Instance.from_newick(*CROSS)) == (2, [["a", "b"], ["c"], ["d"]])
    assert exact_maf(Instance.from_newick("((a,b),c);", "((a,c),b);")) == (1, [["a", "b"], ["c"]])
    t = random_tree(10, 5)
    assert exact_maf(Instance(t, t))[0] == 0


def test_cap():
    inst, _ = make_instance(11, 2, 0)
    with pytest.raises(InstanceTooLarge):
        exact_maf(inst)
    with pytest.raises(InstanceTooLarge):
        exact_maf(make_instance(13, 2, 0)[0], cap=20)
    assert exact_maf(inst, cap=11)[0] <= 2


def test_env_cap(monkeypatch):
    inst, _ = make_instance(6, 2, 0)
    monkeypatch.setenv("MAF_ORACLE_CAP", "5")
    with pytest.raises(InstanceTooLarge):
        exact_maf(inst)


# root-constrained values, frozen from the independent enumeration below
ROOTED = [
    ("((L4,((L0,L3),L2)),L1);", "(L3,(L2,(L0,(L4,L1))));", 2, 3),
    ("((L1,((L2,L4),L0)),L3);", "((((L1,L3),L2),L4),L0);", 1, 2),
    ("(L1,((L3,L4),(L2,L0)));", "((L4,((L0,L2),L1)),L3);", 1, 2),
]


@pytest.mark.parametrize("t1,t2,plain,rooted", ROOTED)
def test_rho_changes_value(t1, t2, plain, rooted):
    i = Instance.from_newick(t1, t2)
    assert exact_maf(i)[0] == plain
    assert exact_maf(augment_with_rho(i))[0] == rooted == root_constrained_maf(i)


@given(st.integers(2, 7), st.integers(0, 10**6), st.booleans())
@settings(max_examples=60, deadline=None)
def test_pruned_search_matches_full_enumeration(n, seed, rho):
    i = Instance(random_tree(n, seed), random_tree(n, seed + 3))
    if rho:
        i = augment_with_rho(i)
    value, blocks = exact_maf(i)
    assert value == exact_maf_naive(i)
    assert verify_agreement_forest(i, blocks)
    assert len(blocks) == value + 1
