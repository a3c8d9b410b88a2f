"""Greedy post-processing: merge two blocks whenever the union still gives
an agreement forest.

Blocks are kept sorted by their least label and pairs are scanned in
lexicographic order, restarting after every successful merge.  A pair that
fails once can never succeed later (merges only add owned nodes and never
change compatibility), so failures are memoised and the restart is cheap.
"""

from __future__ import annotations

from .core import AgreementForest, Instance, canonical_blocks, compatible_fast, steiner_from_nodes
from .exact import verify_agreement_forest


class InvalidInputForest(ValueError):
    pass


def greedy_merge(inst: Instance, forest: AgreementForest, check: bool = True) -> AgreementForest:
    if check and not verify_agreement_forest(inst, forest.blocks):
        raise InvalidInputForest("input partition is not an agreement forest")
    trees = [(inst.idx1, inst.leaf1), (inst.idx2, inst.leaf2)]
    blocks: dict[int, tuple[int, ...]] = {}
    owner: list[dict[int, int]] = [{}, {}]
    top: dict[int, list[int]] = {}
    for bid, blk in enumerate(forest.blocks):
        blocks[bid] = tuple(sorted(blk))
        top[bid] = []
        for t, (idx, leaf) in enumerate(trees):
            nodes = [leaf[x] for x in blk]
            top[bid].append(idx.lca_set(nodes))
            for v in steiner_from_nodes(idx, nodes):
                owner[t][v] = bid
    next_id = len(blocks)
    failed: set[tuple[int, int]] = set()

    def try_merge(a: int, b: int) -> list[list[int]] | None:
        paths = []
        for t, (idx, _) in enumerate(trees):
            hi = idx.lca(top[a][t], top[b][t])
            path = []
            for start in (top[a][t], top[b][t]):
                v = start
                while True:
                    o = owner[t].get(v)
                    if o is not None and o != a and o != b:
                        return None
                    path.append(v)
                    if v == hi:
                        break
                    v = idx.parent[v]
            paths.append(path)
        # the occupancy test is cheap, compatibility of the union is not
        if not compatible_fast(inst, blocks[a] + blocks[b]):
            return None
        return paths

    while True:
        order = sorted(blocks, key=lambda k: blocks[k][0])
        merged = False
        for i in range(len(order)):
            for j in range(i + 1, len(order)):
                a, b = order[i], order[j]
                if (a, b) in failed:
                    continue
                paths = try_merge(a, b)
                if paths is None:
                    failed.add((a, b))
                    continue
                new = next_id
                next_id += 1
                blocks[new] = tuple(sorted(blocks.pop(a) + blocks.pop(b)))
                top[new] = [trees[t][0].lca(top[a][t], top[b][t]) for t in (0, 1)]
                for t in (0, 1):
                    own = owner[t]
                    for v, o in list(own.items()):
                        if o == a or o == b:
                            own[v] = new
                    for v in paths[t]:
                        own[v] = new
                merged = True
                break
            if merged:
                break
        if not merged:
            break
    out = AgreementForest(canonical_blocks(blocks.values()))
    if check and not verify_agreement_forest(inst, out.blocks):
        raise AssertionError("greedy merge produced an invalid forest")
    return out
