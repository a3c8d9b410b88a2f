"""Compare both approximation algorithms with the exact optimum on random
small instances and print a tally of observed ratios and endgame kinds.

    python3 scripts/oracle_sweep.py --count 2000 --max-n 10
"""

import argparse
from collections import Counter
from fractions import Fraction

from maf.approx3 import run_three_approx_state
from maf.core import Instance, extract_forest
from maf.dual import verify_dual_feasibility
from maf.exact import exact_maf
from maf.gen import make_instance, random_tree
from maf.redblue import run_red_blue_state


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--max-n", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    kinds: Counter[str] = Counter()
    worst = {"redblue": Fraction(1), "three": Fraction(1)}
    problems = 0
    for i in range(args.count):
        seed = args.seed + i
        n = 3 + i % (args.max_n - 2)
        if i % 2:
            inst = make_instance(n, 1 + i % 5, seed)[0]
        else:
            inst = Instance(random_tree(n, seed), random_tree(n, seed + 10**6))
        opt = exact_maf(inst)[0]
        s_rb, recs = run_red_blue_state(inst)
        kinds.update(r.result for r in recs)
        s_3 = run_three_approx_state(inst)
        for name, s, bound in (("redblue", s_rb, 2), ("three", s_3, 3)):
            v = extract_forest(s).value
            if not (s.dual_objective() <= opt <= v <= bound * opt) or not verify_dual_feasibility(s):
                problems += 1
                print(f"problem: seed={seed} n={n} {name} value={v} opt={opt} dual={s.dual_objective()}")
            if opt:
                worst[name] = max(worst[name], Fraction(v, opt))
    print(f"instances={args.count} problems={problems}")
    print("worst value/opt:", {k: float(v) for k, v in worst.items()})
    for k, c in sorted(kinds.items()):
        print(f"  {k:10s} {c}")


if __name__ == "__main__":
    main()
