"""Maximum agreement forests of two rooted binary trees.

Two primal-dual approximation algorithms (a 3-approximation and the
Red-Blue 2-approximation) that return an agreement forest together with a
feasible dual solution certifying its quality, plus an exact brute-force
oracle for small instances and the random instance generator used in the
benchmarks.
"""

from .core import Instance, SolverState, augment_with_rho, extract_forest
from .newick import LabeledTree, parse_newick, write_newick
from .approx3 import run_three_approx
from .redblue import run_red_blue
from .exact import exact_maf, verify_agreement_forest

__all__ = [
    "Instance", "SolverState", "augment_with_rho", "extract_forest",
    "LabeledTree", "parse_newick", "write_newick",
    "run_three_approx", "run_red_blue", "exact_maf", "verify_agreement_forest",
]
