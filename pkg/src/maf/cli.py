"""Command-line front end.

    maf solve  --algo redblue --in1 a.nwk --in2 b.nwk [--greedy] [--cert out.json] [--rho]
    maf exact  --in1 a.nwk --in2 b.nwk [--cap 10] [--allow-large] [--rho]
    maf gen    --n 50 --spr 5 --seed 1 --out1 a.nwk --out2 b.nwk
    maf verify --in1 a.nwk --in2 b.nwk --cert out.json
    maf bench  --runs 100 --n 2000 --spr 50 --seed 0 --csv out.csv [--greedy] [--jobs 4]

Exit status is 0 on success and 2 on any input or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import multiprocessing
import os
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .approx3 import run_three_approx_state
from .core import (AgreementForest, ForestView, Instance, MafError, SolverState, augment_with_rho,
                   component_blocks, extract_forest)
from .dual import DualLedger, InstanceTooLarge, ledger_violations
from .exact import NotAPartition, exact_maf, oracle_cap, verify_agreement_forest
from .gen import make_instance, random_spr, random_tree
from .newick import NewickError, parse_newick, write_newick
from .redblue import run_red_blue_state
from .refine import greedy_merge

CERT_FORMAT = 1
FEASIBILITY_LIMIT = 12


class UsageError(Exception):
    """Bad input; reported on stderr with exit status 2."""


# ---------------------------------------------------------------------------
# certificates


def _run(inst: Instance, algo: str) -> SolverState:
    if algo == "redblue":
        state, _ = run_red_blue_state(inst)
        return state
    if algo == "three":
        return run_three_approx_state(inst)
    raise UsageError(f"unknown algorithm {algo!r}")


def _event_json(inst: Instance, e) -> dict:
    tree = inst.tree(e.forest)
    return {
        "iteration": e.iteration,
        "kind": e.kind.value,
        "forest": e.forest,
        "edge": tree.node_path(e.edge_id),
        "cut_set": inst.names(sorted(e.cut_set_leaves)),
        "actor_pair": None if e.actor_pair is None else inst.names(e.actor_pair),
        "deactivated": None if e.deactivated is None else inst.labels[e.deactivated],
    }


def build_certificate(inst: Instance, state: SolverState, algo: str,
                      greedy: AgreementForest | None = None, seed: int | None = None,
                      rho: bool = False) -> dict:
    forest = extract_forest(state)
    y = state.dual
    acc = state.accounting
    cert = {
        "format": CERT_FORMAT,
        "digest": inst.digest(),
        "algorithm": algo,
        "rho": rho,
        "seed": seed,
        "n": inst.n,
        "blocks": forest.named(inst),
        "value": forest.value,
        "deleted": {
            str(i): sorted(inst.tree(i).node_path(c) for c in state.forest(i).deleted)
            for i in (1, 2)
        },
        "y_leaf": {inst.labels[x]: w for x, w in sorted(y.y_leaf.items())},
        "y_internal": {
            str(i): dict(sorted((inst.tree(i).node_path(v), w)
                                for (t, v), w in y.y_internal.items() if t == i))
            for i in (1, 2)
        },
        "dual": acc.delta_d,
        "delta_p": acc.delta_p,
        "starred_ops": acc.starred_ops,
        "retro_merges": [[it, inst.labels[a], inst.labels[b]] for it, a, b in state.retro_merges],
        "trace": [_event_json(inst, e) for e in state.trace],
    }
    if greedy is not None:
        cert["greedy_blocks"] = greedy.named(inst)
        cert["greedy_value"] = greedy.value
    return cert


def dump_certificate(cert: dict) -> str:
    return json.dumps(cert, indent=1) + "\n"


def _components(inst: Instance, i: int, deleted_paths: list[str]) -> list[list[str]]:
    """Leaf sets of the pieces left after deleting the listed edges."""
    tree = inst.tree(i)
    f = ForestView(tree, inst.index(i), inst.leaf(i), range(inst.n))
    for p in deleted_paths:
        c = tree.node_at(p)
        if c == tree.root:
            raise KeyError(p)
        f.delete_edge(c)
    f.recount()
    return sorted(inst.names(b) for b in component_blocks(f, inst.label_at(i)) if b)


def certificate_problems(inst: Instance, cert: dict) -> list[str]:
    """Everything wrong with ``cert`` for ``inst``; empty means it checks out."""
    bad: list[str] = []
    if cert.get("digest") != inst.digest():
        return ["instance digest does not match the input trees"]
    try:
        if not verify_agreement_forest(inst, cert["blocks"]):
            bad.append("blocks are not an agreement forest")
        if "greedy_blocks" in cert and not verify_agreement_forest(inst, cert["greedy_blocks"]):
            bad.append("greedy blocks are not an agreement forest")
    except NotAPartition as exc:
        return [f"blocks: {exc}"]
    if cert["value"] != len(cert["blocks"]) - 1:
        bad.append("value is not #blocks - 1")
    blocks = sorted(sorted(b) for b in cert["blocks"])
    for i in (1, 2):
        try:
            comps = _components(inst, i, cert["deleted"][str(i)])
        except KeyError as exc:
            bad.append(f"tree {i}: no edge at path {exc}")
            continue
        if comps != blocks:
            bad.append(f"tree {i}: deleted edges do not cut out the blocks")
    if cert["delta_p"] != len(cert["deleted"]["2"]):
        bad.append("delta_p is not the number of deleted T2 edges")
    # rebuild y; at termination no active tree is left, so D = sum(y) - 1
    ledger = DualLedger()
    try:
        for lab, w in cert["y_leaf"].items():
            ledger.set_leaf(inst.ids[lab], w)
        for t, entries in cert["y_internal"].items():
            tree = inst.tree(int(t))
            for path, w in entries.items():
                v = tree.node_at(path)
                if not tree.children[v]:
                    raise KeyError(path)
                ledger.add_internal(int(t), v, w)
    except KeyError as exc:
        return bad + [f"dual values reference an unknown label or node {exc}"]
    if ledger.total - 1 != cert["dual"]:
        bad.append(f"dual {cert['dual']} does not match the y values (sum - 1 = {ledger.total - 1})")
    bad += [f"sign: {s}" for s in ledger.sign_violations()]
    if cert["dual"] > len(cert["blocks"]) - 1:
        bad.append("dual exceeds the primal value")
    if inst.n <= FEASIBILITY_LIMIT:
        viol = ledger_violations(inst, ledger, [], FEASIBILITY_LIMIT, stop_at_first=True)
        if viol:
            bad.append(f"load of compatible set {inst.names(viol[0])} exceeds 1")
    return bad


# ---------------------------------------------------------------------------
# subcommands


def _read_instance(path1: str, path2: str, rho: bool) -> Instance:
    trees = []
    for path in (path1, path2):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise UsageError(f"{path}: {exc.strerror}") from exc
        try:
            trees.append(parse_newick(text))
        except NewickError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    try:
        inst = Instance(*trees)
        return augment_with_rho(inst) if rho else inst
    except MafError as exc:
        raise UsageError(f"{path1}, {path2}: {exc}") from exc


def cmd_solve(args) -> int:
    inst = _read_instance(args.in1, args.in2, args.rho)
    state = _run(inst, args.algo)
    greedy = greedy_merge(inst, extract_forest(state)) if args.greedy else None
    cert = build_certificate(inst, state, args.algo, greedy, rho=args.rho)
    if args.cert:
        Path(args.cert).write_text(dump_certificate(cert))
    value = greedy.value if greedy is not None else cert["value"]
    print(f"value={value} dual={cert['dual']} cuts={cert['delta_p']}")
    return 0


def cmd_exact(args) -> int:
    inst = _read_instance(args.in1, args.in2, args.rho)
    try:
        value, blocks = exact_maf(inst, cap=args.cap, allow_large=args.allow_large)
    except InstanceTooLarge as exc:
        raise UsageError(str(exc)) from exc
    print(f"value={value}")
    for b in blocks:
        print(" ".join(b))
    return 0


def cmd_gen(args) -> int:
    if args.n < 1 or args.spr < 0:
        raise UsageError("--n must be >= 1 and --spr >= 0")
    t1 = random_tree(args.n, args.seed)
    try:
        t2 = random_spr(t1, args.spr, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    Path(args.out1).write_text(write_newick(t1) + "\n")
    Path(args.out2).write_text(write_newick(t2) + "\n")
    return 0


def cmd_verify(args) -> int:
    try:
        cert = json.loads(Path(args.cert).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"{args.cert}: {exc}") from exc
    inst = _read_instance(args.in1, args.in2, bool(cert.get("rho")))
    try:
        problems = certificate_problems(inst, cert)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{args.cert}: missing or malformed field {exc}") from exc
    if problems:
        for p in problems:
            print(f"FAIL {p}", file=sys.stderr)
        return 2
    note = "" if inst.n <= FEASIBILITY_LIMIT else " (load check skipped, n too large)"
    print(f"ok value={cert['value']} dual={cert['dual']}{note}")
    return 0


# ---------------------------------------------------------------------------
# benchmark


BENCH_FIELDS = ["seed", "n", "k", "primal", "dual", "ratio", "post_greedy", "greedy_ratio",
                "gap", "exact"]


@dataclass(frozen=True)
class BenchTask:
    seed: int
    n: int
    k: int
    greedy: bool
    cert_dir: str | None
    oracle: bool


@dataclass(frozen=True)
class BenchRow:
    seed: int
    n: int
    k: int
    primal: int
    dual: int
    ratio: float
    post_greedy: int | None
    wall: float
    exact: int | None = None

    @property
    def greedy_ratio(self) -> float | None:
        return None if self.post_greedy is None else self.post_greedy / max(self.dual, 1)

    def cells(self) -> list[str]:
        return [str(self.seed), str(self.n), str(self.k), str(self.primal), str(self.dual),
                _fmt(self.ratio), _opt(self.post_greedy), _fmt(self.greedy_ratio),
                str(self.k - self.dual), _opt(self.exact)]


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def _opt(x) -> str:
    return "" if x is None else str(x)


def bench_one(task: BenchTask) -> BenchRow:
    t0 = time.perf_counter()
    inst, k = make_instance(task.n, task.k, task.seed)
    # the generator's bound k holds for the root-constrained objective
    inst = augment_with_rho(inst)
    state, _ = run_red_blue_state(inst)
    forest = extract_forest(state)
    greedy = greedy_merge(inst, forest) if task.greedy else None
    dual = state.dual_objective()
    exact = exact_maf(inst, allow_large=False)[0] if task.oracle else None
    wall = time.perf_counter() - t0
    if task.cert_dir:
        cert = build_certificate(inst, state, "redblue", greedy, seed=task.seed, rho=True)
        Path(task.cert_dir, f"run_{task.seed}.json").write_text(dump_certificate(cert))
    return BenchRow(task.seed, task.n, k, forest.value, dual, forest.value / max(dual, 1),
                    None if greedy is None else greedy.value, wall, exact)


def _p90(xs: list[float]) -> float:
    if len(xs) == 1:
        return float(xs[0])
    return statistics.quantiles(xs, n=10, method="inclusive")[8]


def summary_rows(rows: list[BenchRow]) -> list[list[str]]:
    out = []
    cols = {
        "primal": [r.primal for r in rows],
        "dual": [r.dual for r in rows],
        "ratio": [r.ratio for r in rows],
        "post_greedy": [r.post_greedy for r in rows if r.post_greedy is not None],
        "greedy_ratio": [r.greedy_ratio for r in rows if r.greedy_ratio is not None],
        "gap": [r.k - r.dual for r in rows],
        "exact": [r.exact for r in rows if r.exact is not None],
    }
    for name, fn in (("mean", statistics.fmean), ("p50", statistics.median),
                     ("p90", _p90)):
        row = [name, "", ""]
        for c in BENCH_FIELDS[3:]:
            xs = cols[c]
            row.append(_fmt(fn(xs)) if xs else "")
        out.append(row)
    return out


def cmd_bench(args) -> int:
    if args.runs < 1 or args.n < 3 or args.spr < 0 or args.jobs < 1:
        raise UsageError("need --runs >= 1, --n >= 3, --spr >= 0, --jobs >= 1")
    if args.oracle and args.n + 1 > oracle_cap():
        raise UsageError(f"--oracle needs n + 1 <= {oracle_cap()}")
    if args.cert_dir:
        os.makedirs(args.cert_dir, exist_ok=True)
    tasks = [BenchTask(args.seed + r, args.n, args.spr, args.greedy, args.cert_dir, args.oracle)
             for r in range(args.runs)]
    if args.jobs == 1:
        rows = [bench_one(t) for t in tasks]
    else:
        with multiprocessing.get_context("spawn").Pool(args.jobs) as pool:
            rows = pool.map(bench_one, tasks, chunksize=1)   # map keeps task order
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_FIELDS)
    for r in rows:
        w.writerow(r.cells())
    for r in summary_rows(rows):
        w.writerow(r)
    Path(args.csv).write_text(buf.getvalue())
    # timings vary run to run, so they stay out of the deterministic CSV
    with open(args.csv + ".timing", "w") as fh:
        fh.write("seed,wall_s\n")
        for r in rows:
            fh.write(f"{r.seed},{r.wall:.3f}\n")
    print(f"runs={len(rows)} mean_ratio={statistics.fmean(r.ratio for r in rows):.4f} "
          f"max_wall={max(r.wall for r in rows):.2f}s")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maf", description="Maximum agreement forest solvers")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="run an approximation algorithm")
    p.add_argument("--algo", choices=["redblue", "three"], default="redblue")
    p.add_argument("--in1", required=True)
    p.add_argument("--in2", required=True)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--cert")
    p.add_argument("--rho", action="store_true", help="add a shared pseudo-leaf above both roots")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="exact optimum by enumeration (small inputs)")
    p.add_argument("--in1", required=True)
    p.add_argument("--in2", required=True)
    p.add_argument("--cap", type=int)
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--rho", action="store_true")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("gen", help="write a random tree and an SPR-perturbed copy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--spr", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out1", required=True)
    p.add_argument("--out2", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="check a certificate against its instance")
    p.add_argument("--in1", required=True)
    p.add_argument("--in2", required=True)
    p.add_argument("--cert", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="seeded Red-Blue benchmark")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--spr", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cert-dir")
    p.add_argument("--oracle", action="store_true", help="also compute the exact optimum")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:   # argparse already printed the message
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"maf {args.cmd}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
