"""Command-line entry point: ``pspi <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys


from . import bench
from .bounds import zeta_bound
from .modelio import load_pmdp, parse_policy, save_pmdp, serialize_pmdp, serialize_policy
from .polynomial import to_fraction
from .pmdp import ModelError, instantiate, skeleton_mdp
from .spibb import count, mle_mdp, parse_dataset, serialize_dataset, spibb_policy, uncertainty_set


def _valuation(text: str | None, m) -> dict:
    v = {}
    for item in (text or "").replace(",", " ").split():
        name, _, val = item.partition("=")
        v[name] = float(to_fraction(val))
    missing = [x for x in m.params if x not in v]
    if missing:
        raise ModelError(f"valuation misses parameters {missing}; pass --valuation x=0.1,...")
    return v


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_solve(args) -> int:
    from .solve import policy_iteration, value_iteration

    m = load_pmdp(args.model)
    mdp = instantiate(m, _valuation(args.valuation, m))
    vt = value_iteration(mdp, tol=args.tol)
    print(f"V({m.states[m.initial]}) = {vt.value(m.initial)!r}")
    if args.table:
        pi, _ = policy_iteration(mdp)
        lines = ["state,V,best_action"]
        for s in range(m.n_states):
            best = m.actions[int(pi[s].argmax())] if pi[s].any() else ""
            lines.append(f"{m.states[s]},{vt.V[s]!r},{best}")
        _write(args.table, "\n".join(lines) + "\n")
    return 0


def _improve(args, parametric: bool) -> int:
    m = load_pmdp(args.model)
    skel = skeleton_mdp(m)
    data = parse_dataset(_read(args.data), m.states, m.actions)
    pi_b = parse_policy(_read(args.baseline), m.states, m.actions)
    c = count(data, m.n_states, m.n_actions)
    pruned = None
    if args.pruned:
        pm = load_pmdp(args.pruned)
        pruned = skel.enabled & ~skeleton_mdp(pm).enabled
    if parametric:
        from .parametric import label_classes, pooled_counts

        c = pooled_counts(c, label_classes(m))
    mle = mle_mdp(c, skel, None if pruned is None else ~pruned)
    u = uncertainty_set(c, args.n_wedge, skel)
    pi = spibb_policy(mle, pi_b, u, pruned=pruned, one_shot=args.one_shot)
    from .solve import policy_evaluation

    v_i = policy_evaluation(mle, pi).value(m.initial)
    v_b = policy_evaluation(mle, pi_b).value(m.initial)
    _write(args.out, serialize_policy(pi, m.states, m.actions))
    print(f"uncertain pairs: {len(u)}", file=sys.stderr)
    print(f"MLE performance of improved policy: {v_i!r}", file=sys.stderr)
    print(f"MLE performance of baseline: {v_b!r}", file=sys.stderr)
    if args.zeta:
        v_max = float(m.rmax) / (1 - float(m.gamma))
        z = zeta_bound(args.n_wedge, args.delta, v_max, float(m.gamma), v_b - v_i,
                       m.n_states, m.n_actions)
        print(f"zeta: {z!r}", file=sys.stderr)
    return 0


def cmd_prune(args) -> int:
    m = load_pmdp(args.model)
    if args.method == "game":
        from .game import aval_cval_prune

        pm, res = aval_cval_prune(m)
    else:
        from .smt import smt_prune

        kind = "aval-q" if args.method == "smt-aval-q" else "q-q"
        pm, res = smt_prune(m, kind, args.solver_cmd, args.timeout, workers=args.workers)
    save_pmdp(pm, args.out)
    _write(args.report, res.report(m))
    return 0


def cmd_smt_export(args) -> int:
    from .smt import export_query

    m = load_pmdp(args.model)
    s, a = m.state_index(args.pair[0]), m.action_index(args.pair[1])
    if (s, a) not in m.trans:
        raise ModelError(f"pair ({args.pair[0]}, {args.pair[1]}) is not enabled")
    _write(args.out, export_query(m, s, a, args.query))
    return 0


def cmd_bench(args) -> int:
    from .harness import sample_dataset

    spec = bench.get_spec(args.name)
    m = spec.build(args.gamma)
    if args.out:
        _write(args.out, serialize_pmdp(m))
    if args.spec:
        _write(None if args.spec == "-" else args.spec, bench.dims_report(spec, m))
    if args.baseline_out or args.data_out:
        true = spec.true_mdp(m)
        pi_b = bench.behavior_policy(true, spec.alpha if args.alpha is None else args.alpha)
        if args.baseline_out:
            _write(args.baseline_out, serialize_policy(pi_b, m.states, m.actions))
        if args.data_out:
            d = sample_dataset(true, pi_b, args.steps, args.seed, spec.horizon, spec.name)
            _write(args.data_out, serialize_dataset(d, m.states, m.actions))
    return 0


def cmd_experiment(args) -> int:
    from .harness import emit_csv, emit_raw_csv, parse_config, run_experiment

    cfg = parse_config(_read(args.config))
    if args.workers:
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    points, seeds = run_experiment(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    emit_csv(points, os.path.join(args.out_dir, "results.csv"))
    emit_raw_csv(cfg, seeds, os.path.join(args.out_dir, "raw_seeds.csv"))
    failed = [r for r in seeds if r.error]
    print(f"{len(seeds) - len(failed)}/{len(seeds)} seeds completed", file=sys.stderr)
    for r in failed:
        print(f"seed {r.seed}: {r.error}", file=sys.stderr)
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pspi", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", help="optimal value of an instantiated model")
    s.add_argument("--model", required=True)
    s.add_argument("--valuation", help="comma-separated name=value list")
    s.add_argument("--table", help="write V and the greedy action per state as CSV ('-' for stdout)")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_solve)

    for name, parametric in (("spibb", False), ("pspibb", True)):
        s = sub.add_parser(name, help=f"{name.upper()} improved policy from a dataset")
        s.add_argument("--model", required=True)
        s.add_argument("--data", required=True)
        s.add_argument("--baseline", required=True)
        s.add_argument("--n-wedge", type=int, required=True)
        s.add_argument("--one-shot", action="store_true")
        s.add_argument("--pruned", help="pruned model whose removed pairs are never played")
        s.add_argument("--zeta", action="store_true")
        s.add_argument("--delta", type=float, default=0.05)
        s.add_argument("--out", help="policy file (default stdout)")
        s.set_defaults(func=lambda a, par=parametric: _improve(a, par))

    s = sub.add_parser("prune", help="remove provably suboptimal state-action pairs")
    s.add_argument("--model", required=True)
    s.add_argument("--method", choices=("game", "smt", "smt-aval-q"), default="game")
    s.add_argument("--solver-cmd", default="z3 -in")
    s.add_argument("--timeout", type=float, default=60.0)
    s.add_argument("--workers", type=int, default=4)
    s.add_argument("--out", required=True)
    s.add_argument("--report", default="-")
    s.set_defaults(func=cmd_prune)

    s = sub.add_parser("smt-export", help="write one pruning query as SMT-LIB 2")
    s.add_argument("--model", required=True)
    s.add_argument("--pair", nargs=2, metavar=("STATE", "ACTION"), required=True)
    s.add_argument("--query", choices=("aval-q", "q-q"), required=True)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_smt_export)

    s = sub.add_parser("bench", help="build a benchmark model")
    s.add_argument("--name", required=True, choices=sorted(bench.SPECS))
    s.add_argument("--out")
    s.add_argument("--spec", nargs="?", const="-", help="write the benchmark report")
    s.add_argument("--gamma", type=to_fraction)
    s.add_argument("--alpha", type=float)
    s.add_argument("--baseline-out")
    s.add_argument("--data-out")
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("experiment", help="run a data-efficiency experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ModelError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
