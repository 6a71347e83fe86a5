"""Command-line entry point: ``coop-ftpl {run,sweep,compare,verify,alpha}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, config_to_dict, load_config
from .experiments import SweepSpec, compare_cooperation, paired_difference, run_sweep
from .graph import (GraphTooLargeError, greedy_independent_set, independence_number_exact,
                    read_graph_file)

log = logging.getLogger("coop_ftpl")


def _spec(args, vary=None, values=()) -> SweepSpec:
    cfg = load_config(args.config)
    changes = {}
    if args.alpha1 is not None:
        changes["alpha1"] = args.alpha1
    if args.mode is not None:
        changes["mode"] = args.mode
    if changes:
        cfg = cfg.replace(**changes)
    n_seeds = args.seeds if args.seeds is not None else cfg.seeds
    return SweepSpec(base=config_to_dict(cfg), vary=vary, values=tuple(values),
                     n_seeds=n_seeds, first_seed=args.seed,
                     base_dir=os.path.dirname(os.path.abspath(args.config)))


def _print_rows(arm, rows):
    for r in rows:
        print(f"{arm:>7} point={r.point:<10} seeds={r.n_seeds:<3} "
              f"regret={r.mean_final_regret:.2f} +- {r.stderr:.2f} "
              f"bound={r.bound_value:.1f} ratio={r.ratio:.4f} "
              f"oracle_calls={r.mean_oracle_calls:.0f}")


def _parse_values(vary, text):
    items = [s.strip() for s in text.split(",") if s.strip()]
    if vary == "horizon":
        return [int(float(s)) for s in items]
    if vary == "q":
        return [float(s) for s in items]
    return items


def cmd_run(args) -> int:
    rows = run_sweep(_spec(args), args.out, args.jobs)
    _print_rows("coop", rows)
    return 0


def cmd_sweep(args) -> int:
    spec = _spec(args, args.vary, _parse_values(args.vary, args.values))
    _print_rows("coop", run_sweep(spec, args.out, args.jobs))
    return 0


def cmd_compare(args) -> int:
    values = _parse_values(args.vary, args.values) if args.vary else ()
    coop, base = compare_cooperation(_spec(args, args.vary, values), args.out, args.jobs)
    _print_rows("coop", coop)
    _print_rows("nocoop", base)
    for c, b in zip(coop, base):
        d = paired_difference(c, b)
        print(f"paired point={c.point}: nocoop - coop = {d.mean:.2f} +- {d.stderr:.2f}")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(quick=args.quick, seed=args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_alpha(args) -> int:
    g = read_graph_file(args.graph, args.n)
    try:
        print(independence_number_exact(g, args.cap))
    except GraphTooLargeError as exc:
        if not args.greedy:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        log.warning("%s; printing greedy lower bound", exc)
        print(len(greedy_independent_set(g)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coop-ftpl", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int, default=0, help="first root seed")
        sp.add_argument("--seeds", type=int, default=None, help="number of seeds")
        sp.add_argument("--out", default=None, help="directory for CSV and metadata")
        sp.add_argument("--alpha1", type=int, default=None)
        sp.add_argument("--mode", choices=("independent", "shared"), default=None)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        return sp

    sp = experiment("run", "run one config over its seeds")
    sp.set_defaults(func=cmd_run)
    sp = experiment("sweep", "vary one dimension of a config")
    sp.add_argument("--vary", choices=("horizon", "q", "graph"), required=True)
    sp.add_argument("--values", required=True, help="comma-separated sweep points")
    sp.set_defaults(func=cmd_sweep)
    sp = experiment("compare", "cooperative vs no-sharing runs on paired seeds")
    sp.add_argument("--vary", choices=("horizon", "q", "graph"), default=None)
    sp.add_argument("--values", default="")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("verify", help="run the lemma property suites")
    sp.add_argument("--quick", action="store_true", help="10x fewer samples, looser tolerances")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("alpha", help="independence number of a graph file")
    sp.add_argument("graph")
    sp.add_argument("--n", type=int, default=None, help="number of agents")
    sp.add_argument("--cap", type=int, default=24)
    sp.add_argument("--greedy", action="store_true", help="fall back to the greedy bound")
    sp.set_defaults(func=cmd_alpha)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
