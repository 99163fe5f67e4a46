"""Command-line entry points.

    gridmga validate <case>
    gridmga scale <case> --factor F [--out FILE]
    gridmga mga <case> --epsilon 0.05 --count 100 --seed S ...
    gridmga hitl <alt-set-file> --ranking <file|fn> --variant v2 ...
    gridmga eval <alt-set-file> --fn u4 [--threshold 0.9]
    gridmga experiment --config <file> --out <dir>
    gridmga serve [--listen HOST:PORT] [--data-dir DIR]

Case arguments accept a path to a MATPOWER-style .m file, a native JSON
network document, or the name of a bundled case (case57, case118).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import cases
from .evaluation import EVAL_IDS, EvalContext, RankingFeedback, evaluate, rank_alternatives
from .hitl import VARIANTS, HitlParams, run_hitl_round
from .mga import AlternativeSet, generate_mga_set
from .milp import ReconfigModel, SwitchingOptions, solve_least_cost
from .network import (parse_matpower_case, scale_line_capacities, serialize_network,
                      validate_network)


def _load_network(ref: str):
    path = Path(ref)
    if path.exists():
        return parse_matpower_case(path.read_text(), name=path.stem)
    if ref in cases.list_cases():
        return cases.load_case(ref)
    raise SystemExit(f"error: case {ref!r} is neither a file nor a bundled case "
                     f"(bundled: {', '.join(cases.list_cases())})")


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))


def _switching_options(args) -> SwitchingOptions:
    return SwitchingOptions(
        allow_line_switching=not args.no_line_switching,
        allow_busbar_splitting=args.busbar_splitting,
        max_line_actions=0 if args.no_line_switching else args.max_line_actions,
        max_busbar_actions=args.max_busbar_actions if args.busbar_splitting else 0,
    )


def cmd_validate(args) -> int:
    net = _load_network(args.case)
    report = validate_network(net)
    print(f"{net.name}: {len(net.buses)} buses, {len(net.branches)} branches, "
          f"{len(net.generators)} generators, "
          f"{len(net.splittable_substations)} split-capable substations")
    if report.ok:
        print("ok")
        return 0
    for violation in report:
        print(f"violation: {violation}")
    return 1


def cmd_scale(args) -> int:
    net = scale_line_capacities(_load_network(args.case), args.factor)
    _write(serialize_network(net), args.out)
    return 0


def cmd_mga(args) -> int:
    net = _load_network(args.case)
    if args.factor is not None:
        net = scale_line_capacities(net, args.factor)
    opts = _switching_options(args)
    from .solver import make_backend
    model = ReconfigModel(net, opts, backend=make_backend(args.solver))
    f_star, best = solve_least_cost(model, args.gap)
    logging.info("least-cost optimum %.4f, actions %s", f_star,
                 net.topology_actions(best.topology))
    alt_set = generate_mga_set(model, f_star, args.epsilon, args.count, args.seed,
                               gap=args.gap, workers=args.workers,
                               include_least_cost=best if args.include_least_cost else None)
    alt_set.options = opts
    alt_set.least_cost_topology = best.topology
    alt_set.gap = args.gap
    _write(json.dumps(alt_set.to_dict(), indent=2), args.out)
    return 0


def _context_for(alt_set: AlternativeSet, threshold: float) -> EvalContext:
    base = alt_set.least_cost_topology or alt_set.network.base_topology()
    return EvalContext.from_least_cost(alt_set.network, base, threshold)


def cmd_hitl(args) -> int:
    alt_set = AlternativeSet.from_dict(json.loads(Path(args.alt_set).read_text()))
    if args.ranking in EVAL_IDS:
        ctx = _context_for(alt_set, args.threshold)
        ranking = rank_alternatives(alt_set.alternatives, args.ranking, ctx, args.top_k)
    else:
        ranking = RankingFeedback.from_dict(json.loads(Path(args.ranking).read_text()))
    opts = alt_set.options or SwitchingOptions()
    from .solver import make_backend
    model = ReconfigModel(alt_set.network, opts, backend=make_backend(args.solver))
    model.ensure_epsilon_row(alt_set.f_star, alt_set.epsilon)
    params = HitlParams(variant=args.variant, tau=args.tau, a=args.a, b=args.b,
                        round_count=args.count)
    out_set = run_hitl_round(model, alt_set, ranking, params, args.seed,
                             gap=args.gap, workers=args.workers)
    _write(json.dumps(out_set.to_dict(), indent=2), args.out)
    return 0


def cmd_eval(args) -> int:
    alt_set = AlternativeSet.from_dict(json.loads(Path(args.alt_set).read_text()))
    ctx = _context_for(alt_set, args.threshold)
    values = [evaluate(args.fn, alt, ctx).value for alt in alt_set.alternatives]
    ranking = rank_alternatives(alt_set.alternatives, args.fn, ctx, args.top_k)
    payload = {
        "fn": args.fn,
        "values": {str(alt.index): v for alt, v in zip(alt_set.alternatives, values)},
        "ranking": ranking.to_dict(),
    }
    _write(json.dumps(payload, indent=2), args.out)
    return 0


def cmd_experiment(args) -> int:
    from .experiment import ExperimentConfig, export_report, run_experiment
    cfg = ExperimentConfig.from_file(args.config)
    report = run_experiment(cfg)
    written = export_report(report, args.out)
    for path in written:
        print(path)
    if report.failures:
        for seed, message in report.failures.items():
            print(f"seed {seed} failed: {message}", file=sys.stderr)
        return 1
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    host, _, port = args.listen.partition(":")
    app = create_app(data_dir=args.data_dir, workers=args.workers)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridmga", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for solver debug (stderr)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and check a case")
    p.add_argument("case")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scale", help="scale line capacities, emit native JSON")
    p.add_argument("case")
    p.add_argument("--factor", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scale)

    def add_solve_args(p, count_default):
        from .solver import BACKENDS, DEFAULT_BACKEND
        p.add_argument("--epsilon", type=float, default=0.05)
        p.add_argument("--count", type=int, default=count_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--gap", type=float, default=0.001)
        p.add_argument("--solver", choices=sorted(BACKENDS), default=DEFAULT_BACKEND)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out")

    p = sub.add_parser("mga", help="generate a diversity round")
    p.add_argument("case")
    add_solve_args(p, 100)
    p.add_argument("--factor", type=float, default=None,
                   help="optionally scale capacities before solving")
    p.add_argument("--max-line-actions", type=int, default=3)
    p.add_argument("--max-busbar-actions", type=int, default=3)
    p.add_argument("--no-line-switching", action="store_true")
    p.add_argument("--busbar-splitting", action="store_true")
    p.add_argument("--include-least-cost", action="store_true",
                   help="prepend the least-cost solution to the set")
    p.set_defaults(func=cmd_mga)

    p = sub.add_parser("hitl", help="run a feedback-guided round from a set document")
    p.add_argument("alt_set")
    p.add_argument("--ranking", required=True,
                   help="ranking JSON file, or a metric id (u1..u6) for simulated feedback")
    p.add_argument("--variant", choices=VARIANTS, default="v2")
    p.add_argument("--tau", type=float, default=0.15)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.9)
    add_solve_args(p, 100)
    p.set_defaults(func=cmd_hitl)

    p = sub.add_parser("eval", help="evaluate and rank a set document")
    p.add_argument("alt_set")
    p.add_argument("--fn", choices=EVAL_IDS, required=True)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run the study pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--listen", default="127.0.0.1:8000")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--workers", type=int, default=2)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
