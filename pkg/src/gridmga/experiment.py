"""End-to-end study harness.

Runs the full pipeline per random seed: least-cost solve, diversity round,
then one feedback-guided round per (metric, encoding variant) using
simulated rankings. Collects metric bounds, per-alternative rows, medians,
and the valuable / more-valuable classification, and exports plot-ready
tables.

Congestion is a per-case configuration (a uniform capacity factor applied
before solving); no default factor is assumed.
"""

from __future__ import annotations

import csv
import json
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import (EVAL_DIRECTIONS, EVAL_IDS, MINIMIZE, EvalContext, evaluate,
                         rank_alternatives)
from .hitl import HitlParams, run_hitl_round
from .mga import AlternativeSet, generate_mga_set
from .milp import EvalBound, ReconfigModel, SwitchingOptions, solve_eval_optimum, solve_least_cost
from .network import parse_matpower_case, scale_line_capacities

log = logging.getLogger("gridmga.experiment")

ROUND_VALUE_DECIMALS = 9  # metric values are compared after rounding to 1e-9


@dataclass
class ExperimentConfig:
    case_path: str
    congestion_factor: float
    epsilon: float = 0.05
    alt_count: int = 100
    top_k: int = 10
    seeds: tuple[int, ...] = (0, 1, 2, 3)
    gap: float = 0.001
    tau: float = 0.15
    a: float = 1.0
    b: float = 1.0
    fn_ids: tuple[str, ...] = EVAL_IDS
    variants: tuple[str, ...] = ("baseline", "v1", "v2")
    allow_line_switching: bool = True
    allow_busbar_splitting: bool = False
    max_line_actions: int = 3
    max_busbar_actions: int = 0
    reassign_loads: bool = True
    overload_threshold: float = 0.9
    set_requires_actions: bool = False
    hitl_count: int | None = None  # defaults to alt_count
    workers: int = 1
    solver: str = "highs"
    tau_sweep: tuple[float, ...] = (0.05, 0.15, 0.75, 0.95)
    ab_ratios: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    reduced_alt_count: int = 10
    reduced_top_k: int = 3

    def __post_init__(self):
        if self.alt_count < 1 or self.top_k < 1 or not self.seeds:
            raise ValueError("counts and seeds must be >= 1")
        if self.top_k > self.alt_count:
            raise ValueError("top_k cannot exceed alt_count")
        unknown = [f for f in self.fn_ids if f not in EVAL_DIRECTIONS]
        if unknown:
            raise ValueError(f"unknown evaluation functions {unknown}")

    @property
    def switching_options(self) -> SwitchingOptions:
        return SwitchingOptions(
            allow_line_switching=self.allow_line_switching,
            allow_busbar_splitting=self.allow_busbar_splitting,
            max_line_actions=self.max_line_actions,
            max_busbar_actions=self.max_busbar_actions,
            reassign_loads=self.reassign_loads,
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        for key in ("seeds", "fn_ids", "variants", "tau_sweep", "ab_ratios"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        for key in ("seeds", "fn_ids", "variants", "tau_sweep", "ab_ratios"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class AltRow:
    seed: int
    round: str                  # mga | hitl-<variant>@<fn>
    feedback_fn: str | None
    variant: str | None
    index: int
    cost: float
    slack: float
    unique: bool
    bits: tuple[int, ...]
    hamming_ref: int | None = None
    eval_values: dict[str, float] = field(default_factory=dict)

    @property
    def actions(self) -> int:
        return sum(self.bits)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "round": self.round, "feedback_fn": self.feedback_fn,
            "variant": self.variant, "index": self.index, "cost": self.cost,
            "slack": self.slack, "unique": self.unique, "actions": self.actions,
            "hamming_ref": self.hamming_ref, "eval_values": dict(self.eval_values),
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    f_star: float
    least_cost_actions: list[tuple[str, int]]
    bounds: dict[str, EvalBound]
    rows: list[AltRow]
    failures: dict[int, str] = field(default_factory=dict)  # seed -> diagnostics

    def rows_for(self, seed: int, round_label: str) -> list[AltRow]:
        return [r for r in self.rows if r.seed == seed and r.round == round_label]

    def round_labels(self, seed: int) -> list[str]:
        seen: list[str] = []
        for r in self.rows:
            if r.seed == seed and r.round not in seen:
                seen.append(r.round)
        return seen

    def median(self, seed: int, round_label: str, fn_id: str) -> float | None:
        values = [r.eval_values[fn_id] for r in self.rows_for(seed, round_label)
                  if fn_id in r.eval_values]
        return statistics.median(values) if values else None

    def stats(self, seed: int, round_label: str, fn_id: str) -> dict | None:
        values = [r.eval_values[fn_id] for r in self.rows_for(seed, round_label)
                  if fn_id in r.eval_values]
        if not values:
            return None
        return {"median": statistics.median(values), "min": min(values), "max": max(values)}

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "f_star": self.f_star,
            "least_cost_actions": [list(a) for a in self.least_cost_actions],
            "bounds": {fn: b.to_dict() for fn, b in self.bounds.items()},
            "rows": [r.to_dict() for r in self.rows],
            "failures": {str(k): v for k, v in self.failures.items()},
        }


def _evaluate_round(alt_set: AlternativeSet, ctx: EvalContext, fns: tuple[str, ...],
                    seed: int, round_label: str, feedback_fn: str | None,
                    variant: str | None) -> list[AltRow]:
    rows = []
    for alt in alt_set.alternatives:
        values = {fn: evaluate(fn, alt, ctx).value for fn in fns}
        rows.append(AltRow(
            seed=seed, round=round_label, feedback_fn=feedback_fn, variant=variant,
            index=alt.index, cost=alt.cost, slack=alt.slack, unique=alt.unique,
            bits=alt.topology.bits, eval_values=values,
        ))
    return rows


def _assign_hamming_reference(rows: list[AltRow]) -> None:
    """Per seed, the reference is the generated alternative with minimal
    cumulative overload; each row gets its switching distance to it."""
    seeds = {r.seed for r in rows}
    for seed in seeds:
        seed_rows = [r for r in rows if r.seed == seed and "u4" in r.eval_values]
        if not seed_rows:
            continue
        ref = min(seed_rows, key=lambda r: (r.eval_values["u4"], r.round, r.index))
        for r in rows:
            if r.seed == seed:
                r.hamming_ref = sum(a != b for a, b in zip(r.bits, ref.bits))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """The full study pipeline. A failing seed is recorded and skipped;
    remaining seeds still run."""
    from .solver import make_backend
    net = parse_matpower_case(Path(cfg.case_path).read_text(), name=Path(cfg.case_path).stem)
    net = scale_line_capacities(net, cfg.congestion_factor)
    opts = cfg.switching_options
    model = ReconfigModel(net, opts, backend=make_backend(cfg.solver))

    f_star, least_cost = solve_least_cost(model, cfg.gap)
    ctx = EvalContext.from_least_cost(net, least_cost.topology, cfg.overload_threshold,
                                      cfg.set_requires_actions)
    log.info("least-cost optimum %.2f with actions %s", f_star,
             net.topology_actions(least_cost.topology))

    bounds = {}
    for fn in cfg.fn_ids:
        if fn == "u6":
            continue  # no direct optimization form
        bounds[fn] = solve_eval_optimum(net, opts, fn, f_star, cfg.epsilon, cfg.gap,
                                        context=ctx, backend=make_backend(cfg.solver))
        log.info("metric %s optimum %.6g within the near-optimal set", fn, bounds[fn].value)

    # u4/u5 are cheap (flows are already solved) and feed the distance
    # reference, so every round reports them.
    mga_fns = tuple(dict.fromkeys(tuple(cfg.fn_ids) + ("u4", "u5")))
    rows: list[AltRow] = []
    failures: dict[int, str] = {}
    hitl_count = cfg.hitl_count or cfg.alt_count
    for seed in cfg.seeds:
        try:
            mga_set = generate_mga_set(model, f_star, cfg.epsilon, cfg.alt_count, seed,
                                       gap=cfg.gap, workers=cfg.workers)
            rows.extend(_evaluate_round(mga_set, ctx, mga_fns, seed, "mga", None, None))
            for fn in cfg.fn_ids:
                ranking = rank_alternatives(mga_set.alternatives, fn, ctx, cfg.top_k)
                for variant in cfg.variants:
                    params = HitlParams(variant=variant, tau=cfg.tau, a=cfg.a, b=cfg.b,
                                        round_count=hitl_count)
                    hitl_set = run_hitl_round(model, mga_set, ranking, params, seed,
                                              gap=cfg.gap, workers=cfg.workers)
                    label = f"hitl-{variant}@{fn}"
                    eval_fns = tuple(dict.fromkeys((fn, "u4", "u5")))
                    rows.extend(_evaluate_round(hitl_set, ctx, eval_fns, seed, label,
                                                fn, variant))
        except Exception as exc:  # keep other seeds alive
            log.exception("seed %d failed", seed)
            failures[seed] = f"{type(exc).__name__}: {exc}"

    _assign_hamming_reference(rows)
    return ExperimentReport(cfg, f_star, net.topology_actions(least_cost.topology),
                            bounds, rows, failures)


def classify_valuable(report: ExperimentReport) -> dict:
    """Classification per (seed, metric): the diversity round is valuable when
    its metric values are not all identical; a feedback round is more
    valuable when it contains a strictly better alternative or more
    alternatives matching the best diversity value."""
    out: dict = {}
    cfg = report.config
    for seed in cfg.seeds:
        mga_rows = report.rows_for(seed, "mga")
        if not mga_rows:
            continue
        seed_out: dict = {}
        for fn in cfg.fn_ids:
            mga_values = [round(r.eval_values[fn], ROUND_VALUE_DECIMALS) for r in mga_rows
                          if fn in r.eval_values]
            if not mga_values:
                continue
            minimize = EVAL_DIRECTIONS[fn] == MINIMIZE
            best = min(mga_values) if minimize else max(mga_values)
            fn_out = {"mga_valuable": len(set(mga_values)) > 1, "variants": {}}
            for variant in cfg.variants:
                hitl_rows = report.rows_for(seed, f"hitl-{variant}@{fn}")
                hitl_values = [round(r.eval_values[fn], ROUND_VALUE_DECIMALS)
                               for r in hitl_rows if fn in r.eval_values]
                if not hitl_values:
                    continue
                if minimize:
                    strictly = any(v < best for v in hitl_values)
                else:
                    strictly = any(v > best for v in hitl_values)
                as_good = sum(1 for v in hitl_values if v == best)
                mga_at_best = sum(1 for v in mga_values if v == best)
                fn_out["variants"][variant] = {
                    "more_valuable": strictly or as_good > mga_at_best,
                    "strictly_better": strictly,
                    "matches_best": as_good,
                }
            seed_out[fn] = fn_out
        out[seed] = seed_out
    return out


def export_report(report: ExperimentReport, directory: str | Path) -> list[Path]:
    """Write the per-alternative table, a JSON summary, and plot-ready series
    (cost-vs-metric and switching-distance-vs-metric scatters)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    cfg = report.config
    fns = list(dict.fromkeys(tuple(cfg.fn_ids) + ("u4", "u5")))

    table = directory / "alternatives.csv"
    with table.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "round", "feedback_fn", "variant", "index", "cost",
                         "slack", "unique", "actions", "hamming_ref"]
                        + [f"eval_{fn}" for fn in fns])
        for r in report.rows:
            writer.writerow([r.seed, r.round, r.feedback_fn or "", r.variant or "",
                             r.index, f"{r.cost:.6f}", f"{r.slack:.6f}", int(r.unique),
                             r.actions, "" if r.hamming_ref is None else r.hamming_ref]
                            + ["" if fn not in r.eval_values else f"{r.eval_values[fn]:.9f}"
                               for fn in fns])
    written.append(table)

    summary = directory / "summary.json"
    payload = {
        "config": cfg.to_dict(),
        "f_star": report.f_star,
        "least_cost_actions": [list(a) for a in report.least_cost_actions],
        "bounds": {fn: b.to_dict() for fn, b in report.bounds.items()},
        "valuable": classify_valuable(report),
        "failures": report.failures,
        "statistics": {
            str(seed): {label: {fn: report.stats(seed, label, fn) for fn in fns}
                        for label in report.round_labels(seed)}
            for seed in cfg.seeds
        },
    }
    summary.write_text(json.dumps(payload, indent=2))
    written.append(summary)

    for fn in fns:
        scatter = directory / f"pareto_{fn}.csv"
        with scatter.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "round", "cost", "value", "unique"])
            for r in report.rows:
                if fn in r.eval_values:
                    writer.writerow([r.seed, r.round, f"{r.cost:.6f}",
                                     f"{r.eval_values[fn]:.9f}", int(r.unique)])
        written.append(scatter)
        distance = directory / f"distance_{fn}.csv"
        with distance.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["seed", "round", "hamming_ref", "value", "unique"])
            for r in report.rows:
                if fn in r.eval_values and r.hamming_ref is not None:
                    writer.writerow([r.seed, r.round, r.hamming_ref,
                                     f"{r.eval_values[fn]:.9f}", int(r.unique)])
        written.append(distance)
    return written
