"""Evaluation metrics that simulate operator feedback.

Six metrics score an alternative against concerns the optimizer does not
model: preference for specific switching actions or action sets, shallow
topologies, headroom below line limits (overload and quadratic loading),
and whether the switching actions can be executed one at a time without
passing through an inoperable intermediate state.

Metric ids u1..u6 are the stable wire names used by the CLI and service.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .dcflow import check_operating_state
from .network import Network, NetworkError, Topology, hamming_distance

if TYPE_CHECKING:  # structural use only; no runtime dependency on the solver layer
    from .milp import Alternative

log = logging.getLogger("gridmga.evaluation")

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

#: Optimization direction per metric id.
EVAL_DIRECTIONS = {
    "u1": MAXIMIZE,  # specific switching actions
    "u2": MAXIMIZE,  # specific switching set indicator
    "u3": MINIMIZE,  # topological depth
    "u4": MINIMIZE,  # cumulative overload
    "u5": MINIMIZE,  # cumulative quadratic load
    "u6": MAXIMIZE,  # switching sequence feasibility
}

EVAL_IDS = tuple(EVAL_DIRECTIONS)


class UnsupportedEvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class RankingFeedback:
    """Ordered best-first alternative indices plus where they came from."""

    ranked_ids: tuple[int, ...]
    source: str = "unknown"

    def __post_init__(self):
        if not self.ranked_ids:
            raise ValueError("ranking must contain at least one alternative id")
        if len(set(self.ranked_ids)) != len(self.ranked_ids):
            raise ValueError("ranking ids must be distinct")

    def validate_against(self, n_alternatives: int) -> None:
        bad = [i for i in self.ranked_ids if not (0 <= i < n_alternatives)]
        if bad:
            raise ValueError(f"ranking references unknown alternative ids {bad}")

    def to_dict(self) -> dict:
        return {"ranked_ids": list(self.ranked_ids), "source": self.source}

    @classmethod
    def from_dict(cls, d: dict) -> "RankingFeedback":
        return cls(tuple(int(i) for i in d["ranked_ids"]), str(d.get("source", "unknown")))


@dataclass
class EvalContext:
    """Shared inputs the metrics need beyond the alternative itself.

    ``j_spec`` and ``s_spec`` are switching-dimension indices (positions in
    Topology.bits); they default to the action set of the least-cost
    solution. ``s_spec`` maps each index to the bit the set-indicator
    requires there.
    """

    network: Network
    j_spec: frozenset[int] = frozenset()
    s_spec: dict[int, int] = field(default_factory=dict)
    base_topology: Topology | None = None
    overload_threshold: float = 0.9

    def __post_init__(self):
        if not (0.0 < self.overload_threshold <= 1.0):
            raise NetworkError(
                f"overload threshold must be in (0, 1], got {self.overload_threshold}")
        if self.base_topology is None:
            self.base_topology = self.network.base_topology()
        n = len(self.base_topology.bits)
        for j in set(self.j_spec) | set(self.s_spec):
            if not (0 <= j < n):
                raise NetworkError(f"switching dimension {j} out of range (n={n})")

    @classmethod
    def from_least_cost(cls, network: Network, least_cost_topology: Topology,
                        overload_threshold: float = 0.9,
                        set_requires_actions: bool = False) -> "EvalContext":
        """Derive the specific action/set targets from the least-cost solution.

        By default the set indicator requires the tracked dimensions to stay
        closed (bit 0); ``set_requires_actions=True`` flips the target to the
        least-cost actions themselves.
        """
        actions = frozenset(j for j, bit in enumerate(least_cost_topology.bits) if bit)
        target = 1 if set_requires_actions else 0
        if actions and not set_requires_actions:
            log.info(
                "specific-set metric requires bit 0 on the least-cost action dimensions; "
                "pass set_requires_actions=True to require the actions instead")
        return cls(
            network=network,
            j_spec=actions,
            s_spec={j: target for j in actions},
            base_topology=network.base_topology(),
            overload_threshold=overload_threshold,
        )


@dataclass
class EvalResult:
    fn_id: str
    value: float
    direction: str
    per_line_detail: dict[int, float] | None = None
    feasible_order: list[tuple[str, int]] | None = None


def eval_specific_actions(topology: Topology, ctx: EvalContext) -> int:
    """u1: how many of the tracked switching actions the topology performs."""
    bits = topology.bits
    return sum(bits[j] for j in ctx.j_spec)


def eval_specific_set(topology: Topology, ctx: EvalContext) -> int:
    """u2: 1 iff every tracked dimension matches its required bit."""
    bits = topology.bits
    return int(all(bits[j] == target for j, target in ctx.s_spec.items()))


def eval_topological_depth(topology: Topology, ctx: EvalContext) -> int:
    """u3: switching distance from the all-closed base topology."""
    return hamming_distance(topology, ctx.base_topology)


def _loadings(alt: "Alternative", net: Network) -> dict[int, float]:
    out = {}
    open_ids = {br.id for bit, br in zip(alt.topology.line_open, net.switchable_branches) if bit}
    for branch_id, flow in alt.flows.items():
        if branch_id in open_ids:
            continue
        limit = net.branch_by_id[branch_id].limit_mw
        if limit <= 0:
            raise NetworkError(f"branch {branch_id} has nonpositive limit {limit}")
        out[branch_id] = abs(flow) / limit
    return out


def eval_cumulative_overload(alt: "Alternative", ctx: EvalContext) -> float:
    """u4: summed loading fraction in excess of the threshold, closed lines only."""
    return sum(max(0.0, p - ctx.overload_threshold)
               for p in _loadings(alt, ctx.network).values())


def eval_cumulative_quadratic_load(alt: "Alternative", ctx: EvalContext) -> float:
    """u5: summed squared loading fraction, closed lines only."""
    return sum(p * p for p in _loadings(alt, ctx.network).values())


def eval_switching_sequence(alt: "Alternative", net: Network) -> EvalResult:
    """u6: 1 if the actions admit an execution order whose every intermediate
    state is operable under the alternative's fixed dispatch.

    Operable means: no line above 100% of its limit, no islanded node left
    with net injection, and the slack generators able to absorb the
    imbalance. The search walks action subsets (state feasibility depends
    only on which actions are applied, not their order), so it visits at
    most 2^k states for k actions.
    """
    actions = net.topology_actions(alt.topology)
    if not actions:
        return EvalResult("u6", 1.0, MAXIMIZE, feasible_order=[])

    target = frozenset(actions)
    line_index = {br.id: i for i, br in enumerate(net.switchable_branches)}
    split_index = {sub.bus: i for i, sub in enumerate(net.splittable_substations)}

    def topology_of(applied: frozenset) -> Topology:
        line_bits = [0] * len(net.switchable_branches)
        split_bits = [0] * len(net.splittable_substations)
        for kind, ref in applied:
            if kind == "line":
                line_bits[line_index[ref]] = 1
            else:
                split_bits[split_index[ref]] = 1
        return Topology(tuple(line_bits), tuple(split_bits))

    state_cache: dict[frozenset, bool] = {}

    def state_ok(applied: frozenset) -> bool:
        if applied not in state_cache:
            assignments = {ref: alt.split_assignments[ref]
                           for kind, ref in applied
                           if kind == "split" and ref in alt.split_assignments}
            state_cache[applied] = check_operating_state(
                net, topology_of(applied), alt.dispatch, assignments).feasible
        return state_cache[applied]

    dead: set[frozenset] = set()

    def extend(applied: frozenset, order: list) -> list | None:
        if applied == target:
            return order
        for action in sorted(target - applied):
            nxt = applied | {action}
            if nxt in dead or not state_ok(nxt):
                continue
            found = extend(nxt, order + [action])
            if found is not None:
                return found
        dead.add(applied)
        return None

    order = extend(frozenset(), [])
    if order is None:
        return EvalResult("u6", 0.0, MAXIMIZE, feasible_order=None)
    return EvalResult("u6", 1.0, MAXIMIZE, feasible_order=order)


def evaluate(fn_id: str, alt: "Alternative", ctx: EvalContext) -> EvalResult:
    """Evaluate one metric for one alternative."""
    if fn_id == "u1":
        return EvalResult(fn_id, float(eval_specific_actions(alt.topology, ctx)), MAXIMIZE)
    if fn_id == "u2":
        return EvalResult(fn_id, float(eval_specific_set(alt.topology, ctx)), MAXIMIZE)
    if fn_id == "u3":
        return EvalResult(fn_id, float(eval_topological_depth(alt.topology, ctx)), MINIMIZE)
    if fn_id == "u4":
        detail = _loadings(alt, ctx.network)
        value = sum(max(0.0, p - ctx.overload_threshold) for p in detail.values())
        return EvalResult(fn_id, value, MINIMIZE, per_line_detail=detail)
    if fn_id == "u5":
        detail = _loadings(alt, ctx.network)
        return EvalResult(fn_id, sum(p * p for p in detail.values()), MINIMIZE,
                          per_line_detail=detail)
    if fn_id == "u6":
        return eval_switching_sequence(alt, ctx.network)
    raise UnsupportedEvaluationError(f"unknown evaluation function {fn_id!r}")


def rank_alternatives(alternatives: Iterable["Alternative"], fn_id: str, ctx: EvalContext,
                      top_k: int | None = None) -> RankingFeedback:
    """Best-first ranking; ties keep the lower alternative index first."""
    values = [evaluate(fn_id, alt, ctx).value for alt in alternatives]
    sign = 1.0 if EVAL_DIRECTIONS[fn_id] == MINIMIZE else -1.0
    order = sorted(range(len(values)), key=lambda i: (sign * values[i], i))
    if top_k is not None:
        order = order[:top_k]
    if not order:
        raise ValueError("cannot rank an empty alternative set")
    return RankingFeedback(tuple(order), source=f"simulated:{fn_id}")
