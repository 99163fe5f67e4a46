"""Analytic DC power flow over an elaborated electrical graph.

The optimization layer works on an implicit network (big-M switching
model); this module provides the explicit counterpart: given a concrete
topology, a fixed dispatch, and busbar-split assignments, it builds the
electrical node graph (split substations become two nodes, open lines
drop out) and solves the linear DC power flow directly. It is used for
post-solve islanding checks, switching-sequence evaluation, and as an
independent cross-check of optimizer flows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Network, Topology

# An electrical node: (bus id, busbar) with busbar "a" or "b".
Node = tuple[int, str]


@dataclass(frozen=True)
class SplitAssignment:
    """Distribution of a split substation's elements onto busbar B.

    Everything not listed stays on busbar A. Ends are (branch id, "from"/"to")
    pairs; generators and loads move as whole units.
    """

    ends_on_b: frozenset = frozenset()
    gens_on_b: frozenset = frozenset()
    loads_on_b: frozenset = frozenset()

    def to_dict(self) -> dict:
        return {
            "ends_on_b": sorted([list(e) for e in self.ends_on_b]),
            "gens_on_b": sorted(self.gens_on_b),
            "loads_on_b": sorted(self.loads_on_b),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        return cls(
            frozenset((int(e[0]), str(e[1])) for e in d.get("ends_on_b", ())),
            frozenset(int(g) for g in d.get("gens_on_b", ())),
            frozenset(int(l) for l in d.get("loads_on_b", ())),
        )


@dataclass
class ElectricalGraph:
    nodes: list[Node]
    injections: dict[Node, float]          # MW, generation minus load
    edges: list[tuple[Node, Node, float, float, int]]  # (u, v, MW/rad, limit, branch id)
    slack_node: Node
    slack_gen_specified: float             # dispatch assigned to slack-node generators
    slack_gen_bounds: tuple[float, float]  # aggregate p_min/p_max of those generators


def build_electrical_graph(
    net: Network,
    topology: Topology,
    dispatch: dict[int, float],
    assignments: dict[int, SplitAssignment] | None = None,
) -> ElectricalGraph:
    """Elaborate the concrete electrical graph for one switching state.

    Substations with their split bit set contribute two nodes; open lines
    contribute no edge. ``dispatch`` maps generator id to MW output.
    """
    assignments = assignments or {}
    open_branches = {
        br.id for bit, br in zip(topology.line_open, net.switchable_branches) if bit
    }
    split_buses = {
        sub.bus for bit, sub in zip(topology.busbar_split, net.splittable_substations) if bit
    }

    def node_for_end(branch_id: int, end: str, bus_id: int) -> Node:
        if bus_id in split_buses:
            asg = assignments.get(bus_id, SplitAssignment())
            if (branch_id, end) in asg.ends_on_b:
                return (bus_id, "b")
        return (bus_id, "a")

    nodes: list[Node] = []
    injections: dict[Node, float] = {}
    for bus in net.buses:
        nodes.append((bus.id, "a"))
        injections[(bus.id, "a")] = 0.0
        if bus.id in split_buses:
            nodes.append((bus.id, "b"))
            injections[(bus.id, "b")] = 0.0

    slack_bus = net.slack_bus.id
    slack_node: Node = (slack_bus, "a")
    slack_specified = 0.0
    slack_min, slack_max = 0.0, 0.0

    for gen in net.generators:
        out = dispatch.get(gen.id, 0.0)
        node: Node = (gen.bus, "a")
        if gen.bus in split_buses and gen.id in assignments.get(gen.bus, SplitAssignment()).gens_on_b:
            node = (gen.bus, "b")
        injections[node] += out
        if node == slack_node:
            slack_specified += out
            slack_min += gen.p_min
            slack_max += gen.p_max

    for bus in net.buses:
        if bus.load_mw == 0.0:
            continue
        node = (bus.id, "a")
        if bus.id in split_buses and bus.id in assignments.get(bus.id, SplitAssignment()).loads_on_b:
            node = (bus.id, "b")
        injections[node] -= bus.load_mw

    edges = []
    for br in net.branches:
        if br.id in open_branches:
            continue
        u = node_for_end(br.id, "from", br.from_bus)
        v = node_for_end(br.id, "to", br.to_bus)
        edges.append((u, v, net.base_mva * br.susceptance, br.limit_mw, br.id))

    return ElectricalGraph(nodes, injections, edges, slack_node, slack_specified,
                           (slack_min, slack_max))


@dataclass
class DcFlowResult:
    angles: dict[Node, float]
    flows: dict[int, float]                 # branch id -> MW, positive from->to
    components: list[set[Node]]
    slack_component: set[Node]
    slack_adjustment_mw: float              # extra output the slack node must absorb
    islanded_nonzero_nodes: list[Node]      # nodes outside the slack component with injection

    def loading(self, net: Network) -> dict[int, float]:
        """|flow| / limit per closed branch."""
        return {bid: abs(f) / net.branch_by_id[bid].limit_mw for bid, f in self.flows.items()}


def _components(nodes: list[Node], edges) -> list[set[Node]]:
    adjacency: dict[Node, list[Node]] = {n: [] for n in nodes}
    for u, v, _, _, _ in edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    remaining = set(nodes)
    comps = []
    while remaining:
        start = remaining.pop()
        comp = {start}
        stack = [start]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        remaining -= comp
        comps.append(comp)
    return comps


def solve_dc_power_flow(graph: ElectricalGraph, injection_tol: float = 1e-6) -> DcFlowResult:
    """Solve B * theta = P per connected component.

    The slack node absorbs its component's imbalance (reported as
    ``slack_adjustment_mw``); other components get a local angle reference
    and are solved as-is. Nodes outside the slack component with net
    injection above ``injection_tol`` are reported as islanded.
    """
    comps = _components(graph.nodes, graph.edges)
    slack_comp = next(c for c in comps if graph.slack_node in c)

    angles: dict[Node, float] = {}
    for comp in comps:
        ref = graph.slack_node if comp is slack_comp else min(comp)
        order = sorted(comp)
        index = {n: i for i, n in enumerate(order)}
        n = len(order)
        laplacian = np.zeros((n, n))
        for u, v, b_mw, _, _ in graph.edges:
            if u in comp:
                iu, iv = index[u], index[v]
                laplacian[iu, iu] += b_mw
                laplacian[iv, iv] += b_mw
                laplacian[iu, iv] -= b_mw
                laplacian[iv, iu] -= b_mw
        p = np.array([graph.injections[node] for node in order])
        keep = [i for i, node in enumerate(order) if node != ref]
        theta = np.zeros(n)
        if keep:
            reduced = laplacian[np.ix_(keep, keep)]
            theta[keep] = np.linalg.solve(reduced, p[keep])
        for node, i in index.items():
            angles[node] = theta[i]

    flows = {bid: b_mw * (angles[u] - angles[v]) for u, v, b_mw, _, bid in graph.edges}

    injected_by_ref = -sum(graph.injections[node] for node in slack_comp
                           if node != graph.slack_node)
    slack_adjustment = injected_by_ref - graph.injections[graph.slack_node]

    islanded = [node for comp in comps if comp is not slack_comp for node in sorted(comp)
                if abs(graph.injections[node]) > injection_tol]

    return DcFlowResult(angles, flows, comps, slack_comp, slack_adjustment, islanded)


@dataclass
class StateCheck:
    feasible: bool
    reasons: list[str] = field(default_factory=list)
    max_loading: float = 0.0


def check_operating_state(
    net: Network,
    topology: Topology,
    dispatch: dict[int, float],
    assignments: dict[int, SplitAssignment] | None = None,
    loading_limit: float = 1.0,
    injection_tol: float = 1e-6,
) -> StateCheck:
    """Operability of one switching state under a fixed dispatch.

    Infeasible when an islanded node still carries injection, when the
    slack generators cannot absorb the imbalance, or when any closed line
    loads above ``loading_limit``.
    """
    graph = build_electrical_graph(net, topology, dispatch, assignments)
    result = solve_dc_power_flow(graph, injection_tol)
    reasons = []
    if result.islanded_nonzero_nodes:
        reasons.append(
            "islanded injection at " + ", ".join(
                f"{bus}{'' if bar == 'a' else '-b'}" for bus, bar in result.islanded_nonzero_nodes))
    implied_slack = graph.slack_gen_specified + result.slack_adjustment_mw
    lo, hi = graph.slack_gen_bounds
    if implied_slack < lo - injection_tol or implied_slack > hi + injection_tol:
        reasons.append(f"slack absorption {implied_slack:.3f} MW outside [{lo}, {hi}]")
    loadings = result.loading(net)
    worst = max(loadings.values(), default=0.0)
    if worst > loading_limit + 1e-9:
        overloaded = [str(bid) for bid, v in loadings.items() if v > loading_limit + 1e-9]
        reasons.append(f"loading above {loading_limit:.0%} on branches " + ", ".join(overloaded))
    return StateCheck(feasible=not reasons, reasons=reasons, max_loading=worst)
