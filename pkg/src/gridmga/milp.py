"""Mixed-integer DC-OPF reconfiguration model.

Builds the switching MILP over a pluggable solver backend and exposes the
three solve modes the rest of the system needs:

- least-cost solve (establishes the cost optimum and its topology),
- near-optimal alternative solves (weighted switching objective with a
  cost-buffer term, under the budget row ``cost + buffer = optimum * (1+eps)``),
- direct optimization of an evaluation metric within the same near-optimal
  set, to obtain performance bounds.

Modeling notes
--------------
Line switching uses a big-M disjunction on the flow definition plus a
capacity row that forces opened lines to zero flow. Busbar splitting gives
each split-capable substation two busbar angles tied by a coupler that
closes when the split bit is zero; every attached line end and injection
carries an assignment binary choosing its busbar. Angles are bounded to
+-0.6 rad, which makes M = susceptance * 1.2 valid for flow disjunctions
and 1.2 valid for angle disjunctions.

Islanding is not enforced in the MILP; solutions that island a node with
net injection are rejected post-solve and re-solved under a no-good cut
on that switching vector.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .dcflow import SplitAssignment, build_electrical_graph, solve_dc_power_flow
from .evaluation import EVAL_DIRECTIONS, MAXIMIZE, MINIMIZE, EvalContext, UnsupportedEvaluationError
from .network import Network, NetworkError, Topology, validate_network
from .solver import (INF, InfeasibleError, LinearModel, Solution, SolverBackend, SolverError,
                     SolveStatus, default_backend)

log = logging.getLogger("gridmga.milp")

THETA_BOUND = 0.6         # rad, symmetric angle bound
ANGLE_BIG_M = 2 * THETA_BOUND
MAX_ISLAND_REJECTS = 25


class ModelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SwitchingOptions:
    allow_line_switching: bool = True
    allow_busbar_splitting: bool = False
    max_line_actions: int = 3
    max_busbar_actions: int = 0
    reassign_loads: bool = True

    def __post_init__(self):
        if self.max_line_actions < 0 or self.max_busbar_actions < 0:
            raise ModelConfigError("action budgets must be >= 0")
        if not self.allow_line_switching and self.max_line_actions > 0:
            raise ModelConfigError("line switching disabled but max_line_actions > 0")
        if not self.allow_busbar_splitting and self.max_busbar_actions > 0:
            raise ModelConfigError("busbar splitting disabled but max_busbar_actions > 0")

    @property
    def any_mode_enabled(self) -> bool:
        return self.allow_line_switching or self.allow_busbar_splitting

    def to_dict(self) -> dict:
        return {
            "allow_line_switching": self.allow_line_switching,
            "allow_busbar_splitting": self.allow_busbar_splitting,
            "max_line_actions": self.max_line_actions,
            "max_busbar_actions": self.max_busbar_actions,
            "reassign_loads": self.reassign_loads,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SwitchingOptions":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass(frozen=True)
class ObjectiveSpec:
    """Minimize z_coefficients . z + slack_coefficient * cost_buffer."""

    z_coefficients: tuple[float, ...]
    slack_coefficient: float

    def __post_init__(self):
        for c in self.z_coefficients:
            if not math.isfinite(c):
                raise ModelConfigError(f"non-finite switching coefficient {c}")
        if not math.isfinite(self.slack_coefficient):
            raise ModelConfigError("non-finite slack coefficient")


@dataclass
class Alternative:
    """One solved reconfiguration: switching state plus its cost-optimal
    operating point and solve metadata."""

    topology: Topology
    dispatch: dict[int, float]       # generator id -> MW
    flows: dict[int, float]          # branch id -> MW (from -> to positive)
    angles: dict[int, float]         # bus id -> rad (busbar A)
    cost: float
    slack: float
    objective_value: float
    solver_gap: float
    weight_seed: int = 0
    round: str = "least-cost"
    unique: bool = True
    index: int = 0
    split_assignments: dict[int, SplitAssignment] = field(default_factory=dict)
    split_angles: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "dispatch": {str(k): v for k, v in self.dispatch.items()},
            "flows": {str(k): v for k, v in self.flows.items()},
            "angles": {str(k): v for k, v in self.angles.items()},
            "cost": self.cost,
            "slack": self.slack,
            "objective_value": self.objective_value,
            "solver_gap": self.solver_gap,
            "weight_seed": self.weight_seed,
            "round": self.round,
            "unique": self.unique,
            "index": self.index,
            "split_assignments": {str(k): v.to_dict() for k, v in self.split_assignments.items()},
            "split_angles": {str(k): v for k, v in self.split_angles.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Alternative":
        return cls(
            topology=Topology.from_dict(d["topology"]),
            dispatch={int(k): float(v) for k, v in d["dispatch"].items()},
            flows={int(k): float(v) for k, v in d["flows"].items()},
            angles={int(k): float(v) for k, v in d["angles"].items()},
            cost=float(d["cost"]),
            slack=float(d["slack"]),
            objective_value=float(d["objective_value"]),
            solver_gap=float(d["solver_gap"]),
            weight_seed=int(d.get("weight_seed", 0)),
            round=str(d.get("round", "mga")),
            unique=bool(d.get("unique", True)),
            index=int(d.get("index", 0)),
            split_assignments={int(k): SplitAssignment.from_dict(v)
                               for k, v in d.get("split_assignments", {}).items()},
            split_angles={int(k): float(v) for k, v in d.get("split_angles", {}).items()},
        )


class ReconfigModel:
    """The reconfiguration MILP plus the index maps into its columns.

    Switching dimensions are ordered switchable branches first, then
    split-capable substations; every module addresses dimension j the same
    way. A model instance is single-threaded; clone() for parallel solves.
    """

    def __init__(self, network: Network, options: SwitchingOptions,
                 backend: SolverBackend | None = None):
        report = validate_network(network)
        if not report.ok:
            raise NetworkError("invalid network: " + "; ".join(report))
        self.network = network
        self.options = options
        self.backend = backend or default_backend()
        self.model = LinearModel()

        self.z_cols: list[int] = []
        self.z_labels: list[tuple[str, int]] = []
        self.theta_cols: dict[int, int] = {}
        self.theta_b_cols: dict[int, int] = {}
        self.gen_cols: dict[int, int] = {}
        self.flow_cols: dict[int, int] = {}
        self.coupler_cols: dict[int, int] = {}
        self.end_theta_cols: dict[tuple[int, str], int] = {}
        self.end_assign_cols: dict[tuple[int, str], int] = {}
        self.end_flow_cols: dict[tuple[int, str], tuple[int, int]] = {}
        self.gen_part_cols: dict[int, tuple[int, int]] = {}
        self.gen_assign_cols: dict[int, int] = {}
        self.load_assign_cols: dict[int, int] = {}
        self.buffer_col: int = -1
        self.balance_rows: list[int] = []
        self._eps_row: int | None = None

        self._build()

    # -- dimensions ---------------------------------------------------------

    @property
    def n(self) -> int:
        """Number of switching dimensions (line bits + split bits)."""
        return len(self.z_cols)

    @property
    def m(self) -> int:
        """Number of non-switching variables."""
        return self.model.num_variables - self.n

    @property
    def n_line_dims(self) -> int:
        return sum(1 for kind, _ in self.z_labels if kind == "line")

    def clone(self) -> "ReconfigModel":
        dup = object.__new__(ReconfigModel)
        dup.__dict__.update(self.__dict__)
        dup.model = self.model.clone()
        return dup

    # -- construction -------------------------------------------------------

    def _build(self) -> None:
        net, opts, m = self.network, self.options, self.model
        base = net.base_mva

        for br in net.switchable_branches:
            col = m.add_binary(f"z_line[{br.id}]")
            if not opts.allow_line_switching:
                m.fix_variable(col, 0.0)
            self.z_cols.append(col)
            self.z_labels.append(("line", br.id))
        for sub in net.splittable_substations:
            col = m.add_binary(f"z_split[{sub.bus}]")
            if not opts.allow_busbar_splitting:
                m.fix_variable(col, 0.0)
            self.z_cols.append(col)
            self.z_labels.append(("split", sub.bus))
        z_col_of = dict(zip(self.z_labels, self.z_cols))

        for bus in net.buses:
            col = m.add_variable(-THETA_BOUND, THETA_BOUND, name=f"theta[{bus.id}]")
            if bus.is_slack:
                m.fix_variable(col, 0.0)
            self.theta_cols[bus.id] = col

        coupler_cap = sum(g.p_max for g in net.generators) + net.total_load
        split_active: dict[int, bool] = {}
        if opts.allow_busbar_splitting:
            for sub in net.splittable_substations:
                split_active[sub.bus] = True
                self.theta_b_cols[sub.bus] = m.add_variable(
                    -THETA_BOUND, THETA_BOUND, name=f"theta_b[{sub.bus}]")
                self.coupler_cols[sub.bus] = m.add_variable(
                    -coupler_cap, coupler_cap, name=f"coupler[{sub.bus}]")
                for end in sub.attached_branch_ends:
                    limit = net.branch_by_id[end[0]].limit_mw
                    self.end_theta_cols[end] = m.add_variable(
                        -THETA_BOUND, THETA_BOUND, name=f"theta_end[{end[0]},{end[1]}]")
                    self.end_assign_cols[end] = m.add_binary(f"on_b[{end[0]},{end[1]}]")
                    self.end_flow_cols[end] = (
                        m.add_variable(-limit, limit, name=f"inflow_a[{end[0]},{end[1]}]"),
                        m.add_variable(-limit, limit, name=f"inflow_b[{end[0]},{end[1]}]"),
                    )
                for kind, ref in sub.attached_injections:
                    if kind == "gen":
                        p_max = net.generator_by_id[ref].p_max
                        self.gen_part_cols[ref] = (
                            m.add_variable(0.0, p_max, name=f"gen_a[{ref}]"),
                            m.add_variable(0.0, p_max, name=f"gen_b[{ref}]"),
                        )
                        self.gen_assign_cols[ref] = m.add_binary(f"gen_on_b[{ref}]")
                    elif opts.reassign_loads:
                        self.load_assign_cols[ref] = m.add_binary(f"load_on_b[{ref}]")

        for gen in net.generators:
            self.gen_cols[gen.id] = m.add_variable(gen.p_min, gen.p_max, name=f"p[{gen.id}]")
        for br in net.branches:
            self.flow_cols[br.id] = m.add_variable(-br.limit_mw, br.limit_mw,
                                                   name=f"flow[{br.id}]")
        self.buffer_col = m.add_variable(0.0, INF, name="cost_buffer")

        # Action budgets.
        line_cols = [c for c, (kind, _) in zip(self.z_cols, self.z_labels) if kind == "line"]
        split_cols = [c for c, (kind, _) in zip(self.z_cols, self.z_labels) if kind == "split"]
        if line_cols:
            m.add_constraint({c: 1.0 for c in line_cols}, ub=float(opts.max_line_actions)
                             if opts.allow_line_switching else 0.0, name="budget_lines")
        if split_cols:
            m.add_constraint({c: 1.0 for c in split_cols}, ub=float(opts.max_busbar_actions)
                             if opts.allow_busbar_splitting else 0.0, name="budget_splits")

        def angle_col(branch_id: int, end: str, bus_id: int) -> int:
            if split_active.get(bus_id):
                return self.end_theta_cols[(branch_id, end)]
            return self.theta_cols[bus_id]

        # Flow definitions and switched-capacity rows.
        for br in net.branches:
            b_mw = base * br.susceptance
            flow = self.flow_cols[br.id]
            t_from = angle_col(br.id, "from", br.from_bus)
            t_to = angle_col(br.id, "to", br.to_bus)
            defn = {flow: 1.0, t_from: -b_mw, t_to: b_mw}
            if t_from == t_to:  # parallel-end degeneracy cannot occur (from != to)
                raise NetworkError(f"branch {br.id} endpoints collapse to one angle")
            if br.switchable:
                z = z_col_of[("line", br.id)]
                big_m = b_mw * ANGLE_BIG_M
                m.add_constraint({**defn, z: -big_m}, ub=0.0, name=f"flow_def_ub[{br.id}]")
                m.add_constraint({**defn, z: big_m}, lb=0.0, name=f"flow_def_lb[{br.id}]")
                m.add_constraint({flow: 1.0, z: br.limit_mw}, ub=br.limit_mw,
                                 name=f"cap_ub[{br.id}]")
                m.add_constraint({flow: 1.0, z: -br.limit_mw}, lb=-br.limit_mw,
                                 name=f"cap_lb[{br.id}]")
            else:
                m.add_constraint(defn, lb=0.0, ub=0.0, name=f"flow_def[{br.id}]")

        # Substation-splitting machinery.
        for sub in net.splittable_substations:
            if not split_active.get(sub.bus):
                continue
            z_b = z_col_of[("split", sub.bus)]
            t_a = self.theta_cols[sub.bus]
            t_b = self.theta_b_cols[sub.bus]
            cpl = self.coupler_cols[sub.bus]
            m.add_constraint({t_a: 1.0, t_b: -1.0, z_b: -ANGLE_BIG_M}, ub=0.0,
                             name=f"coupler_ang_ub[{sub.bus}]")
            m.add_constraint({t_a: 1.0, t_b: -1.0, z_b: ANGLE_BIG_M}, lb=0.0,
                             name=f"coupler_ang_lb[{sub.bus}]")
            m.add_constraint({cpl: 1.0, z_b: coupler_cap}, ub=coupler_cap,
                             name=f"coupler_cap_ub[{sub.bus}]")
            m.add_constraint({cpl: 1.0, z_b: -coupler_cap}, lb=-coupler_cap,
                             name=f"coupler_cap_lb[{sub.bus}]")
            for end in sub.attached_branch_ends:
                branch_id, side = end
                x = self.end_assign_cols[end]
                t_e = self.end_theta_cols[end]
                limit = net.branch_by_id[branch_id].limit_mw
                flow = self.flow_cols[branch_id]
                part_a, part_b = self.end_flow_cols[end]
                sigma = 1.0 if side == "to" else -1.0
                m.add_constraint({x: 1.0, z_b: -1.0}, ub=0.0, name=f"assign_gate[{branch_id},{side}]")
                m.add_constraint({t_e: 1.0, t_a: -1.0, x: -ANGLE_BIG_M}, ub=0.0,
                                 name=f"end_ang_a_ub[{branch_id},{side}]")
                m.add_constraint({t_e: 1.0, t_a: -1.0, x: ANGLE_BIG_M}, lb=0.0,
                                 name=f"end_ang_a_lb[{branch_id},{side}]")
                m.add_constraint({t_e: 1.0, t_b: -1.0, x: ANGLE_BIG_M}, ub=ANGLE_BIG_M,
                                 name=f"end_ang_b_ub[{branch_id},{side}]")
                m.add_constraint({t_e: 1.0, t_b: -1.0, x: -ANGLE_BIG_M}, lb=-ANGLE_BIG_M,
                                 name=f"end_ang_b_lb[{branch_id},{side}]")
                m.add_constraint({part_a: 1.0, part_b: 1.0, flow: -sigma}, lb=0.0, ub=0.0,
                                 name=f"end_flow_split[{branch_id},{side}]")
                m.add_constraint({part_a: 1.0, x: limit}, ub=limit,
                                 name=f"end_flow_a_ub[{branch_id},{side}]")
                m.add_constraint({part_a: 1.0, x: -limit}, lb=-limit,
                                 name=f"end_flow_a_lb[{branch_id},{side}]")
                m.add_constraint({part_b: 1.0, x: -limit}, ub=0.0,
                                 name=f"end_flow_b_ub[{branch_id},{side}]")
                m.add_constraint({part_b: 1.0, x: limit}, lb=0.0,
                                 name=f"end_flow_b_lb[{branch_id},{side}]")
            for kind, ref in sub.attached_injections:
                if kind == "gen":
                    part_a, part_b = self.gen_part_cols[ref]
                    x = self.gen_assign_cols[ref]
                    p_max = net.generator_by_id[ref].p_max
                    m.add_constraint({x: 1.0, z_b: -1.0}, ub=0.0, name=f"gen_gate[{ref}]")
                    m.add_constraint({part_a: 1.0, part_b: 1.0, self.gen_cols[ref]: -1.0},
                                     lb=0.0, ub=0.0, name=f"gen_split[{ref}]")
                    m.add_constraint({part_a: 1.0, x: p_max}, ub=p_max,
                                     name=f"gen_a_ub[{ref}]")
                    m.add_constraint({part_b: 1.0, x: -p_max}, ub=0.0,
                                     name=f"gen_b_ub[{ref}]")
                elif opts.reassign_loads:
                    m.add_constraint({self.load_assign_cols[ref]: 1.0, z_b: -1.0}, ub=0.0,
                                     name=f"load_gate[{ref}]")

        # Nodal balance: generation - load + inflows = 0 per electrical node.
        ends_at: dict[int, list[tuple[int, str]]] = {b.id: [] for b in net.buses}
        for br in net.branches:
            ends_at[br.from_bus].append((br.id, "from"))
            ends_at[br.to_bus].append((br.id, "to"))
        for bus in net.buses:
            if split_active.get(bus.id):
                sub = net.substation_by_bus[bus.id]
                row_a: dict[int, float] = {self.coupler_cols[bus.id]: -1.0}
                row_b: dict[int, float] = {self.coupler_cols[bus.id]: 1.0}
                for end in sub.attached_branch_ends:
                    part_a, part_b = self.end_flow_cols[end]
                    row_a[part_a] = row_a.get(part_a, 0.0) + 1.0
                    row_b[part_b] = row_b.get(part_b, 0.0) + 1.0
                for kind, ref in sub.attached_injections:
                    if kind == "gen":
                        part_a, part_b = self.gen_part_cols[ref]
                        row_a[part_a] = row_a.get(part_a, 0.0) + 1.0
                        row_b[part_b] = row_b.get(part_b, 0.0) + 1.0
                load = bus.load_mw
                if load > 0 and bus.id in self.load_assign_cols:
                    x_load = self.load_assign_cols[bus.id]
                    row_a[x_load] = row_a.get(x_load, 0.0) + load
                    row_b[x_load] = row_b.get(x_load, 0.0) - load
                self.balance_rows.append(m.add_constraint(
                    row_a, lb=load, ub=load, name=f"balance_a[{bus.id}]"))
                self.balance_rows.append(m.add_constraint(
                    row_b, lb=0.0, ub=0.0, name=f"balance_b[{bus.id}]"))
            else:
                row: dict[int, float] = {}
                for gen in net.generators_at[bus.id]:
                    row[self.gen_cols[gen.id]] = 1.0
                for branch_id, side in ends_at[bus.id]:
                    sigma = 1.0 if side == "to" else -1.0
                    col = self.flow_cols[branch_id]
                    row[col] = row.get(col, 0.0) + sigma
                self.balance_rows.append(m.add_constraint(
                    row, lb=bus.load_mw, ub=bus.load_mw, name=f"balance[{bus.id}]"))

    # -- objective / budget-row helpers --------------------------------------

    def cost_coefficients(self) -> dict[int, float]:
        return {self.gen_cols[g.id]: g.cost_per_mwh for g in self.network.generators}

    def ensure_epsilon_row(self, f_star: float, epsilon: float) -> None:
        rhs = f_star * (1.0 + epsilon)
        coeffs = dict(self.cost_coefficients())
        coeffs[self.buffer_col] = coeffs.get(self.buffer_col, 0.0) + 1.0
        if self._eps_row is None:
            self._eps_row = self.model.add_constraint(coeffs, lb=rhs, ub=rhs, name="near_optimal")
        else:
            self.model.rows[self._eps_row].coeffs = coeffs
            self.model.set_row_bounds(self._eps_row, rhs, rhs)
        self.model.set_variable_bounds(self.buffer_col, 0.0, INF)

    def disable_epsilon_row(self) -> None:
        if self._eps_row is not None:
            self.model.disable_row(self._eps_row)
        self.model.fix_variable(self.buffer_col, 0.0)

    def topology_bits(self, values) -> Topology:
        line_bits, split_bits = [], []
        for col, (kind, _) in zip(self.z_cols, self.z_labels):
            bit = int(round(values[col]))
            (line_bits if kind == "line" else split_bits).append(bit)
        return Topology(tuple(line_bits), tuple(split_bits))

    def fix_topology(self, model: LinearModel, alt: Alternative) -> None:
        """Pin every integer decision to the alternative's values in a clone."""
        bits = dict(zip(self.z_labels, alt.topology.bits))
        for col, label in zip(self.z_cols, self.z_labels):
            model.fix_variable(col, float(bits[label]))
        for (branch_id, side), col in self.end_assign_cols.items():
            end_bus = (self.network.branch_by_id[branch_id].from_bus if side == "from"
                       else self.network.branch_by_id[branch_id].to_bus)
            asg = alt.split_assignments.get(end_bus)
            model.fix_variable(col, 1.0 if asg and (branch_id, side) in asg.ends_on_b else 0.0)
        for gen_id, col in self.gen_assign_cols.items():
            gen_bus = self.network.generator_by_id[gen_id].bus
            asg = alt.split_assignments.get(gen_bus)
            model.fix_variable(col, 1.0 if asg and gen_id in asg.gens_on_b else 0.0)
        for bus_id, col in self.load_assign_cols.items():
            asg = alt.split_assignments.get(bus_id)
            model.fix_variable(col, 1.0 if asg and bus_id in asg.loads_on_b else 0.0)

    # -- solution extraction --------------------------------------------------

    def _extract(self, sol: Solution, *, spec: ObjectiveSpec | None, gap: float,
                 label: str, weight_seed: int, index: int) -> Alternative:
        values = sol.values
        assert values is not None
        topology = self.topology_bits(values)
        dispatch = {gid: float(values[col]) for gid, col in self.gen_cols.items()}
        flows = {bid: float(values[col]) for bid, col in self.flow_cols.items()}
        angles = {bid: float(values[col]) for bid, col in self.theta_cols.items()}
        split_angles = {bus: float(values[col]) for bus, col in self.theta_b_cols.items()}

        assignments: dict[int, SplitAssignment] = {}
        split_bits = dict(zip((label_ for kind, label_ in self.z_labels if kind == "split"),
                              topology.busbar_split))
        for sub in self.network.splittable_substations:
            if not split_bits.get(sub.bus):
                continue
            ends_on_b = frozenset(end for end in sub.attached_branch_ends
                                  if round(values[self.end_assign_cols[end]]) == 1)
            gens_on_b = frozenset(ref for kind, ref in sub.attached_injections
                                  if kind == "gen"
                                  and round(values[self.gen_assign_cols[ref]]) == 1)
            loads_on_b = frozenset(ref for kind, ref in sub.attached_injections
                                   if kind == "load" and ref in self.load_assign_cols
                                   and round(values[self.load_assign_cols[ref]]) == 1)
            assignments[sub.bus] = SplitAssignment(ends_on_b, gens_on_b, loads_on_b)

        cost = sum(g.cost_per_mwh * dispatch[g.id] for g in self.network.generators)
        slack = float(values[self.buffer_col])
        if spec is None:
            objective_value = cost
        else:
            objective_value = (sum(c * b for c, b in zip(spec.z_coefficients, topology.bits))
                               + spec.slack_coefficient * slack)
        return Alternative(
            topology=topology, dispatch=dispatch, flows=flows, angles=angles,
            cost=cost, slack=slack, objective_value=objective_value, solver_gap=gap,
            weight_seed=weight_seed, round=label, index=index,
            split_assignments=assignments, split_angles=split_angles,
        )

    def _polish(self, mip_sol: Solution) -> Solution:
        """Re-solve the dispatch LP with all integer decisions pinned, so the
        returned operating point is cost-optimal for its topology."""
        clone = self.model.clone()
        for col, is_int in enumerate(clone.col_integer):
            if is_int:
                clone.fix_variable(col, float(round(mip_sol.value(col))))
        clone.set_objective(self.cost_coefficients())
        lp = self.backend.solve(clone, rel_gap=1e-9)
        if not lp.ok:
            log.warning("dispatch polish failed (%s); keeping MIP point", lp.status.value)
            return mip_sol
        return lp

    def _solve_round(self, objective: dict[int, float], gap: float, *,
                     spec: ObjectiveSpec | None, label: str, weight_seed: int = 0,
                     index: int = 0, infeasible_hint: str = "") -> Alternative:
        self.model.set_objective(objective)
        cut_rows: list[int] = []
        try:
            for _ in range(MAX_ISLAND_REJECTS):
                sol = self.backend.solve(self.model, rel_gap=gap)
                if sol.status == SolveStatus.INFEASIBLE:
                    raise InfeasibleError(
                        f"{label} solve infeasible: {infeasible_hint or 'no feasible operating point'}"
                        f" (budgets: {self.options.max_line_actions} line /"
                        f" {self.options.max_busbar_actions} busbar actions)")
                if sol.status == SolveStatus.TIME_LIMIT:
                    if sol.values is None:
                        raise SolverError(f"{label} solve hit the time limit with no incumbent")
                    log.warning("%s solve timed out; using incumbent (gap %.3g)", label, sol.gap)
                if not sol.ok:
                    raise SolverError(f"{label} solve failed: {sol.status.value} {sol.message}")
                polished = self._polish(sol)
                alt = self._extract(polished, spec=spec, gap=sol.gap, label=label,
                                    weight_seed=weight_seed, index=index)
                graph = build_electrical_graph(self.network, alt.topology, alt.dispatch,
                                               alt.split_assignments)
                islanded = solve_dc_power_flow(graph).islanded_nonzero_nodes
                if not islanded:
                    return alt
                log.info("%s solve islanded injection at %s; re-solving with a no-good cut",
                         label, islanded)
                ones = [c for c, bit in zip(self.z_cols, alt.topology.bits) if bit]
                zeros = [c for c, bit in zip(self.z_cols, alt.topology.bits) if not bit]
                cut = {c: 1.0 for c in zeros}
                cut.update({c: -1.0 for c in ones})
                cut_rows.append(self.model.add_constraint(cut, lb=1.0 - len(ones),
                                                          name="no_good"))
            raise SolverError(f"{label} solve kept islanding after {MAX_ISLAND_REJECTS} cuts")
        finally:
            for row in cut_rows:
                self.model.disable_row(row)


def build_reconfiguration_model(net: Network, opts: SwitchingOptions,
                                backend: SolverBackend | None = None) -> ReconfigModel:
    return ReconfigModel(net, opts, backend)


def solve_least_cost(model: ReconfigModel, gap: float = 1e-3) -> tuple[float, Alternative]:
    """Minimize generation cost with switching allowed; the returned optimum
    anchors every near-optimal solve on the same model."""
    if gap <= 0:
        raise ModelConfigError(f"relative gap must be > 0, got {gap}")
    model.disable_epsilon_row()
    alt = model._solve_round(model.cost_coefficients(), gap, spec=None, label="least-cost",
                             infeasible_hint="line limits cannot carry the load")
    return alt.cost, alt


def solve_alternative(model: ReconfigModel, obj: ObjectiveSpec, f_star: float,
                      epsilon: float, gap: float = 1e-3, *, label: str = "mga",
                      weight_seed: int = 0, index: int = 0) -> Alternative:
    """Minimize the weighted switching objective inside the near-optimal set
    ``cost + buffer = f_star * (1 + epsilon)``. The buffer coefficient in the
    objective keeps the dispatch cost-optimal for the chosen topology."""
    if epsilon < 0:
        raise ModelConfigError(f"epsilon must be >= 0, got {epsilon}")
    if not math.isfinite(f_star) or f_star <= 0:
        raise ModelConfigError(f"f_star must be positive, got {f_star}")
    if len(obj.z_coefficients) != model.n:
        raise ModelConfigError(
            f"objective has {len(obj.z_coefficients)} coefficients for {model.n} dimensions")
    model.ensure_epsilon_row(f_star, epsilon)
    objective = {col: coef for col, coef in zip(model.z_cols, obj.z_coefficients)}
    objective[model.buffer_col] = obj.slack_coefficient
    return model._solve_round(objective, gap, spec=obj, label=label, weight_seed=weight_seed,
                              index=index,
                              infeasible_hint="the near-optimal set is empty or budgets too tight")


def dispatch_only_cost(model: ReconfigModel, alt: Alternative) -> float:
    """Cost of the best dispatch for the alternative's fixed switching state;
    the cross-check that the buffer term did its job."""
    clone = model.model.clone()
    model.fix_topology(clone, alt)
    if model._eps_row is not None:
        clone.rows[model._eps_row].lb = -INF
        clone.rows[model._eps_row].ub = INF
    clone.fix_variable(model.buffer_col, 0.0)
    clone.set_objective(model.cost_coefficients())
    sol = model.backend.solve(clone, rel_gap=1e-9)
    if not sol.ok:
        raise SolverError(f"dispatch-only re-solve failed: {sol.status.value}")
    return float(sum(g.cost_per_mwh * sol.value(model.gen_cols[g.id])
                     for g in model.network.generators))


# -- evaluation-metric optima -------------------------------------------------

# Piecewise-linear chord count for the quadratic-load epigraph.
PWL_SEGMENTS = 12
PWL_RANGE = 1.2


@dataclass
class EvalBound:
    """Optimum of a metric inside the near-optimal set.

    ``value`` is the incumbent optimum; ``bound`` the solver's proven bound
    (dual bound), which is the side alternatives can be checked against.
    ``pwl_gap`` is the worst-case chord over-approximation for the
    quadratic-load metric (zero elsewhere).
    """

    fn_id: str
    direction: str
    value: float
    bound: float
    solver_gap: float
    pwl_gap: float = 0.0

    def respects(self, value: float, tol: float = 1e-9) -> bool:
        if self.direction == MINIMIZE:
            return value >= self.bound - self.pwl_gap - tol
        return value <= self.bound + self.pwl_gap + tol

    def to_dict(self) -> dict:
        return {"fn_id": self.fn_id, "direction": self.direction, "value": self.value,
                "bound": self.bound, "solver_gap": self.solver_gap, "pwl_gap": self.pwl_gap}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalBound":
        return cls(d["fn_id"], d["direction"], float(d["value"]), float(d["bound"]),
                   float(d.get("solver_gap", 0.0)), float(d.get("pwl_gap", 0.0)))


def solve_eval_optimum(net: Network, opts: SwitchingOptions, fn_id: str, f_star: float,
                       epsilon: float, gap: float = 1e-3, *,
                       context: EvalContext | None = None,
                       backend: SolverBackend | None = None) -> EvalBound:
    """Optimize one evaluation metric directly over the near-optimal set to
    obtain a performance bound for generated alternatives.

    The sequence-feasibility metric (u6) has no direct optimization form and
    is rejected. The quadratic-load metric is minimized through a chord
    (secant) epigraph on the loading range [0, 1.2] with PWL_SEGMENTS pieces;
    chords over-approximate the parabola, so the reported bound carries the
    worst-case chord excess as ``pwl_gap``.
    """
    if fn_id == "u6":
        raise UnsupportedEvaluationError(
            "switching sequence feasibility cannot be optimized directly")
    if fn_id not in EVAL_DIRECTIONS:
        raise UnsupportedEvaluationError(f"unknown evaluation function {fn_id!r}")
    ctx = context or EvalContext(network=net)
    rmodel = ReconfigModel(net, opts, backend)
    rmodel.ensure_epsilon_row(f_star, epsilon)
    m = rmodel.model
    direction = EVAL_DIRECTIONS[fn_id]
    pwl_gap = 0.0

    if fn_id == "u1":
        objective = {rmodel.z_cols[j]: -1.0 for j in ctx.j_spec}
    elif fn_id == "u2":
        y = m.add_binary("set_indicator")
        for j, target in ctx.s_spec.items():
            if target == 0:
                m.add_constraint({y: 1.0, rmodel.z_cols[j]: 1.0}, ub=1.0,
                                 name=f"set_req0[{j}]")
            else:
                m.add_constraint({y: 1.0, rmodel.z_cols[j]: -1.0}, ub=0.0,
                                 name=f"set_req1[{j}]")
        objective = {y: -1.0}
    elif fn_id == "u3":
        objective = {col: 1.0 for col in rmodel.z_cols}
    elif fn_id == "u4":
        objective = {}
        thr = ctx.overload_threshold
        for br in net.branches:
            o = m.add_variable(0.0, INF, name=f"overload[{br.id}]")
            flow = rmodel.flow_cols[br.id]
            m.add_constraint({o: 1.0, flow: -1.0 / br.limit_mw}, lb=-thr,
                             name=f"overload_pos[{br.id}]")
            m.add_constraint({o: 1.0, flow: 1.0 / br.limit_mw}, lb=-thr,
                             name=f"overload_neg[{br.id}]")
            objective[o] = 1.0
    else:  # u5
        objective = {}
        step = PWL_RANGE / PWL_SEGMENTS
        for br in net.branches:
            eta = m.add_variable(0.0, INF, name=f"sqload[{br.id}]")
            flow = rmodel.flow_cols[br.id]
            for k in range(PWL_SEGMENTS):
                lo, hi = k * step, (k + 1) * step
                slope, intercept = lo + hi, lo * hi
                m.add_constraint({eta: 1.0, flow: -slope / br.limit_mw}, lb=-intercept,
                                 name=f"sq_chord_pos[{br.id},{k}]")
                m.add_constraint({eta: 1.0, flow: slope / br.limit_mw}, lb=-intercept,
                                 name=f"sq_chord_neg[{br.id},{k}]")
            objective[eta] = 1.0
        pwl_gap = (step * step / 4.0) * len(net.branches)

    m.set_objective(objective)
    sol = rmodel.backend.solve(m, rel_gap=gap)
    if sol.status == SolveStatus.INFEASIBLE:
        raise InfeasibleError(f"evaluation optimum {fn_id}: the near-optimal set is empty")
    if not sol.ok:
        raise SolverError(f"evaluation optimum {fn_id} failed: {sol.status.value}")
    if direction == MAXIMIZE:
        value, bound = -sol.objective, -sol.dual_bound
    else:
        value, bound = sol.objective, sol.dual_bound
    return EvalBound(fn_id, direction, value, bound, sol.gap, pwl_gap)
