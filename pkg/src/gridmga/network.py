"""Grid case data model.

Loads MATPOWER-style case files (bus/branch/gen/gencost tables) or the
native JSON network format, validates them, and provides the topology
primitives shared by all other modules: switch vectors, Hamming distance,
and line-capacity scaling.

Conventions
-----------
- Susceptance is per-unit (1/x of the branch reactance); flows in MW are
  ``base_mva * susceptance * angle_difference``.
- Generation cost is linear (currency per MWh); quadratic gencost terms
  are dropped on parse.
- A substation is "splittable" when it can be divided into two busbars;
  splittable substations contribute one split bit to a Topology.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator, Sequence


class NetworkError(ValueError):
    """Malformed case data or violated network invariant."""


class CaseParseError(NetworkError):
    """Unparseable case file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Bus:
    id: int
    base_kv: float
    is_slack: bool = False
    load_mw: float = 0.0


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    susceptance: float  # per-unit, 1/x
    limit_mw: float
    switchable: bool = True


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    cost_per_mwh: float


@dataclass(frozen=True)
class Substation:
    """Split-capable node: the busbar pair a bus can be divided into.

    ``attached_branch_ends`` lists (branch id, end) pairs where end is
    "from" or "to"; ``attached_injections`` lists ("gen", id) / ("load",
    bus id) pairs that can be reassigned between the two busbars.
    """

    bus: int
    splittable: bool
    attached_branch_ends: tuple[tuple[int, str], ...] = ()
    attached_injections: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class Topology:
    """Binary switching state: one bit per switchable branch (1 = opened)
    and one per splittable substation (1 = split)."""

    line_open: tuple[int, ...]
    busbar_split: tuple[int, ...] = ()

    def __post_init__(self):
        for bit in self.line_open + self.busbar_split:
            if bit not in (0, 1):
                raise NetworkError(f"topology bits must be 0/1, got {bit!r}")

    @property
    def bits(self) -> tuple[int, ...]:
        return self.line_open + self.busbar_split

    @property
    def action_count(self) -> int:
        return sum(self.bits)

    def to_dict(self) -> dict:
        return {"line_open": list(self.line_open), "busbar_split": list(self.busbar_split)}

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        return cls(tuple(d["line_open"]), tuple(d.get("busbar_split", ())))


def hamming_distance(t1: Topology, t2: Topology) -> int:
    """Number of switching bits that differ between two topologies."""
    if len(t1.line_open) != len(t2.line_open) or len(t1.busbar_split) != len(t2.busbar_split):
        raise NetworkError(
            "topology dimension mismatch: "
            f"({len(t1.line_open)},{len(t1.busbar_split)}) vs ({len(t2.line_open)},{len(t2.busbar_split)})"
        )
    return sum(a != b for a, b in zip(t1.bits, t2.bits))


@dataclass
class Network:
    name: str
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    substations: tuple[Substation, ...] = ()

    @cached_property
    def bus_by_id(self) -> dict[int, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def branch_by_id(self) -> dict[int, Branch]:
        return {br.id: br for br in self.branches}

    @cached_property
    def generator_by_id(self) -> dict[int, Generator]:
        return {g.id: g for g in self.generators}

    @cached_property
    def substation_by_bus(self) -> dict[int, Substation]:
        return {s.bus: s for s in self.substations}

    @cached_property
    def slack_bus(self) -> Bus:
        slacks = [b for b in self.buses if b.is_slack]
        if len(slacks) != 1:
            raise NetworkError(f"expected exactly one slack bus, found {len(slacks)}")
        return slacks[0]

    @cached_property
    def switchable_branches(self) -> tuple[Branch, ...]:
        """Switchable branches in file order; defines the line bit order."""
        return tuple(br for br in self.branches if br.switchable)

    @cached_property
    def splittable_substations(self) -> tuple[Substation, ...]:
        """Splittable substations in bus order; defines the split bit order."""
        return tuple(s for s in self.substations if s.splittable)

    @cached_property
    def total_load(self) -> float:
        return sum(b.load_mw for b in self.buses)

    @cached_property
    def generators_at(self) -> dict[int, tuple[Generator, ...]]:
        at: dict[int, list[Generator]] = {b.id: [] for b in self.buses}
        for g in self.generators:
            at[g.bus].append(g)
        return {k: tuple(v) for k, v in at.items()}

    def base_topology(self) -> Topology:
        """All-closed topology: every switch closed, no busbar split."""
        return Topology(
            (0,) * len(self.switchable_branches),
            (0,) * len(self.splittable_substations),
        )

    def topology_actions(self, topo: Topology) -> list[tuple[str, int]]:
        """Actions encoded by a topology as ("line", branch id) / ("split", bus id)."""
        actions: list[tuple[str, int]] = []
        for bit, br in zip(topo.line_open, self.switchable_branches):
            if bit:
                actions.append(("line", br.id))
        for bit, sub in zip(topo.busbar_split, self.splittable_substations):
            if bit:
                actions.append(("split", sub.bus))
        return actions

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_mva": self.base_mva,
            "buses": [
                {"id": b.id, "base_kv": b.base_kv, "is_slack": b.is_slack, "load_mw": b.load_mw}
                for b in self.buses
            ],
            "branches": [
                {
                    "id": br.id,
                    "from_bus": br.from_bus,
                    "to_bus": br.to_bus,
                    "susceptance": br.susceptance,
                    "limit_mw": br.limit_mw,
                    "switchable": br.switchable,
                }
                for br in self.branches
            ],
            "generators": [
                {
                    "id": g.id,
                    "bus": g.bus,
                    "p_min": g.p_min,
                    "p_max": g.p_max,
                    "cost_per_mwh": g.cost_per_mwh,
                }
                for g in self.generators
            ],
            "substations": [
                {
                    "bus": s.bus,
                    "splittable": s.splittable,
                    "attached_branch_ends": [list(e) for e in s.attached_branch_ends],
                    "attached_injections": [list(i) for i in s.attached_injections],
                }
                for s in self.substations
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        return cls(
            name=d.get("name", "unnamed"),
            base_mva=float(d.get("base_mva", 100.0)),
            buses=tuple(
                Bus(int(b["id"]), float(b.get("base_kv", 1.0)), bool(b.get("is_slack", False)),
                    float(b.get("load_mw", 0.0)))
                for b in d["buses"]
            ),
            branches=tuple(
                Branch(int(br["id"]), int(br["from_bus"]), int(br["to_bus"]),
                       float(br["susceptance"]), float(br["limit_mw"]),
                       bool(br.get("switchable", True)))
                for br in d["branches"]
            ),
            generators=tuple(
                Generator(int(g["id"]), int(g["bus"]), float(g.get("p_min", 0.0)),
                          float(g["p_max"]), float(g["cost_per_mwh"]))
                for g in d["generators"]
            ),
            substations=tuple(
                Substation(
                    int(s["bus"]), bool(s["splittable"]),
                    tuple((int(e[0]), str(e[1])) for e in s.get("attached_branch_ends", ())),
                    tuple((str(i[0]), int(i[1])) for i in s.get("attached_injections", ())),
                )
                for s in d.get("substations", ())
            ),
        )


def serialize_network(net: Network) -> str:
    """Native JSON network document (the fixture / service payload format)."""
    return json.dumps(net.to_dict(), indent=2)


def parse_network_json(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"invalid JSON network document: {exc.msg}", exc.lineno)
    net = Network.from_dict(doc)
    _require_single_slack(net)
    return net


# --- MATPOWER-style parsing -------------------------------------------------

# Minimum bus table elements a split must be able to distribute meaningfully.
SPLITTABLE_MIN_ELEMENTS = 4


def _strip_comment(line: str) -> str:
    pos = line.find("%")
    return line if pos < 0 else line[:pos]


def _scan_matrices(text: str) -> tuple[dict[str, list[list[float]]], dict[str, float]]:
    """Extract mpc.<name> = [rows]; blocks and scalar assignments."""
    matrices: dict[str, list[list[float]]] = {}
    scalars: dict[str, float] = {}
    current: str | None = None
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if current is None:
            if line.startswith("mpc.") and "[" in line:
                name = line.split("=", 1)[0].strip()[4:].strip()
                current, rows = name, []
                remainder = line.split("[", 1)[1]
                line = remainder
                # fall through to row parsing below
            elif line.startswith("mpc.") and "=" in line:
                name, value = (part.strip() for part in line.split("=", 1))
                value = value.rstrip(";").strip()
                if not value.startswith(("'", '"')):
                    try:
                        scalars[name[4:]] = float(value)
                    except ValueError:
                        pass
                continue
            else:
                continue
        closing = False
        if "]" in line:
            line = line.split("]", 1)[0]
            closing = True
        for chunk in line.replace(",", " ").split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            try:
                rows.append([float(tok) for tok in chunk.split()])
            except ValueError as exc:
                raise CaseParseError(f"malformed {current} table row: {exc}", lineno)
        if closing:
            matrices[current] = rows
            current = None
    if current is not None:
        raise CaseParseError(f"unterminated {current} table", None)
    return matrices, scalars


def _require_single_slack(net: Network) -> None:
    slacks = [b.id for b in net.buses if b.is_slack]
    if len(slacks) == 0:
        raise NetworkError("no slack bus defined")
    if len(slacks) > 1:
        raise NetworkError(f"multiple slack buses: {slacks}")


def build_substations(buses: Sequence[Bus], branches: Sequence[Branch],
                      generators: Sequence[Generator],
                      min_elements: int = SPLITTABLE_MIN_ELEMENTS) -> tuple[Substation, ...]:
    """Annotate one substation per bus; mark split-capable the buses where a
    two-busbar split can distribute at least ``min_elements`` attached
    elements (branch ends plus injections)."""
    # dangling references are skipped here; validate_network reports them
    ends: dict[int, list[tuple[int, str]]] = {b.id: [] for b in buses}
    for br in branches:
        if br.from_bus in ends:
            ends[br.from_bus].append((br.id, "from"))
        if br.to_bus in ends:
            ends[br.to_bus].append((br.id, "to"))
    injections: dict[int, list[tuple[str, int]]] = {b.id: [] for b in buses}
    for g in generators:
        if g.bus in injections:
            injections[g.bus].append(("gen", g.id))
    for b in buses:
        if b.load_mw > 0:
            injections[b.id].append(("load", b.id))
    subs = []
    for b in buses:
        n_elements = len(ends[b.id]) + len(injections[b.id])
        subs.append(Substation(
            bus=b.id,
            splittable=n_elements >= min_elements,
            attached_branch_ends=tuple(ends[b.id]),
            attached_injections=tuple(injections[b.id]),
        ))
    return tuple(subs)


def parse_matpower_case(text: str, name: str = "case") -> Network:
    """Parse a MATPOWER-style case (bus, branch, gen, gencost tables) or a
    native JSON network document.

    Per-unit susceptance is 1/x; the linear gencost term becomes the cost
    per MWh; all branches are switchable by default. Branches without a
    rating (rateA <= 0) get a non-binding sentinel limit of 10x total load.
    """
    if text.lstrip().startswith("{"):
        return parse_network_json(text)
    matrices, scalars = _scan_matrices(text)
    for table in ("bus", "branch", "gen"):
        if table not in matrices:
            raise CaseParseError(f"missing mpc.{table} table")
    base_mva = scalars.get("baseMVA", 100.0)

    buses = []
    for row in matrices["bus"]:
        if len(row) < 10:
            raise CaseParseError(f"bus row too short ({len(row)} columns)")
        bus_type = int(row[1])
        buses.append(Bus(
            id=int(row[0]),
            base_kv=float(row[9]),
            is_slack=bus_type == 3,
            load_mw=float(row[2]),
        ))
    total_load = sum(b.load_mw for b in buses)
    sentinel = 10.0 * max(total_load, 1.0)

    branches = []
    for i, row in enumerate(matrices["branch"], start=1):
        if len(row) < 6:
            raise CaseParseError(f"branch row too short ({len(row)} columns)")
        status = int(row[10]) if len(row) > 10 else 1
        if status == 0:
            continue
        x = float(row[3])
        if x == 0.0:
            raise CaseParseError(f"zero reactance on branch {i} ({int(row[0])}-{int(row[1])})")
        if x < 0.0:
            raise CaseParseError(f"negative reactance on branch {i} ({int(row[0])}-{int(row[1])})")
        rate_a = float(row[5])
        branches.append(Branch(
            id=len(branches) + 1,
            from_bus=int(row[0]),
            to_bus=int(row[1]),
            susceptance=1.0 / x,
            limit_mw=rate_a if rate_a > 0 else sentinel,
        ))

    gencost = matrices.get("gencost", [])
    generators = []
    for i, row in enumerate(matrices["gen"]):
        status = int(row[7]) if len(row) > 7 else 1
        if status <= 0:
            continue
        cost = 0.0
        if i < len(gencost):
            crow = gencost[i]
            model = int(crow[0])
            if model != 2:
                raise CaseParseError(f"unsupported gencost model {model} for generator {i + 1}")
            n_terms = int(crow[3])
            coeffs = crow[4:4 + n_terms]
            if n_terms >= 2:
                cost = float(coeffs[-2])  # linear term; quadratic and higher dropped
        generators.append(Generator(
            id=len(generators) + 1,
            bus=int(row[0]),
            p_min=float(row[9]) if len(row) > 9 else 0.0,
            p_max=float(row[8]) if len(row) > 8 else 0.0,
            cost_per_mwh=cost,
        ))

    net = Network(
        name=name,
        base_mva=base_mva,
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
        substations=build_substations(buses, branches, generators),
    )
    _require_single_slack(net)
    return net


def scale_line_capacities(net: Network, factor: float) -> Network:
    """Uniformly scale every branch limit; the congestion knob for studies."""
    if not (0.0 < factor <= 1.0):
        raise NetworkError(f"capacity factor must be in (0, 1], got {factor}")
    return replace(net, branches=tuple(
        replace(br, limit_mw=br.limit_mw * factor) for br in net.branches
    ))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self) -> Iterator[str]:
        return iter(self.violations)


def validate_network(net: Network) -> ValidationReport:
    """Structural checks; returns findings instead of raising."""
    report = ValidationReport()
    seen_bus: set[int] = set()
    for b in net.buses:
        if b.id in seen_bus:
            report.violations.append(f"duplicate bus id {b.id}")
        seen_bus.add(b.id)
        if b.load_mw < 0:
            report.violations.append(f"bus {b.id} has negative load {b.load_mw}")
    slacks = [b.id for b in net.buses if b.is_slack]
    if len(slacks) != 1:
        report.violations.append(f"expected one slack bus, found {slacks or 'none'}")

    seen_branch: set[int] = set()
    for br in net.branches:
        if br.id in seen_branch:
            report.violations.append(f"duplicate branch id {br.id}")
        seen_branch.add(br.id)
        if br.from_bus == br.to_bus:
            report.violations.append(f"branch {br.id} connects bus {br.from_bus} to itself")
        for end in (br.from_bus, br.to_bus):
            if end not in net.bus_by_id:
                report.violations.append(f"branch {br.id} references missing bus {end}")
        if br.susceptance <= 0:
            report.violations.append(f"branch {br.id} has nonpositive susceptance")
        if br.limit_mw <= 0:
            report.violations.append(f"branch {br.id} has nonpositive limit")

    for g in net.generators:
        if g.bus not in net.bus_by_id:
            report.violations.append(f"generator {g.id} references missing bus {g.bus}")
        if not (0 <= g.p_min <= g.p_max):
            report.violations.append(
                f"generator {g.id} has invalid bounds [{g.p_min}, {g.p_max}]")

    for s in net.substations:
        if s.bus not in net.bus_by_id:
            report.violations.append(f"substation references missing bus {s.bus}")
        for branch_id, end in s.attached_branch_ends:
            br = net.branch_by_id.get(branch_id)
            if br is None:
                report.violations.append(
                    f"substation {s.bus} references missing branch {branch_id}")
            elif end not in ("from", "to") or (br.from_bus if end == "from" else br.to_bus) != s.bus:
                report.violations.append(
                    f"substation {s.bus} misattaches branch {branch_id} end {end!r}")
        for kind, ref in s.attached_injections:
            if kind == "gen" and ref not in net.generator_by_id:
                report.violations.append(f"substation {s.bus} references missing generator {ref}")
            elif kind == "load" and ref != s.bus:
                report.violations.append(f"substation {s.bus} references foreign load {ref}")

    if net.buses and not report.violations:
        unreached = _disconnected_buses(net)
        for bus_id in sorted(unreached):
            report.violations.append(f"bus {bus_id} is disconnected in the base topology")
    return report


def _disconnected_buses(net: Network) -> set[int]:
    adjacency: dict[int, list[int]] = {b.id: [] for b in net.buses}
    for br in net.branches:
        adjacency[br.from_bus].append(br.to_bus)
        adjacency[br.to_bus].append(br.from_bus)
    start = net.buses[0].id
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return {b.id for b in net.buses} - seen
