"""Diverse near-optimal alternative generation.

Samples uniform switching weights and solves the reconfiguration model
once per weight vector inside the near-optimal cost set. Duplicate
topologies are kept (different dispatches can hide behind the same
switching vector) and flagged not-unique.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .milp import Alternative, ObjectiveSpec, ReconfigModel, solve_alternative
from .network import Network, Topology

log = logging.getLogger("gridmga.mga")


@dataclass(frozen=True)
class WeightVector:
    """Per-switching-dimension objective weights."""

    values: tuple[float, ...]
    kind: str = "diversity"  # diversity | feedback | composed

    def __post_init__(self):
        if self.kind not in ("diversity", "feedback", "composed"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "diversity" and any(not (0.0 <= v <= 1.0) for v in self.values):
            raise ValueError("diversity weights must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def sample_diversity_weights(n: int, seed: int, index: int) -> WeightVector:
    """n i.i.d. uniform [0, 1) weights, deterministic per (seed, index).

    Each index gets its own substream, so parallel solves see the same
    weights regardless of completion order.
    """
    if n < 1:
        raise ValueError("need at least one switching dimension to sample weights")
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    rng = np.random.default_rng([seed, index])
    return WeightVector(tuple(rng.random(n)), "diversity")


@dataclass
class AlternativeSet:
    """Ordered alternatives from one generation round, with the anchor data
    (cost optimum, epsilon, seed, model options) needed to reference and
    extend them. Self-contained when serialized: the network document and
    the least-cost topology travel with the set."""

    alternatives: list[Alternative]
    f_star: float
    epsilon: float
    network: Network
    seed: int
    label: str = "mga"
    options: "SwitchingOptions | None" = None
    least_cost_topology: Topology | None = None
    gap: float = 1e-3

    def __len__(self) -> int:
        return len(self.alternatives)

    def z_matrix(self) -> np.ndarray:
        """Switching bits, one row per alternative."""
        return np.array([alt.topology.bits for alt in self.alternatives], dtype=float)

    def topologies(self) -> list[Topology]:
        return [alt.topology for alt in self.alternatives]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "f_star": self.f_star,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "gap": self.gap,
            "options": self.options.to_dict() if self.options else None,
            "least_cost_topology": (self.least_cost_topology.to_dict()
                                    if self.least_cost_topology else None),
            "network": self.network.to_dict(),
            "alternatives": [alt.to_dict() for alt in self.alternatives],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlternativeSet":
        from .milp import SwitchingOptions
        return cls(
            alternatives=[Alternative.from_dict(a) for a in d["alternatives"]],
            f_star=float(d["f_star"]),
            epsilon=float(d["epsilon"]),
            network=Network.from_dict(d["network"]),
            seed=int(d.get("seed", 0)),
            label=str(d.get("label", "mga")),
            options=(SwitchingOptions.from_dict(d["options"]) if d.get("options") else None),
            least_cost_topology=(Topology.from_dict(d["least_cost_topology"])
                                 if d.get("least_cost_topology") else None),
            gap=float(d.get("gap", 1e-3)),
        )


def mark_uniqueness(alternatives: list[Alternative],
                    reference: set[tuple[int, ...]] | None = None) -> None:
    """Flag each alternative unique unless an earlier one (or a reference
    topology) shares its switching vector."""
    seen: set[tuple[int, ...]] = set(reference or ())
    for alt in alternatives:
        key = alt.topology.bits
        alt.unique = key not in seen
        seen.add(key)


def generate_mga_set(model: ReconfigModel, f_star: float, epsilon: float, count: int,
                     seed: int, *, gap: float = 1e-3, workers: int = 1,
                     label: str = "mga",
                     include_least_cost: Alternative | None = None) -> AlternativeSet:
    """Solve ``count`` weighted alternatives; alternative i uses the weight
    substream (seed, i) and the cost-buffer coefficient -1/(100 * f_star).

    The least-cost solution is not part of the set unless explicitly passed
    via ``include_least_cost`` (it is then prepended and re-indexed).
    """
    if count < 1:
        raise ValueError("alternative count must be >= 1")
    if not model.options.any_mode_enabled:
        raise ValueError("at least one switching mode must be enabled to generate alternatives")

    slack_coef = -1.0 / (100.0 * f_star)

    def solve_one(rmodel: ReconfigModel, i: int) -> Alternative:
        weights = sample_diversity_weights(rmodel.n, seed, i)
        obj = ObjectiveSpec(weights.values, slack_coef)
        return solve_alternative(rmodel, obj, f_star, epsilon, gap,
                                 label=label, weight_seed=seed, index=i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(solve_one, model.clone(), i) for i in range(count)]
            alternatives = [f.result() for f in futures]
    else:
        alternatives = [solve_one(model, i) for i in range(count)]

    if include_least_cost is not None:
        alternatives = [include_least_cost] + alternatives
    for pos, alt in enumerate(alternatives):
        alt.index = pos
    mark_uniqueness(alternatives)
    log.info("%s round: %d alternatives, %d unique", label, len(alternatives),
             sum(a.unique for a in alternatives))
    return AlternativeSet(alternatives, f_star, epsilon, model.network, seed, label=label)
