"""Ranking feedback encodings and feedback-guided generation rounds.

A ranking of previously generated alternatives is turned into feedback
weights over the switching dimensions. Three encodings are supported:

- baseline: one signed {-1, 0, +1} vector per top-ranked alternative
  (dead-banded by the distinctive threshold tau) plus their sum,
- v1: a single thresholded vector built from the mean of the top-ranked
  alternatives,
- v2: the same difference of means kept continuous, which removes the
  threshold parameter entirely.

The composed objective mixes normalized diversity and feedback weights
with factors a (exploration) and b (feedback alignment).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .evaluation import RankingFeedback
from .mga import AlternativeSet, WeightVector, mark_uniqueness, sample_diversity_weights
from .milp import ObjectiveSpec, ReconfigModel, solve_alternative

__all__ = [
    "RankingFeedback", "HitlParams", "encode_feedback_baseline", "encode_feedback_v1",
    "encode_feedback_v2", "compose_hitl_objective", "run_hitl_round", "VARIANTS",
]

log = logging.getLogger("gridmga.hitl")

VARIANTS = ("baseline", "v1", "v2")


@dataclass(frozen=True)
class HitlParams:
    variant: str
    tau: float = 0.15
    a: float = 1.0
    b: float = 1.0
    round_count: int = 100

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be >= 0")
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if self.round_count < 0:
            raise ValueError("round_count must be >= 0")

    def to_dict(self) -> dict:
        return {"variant": self.variant, "tau": self.tau, "a": self.a, "b": self.b,
                "round_count": self.round_count}

    @classmethod
    def from_dict(cls, d: dict) -> "HitlParams":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def _threshold(delta: np.ndarray, tau: float) -> np.ndarray:
    return np.where(delta > tau, 1.0, np.where(delta < -tau, -1.0, 0.0))


def _validated_z(alt_set: AlternativeSet, ranking: RankingFeedback) -> np.ndarray:
    ranking.validate_against(len(alt_set))
    return alt_set.z_matrix()


def encode_feedback_baseline(alt_set: AlternativeSet, ranking: RankingFeedback,
                             tau: float) -> list[WeightVector]:
    """One thresholded vector per top-ranked alternative plus the summed
    vector; entries are +1 / 0 / -1 around the dead-band tau."""
    z = _validated_z(alt_set, ranking)
    mean_all = z.mean(axis=0)
    vectors = []
    for k in ranking.ranked_ids:
        delta = mean_all - z[k]
        vectors.append(WeightVector(tuple(_threshold(delta, tau)), "feedback"))
    summed = np.sum([v.values for v in vectors], axis=0)
    vectors.append(WeightVector(tuple(summed), "feedback"))
    return vectors


def encode_feedback_v1(alt_set: AlternativeSet, ranking: RankingFeedback,
                       tau: float) -> WeightVector:
    """Single thresholded vector from the mean of the top-ranked alternatives."""
    z = _validated_z(alt_set, ranking)
    delta = z.mean(axis=0) - z[list(ranking.ranked_ids)].mean(axis=0)
    return WeightVector(tuple(_threshold(delta, tau)), "feedback")


def encode_feedback_v2(alt_set: AlternativeSet, ranking: RankingFeedback) -> WeightVector:
    """Continuous difference of means; no threshold parameter."""
    z = _validated_z(alt_set, ranking)
    delta = z.mean(axis=0) - z[list(ranking.ranked_ids)].mean(axis=0)
    return WeightVector(tuple(delta), "feedback")


def compose_hitl_objective(w_d: WeightVector, w_hitl: WeightVector, a: float, b: float,
                           f_star: float) -> ObjectiveSpec:
    """Mix normalized diversity and feedback weights into one objective.

    Both vectors are L2-normalized so a and b compare like with like. A
    zero-norm feedback vector carries no signal; the feedback term is then
    dropped and the round degenerates to plain diversity sampling.
    """
    if len(w_d) != len(w_hitl):
        raise ValueError(f"weight length mismatch: {len(w_d)} vs {len(w_hitl)}")
    if a < 0 or b < 0:
        raise ValueError("a and b must be >= 0")
    d_norm = w_d.norm
    if d_norm == 0.0:
        raise ValueError("diversity weights must not all be zero")
    coeffs = a * np.asarray(w_d.values) / d_norm
    h_norm = w_hitl.norm
    if h_norm == 0.0:
        log.warning("feedback weights are all zero; round degenerates to plain diversity MGA")
    else:
        coeffs = coeffs + b * np.asarray(w_hitl.values) / h_norm
    return ObjectiveSpec(tuple(float(c) for c in coeffs), -1.0 / (100.0 * f_star))


def run_hitl_round(model: ReconfigModel, alt_set: AlternativeSet, ranking: RankingFeedback,
                   params: HitlParams, seed: int, *, gap: float = 1e-3,
                   workers: int = 1) -> AlternativeSet:
    """Generate a feedback-guided round.

    Every alternative samples a fresh diversity vector; the feedback vector
    is fixed per round (baseline distributes its per-rank vectors plus the
    summed vector round-robin over the budget). Uniqueness is judged against
    the feeding set's topologies as well as earlier alternatives of this
    round.
    """
    ranking.validate_against(len(alt_set))
    if params.variant == "baseline":
        vectors = encode_feedback_baseline(alt_set, ranking, params.tau)
    elif params.variant == "v1":
        vectors = [encode_feedback_v1(alt_set, ranking, params.tau)]
    else:
        vectors = [encode_feedback_v2(alt_set, ranking)]

    label = f"hitl-{params.variant}"
    f_star, epsilon = alt_set.f_star, alt_set.epsilon

    def solve_one(rmodel: ReconfigModel, i: int):
        w_d = sample_diversity_weights(rmodel.n, seed, i)
        obj = compose_hitl_objective(w_d, vectors[i % len(vectors)], params.a, params.b, f_star)
        return solve_alternative(rmodel, obj, f_star, epsilon, gap,
                                 label=label, weight_seed=seed, index=i)

    if params.round_count == 0:
        alternatives = []
    elif workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(solve_one, model.clone(), i)
                       for i in range(params.round_count)]
            alternatives = [f.result() for f in futures]
    else:
        alternatives = [solve_one(model, i) for i in range(params.round_count)]

    reference = {alt.topology.bits for alt in alt_set.alternatives}
    mark_uniqueness(alternatives, reference)
    log.info("%s round: %d alternatives, %d unique", label, len(alternatives),
             sum(a.unique for a in alternatives))
    return AlternativeSet(alternatives, f_star, epsilon, alt_set.network, seed, label=label,
                          options=alt_set.options,
                          least_cost_topology=alt_set.least_cost_topology, gap=gap)
