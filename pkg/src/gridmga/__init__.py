"""Transmission reconfiguration alternatives: diverse near-optimal switching
plans, ranking feedback encodings, and the study/service plumbing around them."""

from .network import (Branch, Bus, CaseParseError, Generator, Network, NetworkError,
                      Substation, Topology, ValidationReport, hamming_distance,
                      parse_matpower_case, parse_network_json, scale_line_capacities,
                      serialize_network, validate_network)
from .milp import (Alternative, EvalBound, ObjectiveSpec, ReconfigModel, SwitchingOptions,
                   build_reconfiguration_model, dispatch_only_cost, solve_alternative,
                   solve_eval_optimum, solve_least_cost)
from .mga import AlternativeSet, WeightVector, generate_mga_set, sample_diversity_weights
from .hitl import (HitlParams, RankingFeedback, compose_hitl_objective,
                   encode_feedback_baseline, encode_feedback_v1, encode_feedback_v2,
                   run_hitl_round)
from .evaluation import (EVAL_DIRECTIONS, EVAL_IDS, EvalContext, EvalResult,
                         eval_cumulative_overload, eval_cumulative_quadratic_load,
                         eval_specific_actions, eval_specific_set, eval_switching_sequence,
                         eval_topological_depth, evaluate, rank_alternatives)
from .experiment import (ExperimentConfig, ExperimentReport, classify_valuable,
                         export_report, run_experiment)

__version__ = "0.1.0"
