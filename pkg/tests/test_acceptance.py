"""Release acceptance suite.

One test per acceptance criterion, each asserting at its pinned tolerance
and printing a PASS line (run with -s to see them inline). The congested
57-bus checks share one reduced study run (2 seeds, 20 alternatives,
top 5, feedback variant v2 on the overload and quadratic-load metrics).
"""

from statistics import median

import numpy as np
import pytest

from gridmga.evaluation import (EvalContext, RankingFeedback, eval_switching_sequence,
                                evaluate, rank_alternatives)
from gridmga.hitl import (HitlParams, compose_hitl_objective, encode_feedback_baseline,
                          encode_feedback_v1, encode_feedback_v2, run_hitl_round)
from gridmga.mga import WeightVector, generate_mga_set
from gridmga.milp import (ObjectiveSpec, ReconfigModel, SwitchingOptions, dispatch_only_cost,
                          solve_alternative, solve_eval_optimum, solve_least_cost)
from gridmga.network import parse_matpower_case, parse_network_json, serialize_network
from tests.conftest import make_net
from tests.oracles import brute_force_alternative, brute_force_least_cost
from tests.test_evaluation import alt_for, permutation_oracle
from tests.test_hitl import bit_set

EPSILON = 0.05
GAP = 1e-3


def report(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}")


@pytest.fixture(scope="session")
def tri_runs():
    """Small congested triangle: one diversity round plus one round per
    feedback variant."""
    from gridmga.network import Branch, Bus, Generator
    net = make_net(
        "tri-tight",
        [Bus(1, 135.0, True, 0.0), Bus(2, 135.0, False, 0.0), Bus(3, 135.0, False, 100.0)],
        [Branch(1, 1, 2, 10.0, 100.0), Branch(2, 2, 3, 10.0, 100.0),
         Branch(3, 1, 3, 10.0, 60.0)],
        [Generator(1, 1, 0.0, 200.0, 10.0), Generator(2, 2, 0.0, 200.0, 100.0)],
    )
    model = ReconfigModel(net, SwitchingOptions(max_line_actions=3))
    f_star, best = solve_least_cost(model, GAP)
    ctx = EvalContext.from_least_cost(net, best.topology)
    mga = generate_mga_set(model, f_star, EPSILON, 8, seed=0, gap=GAP)
    rounds = {"mga": mga}
    ranking = rank_alternatives(mga.alternatives, "u4", ctx, top_k=3)
    for variant in ("baseline", "v1", "v2"):
        rounds[variant] = run_hitl_round(model, mga, ranking,
                                         HitlParams(variant, round_count=6), seed=1, gap=GAP)
    return {"net": net, "model": model, "f_star": f_star, "best": best, "ctx": ctx,
            "rounds": rounds}


@pytest.fixture(scope="session")
def reduced_study(case57_congested):
    """Reduced congested 57-bus run: 2 seeds x (20 diversity + v2 rounds for
    the overload and quadratic-load metrics, top 5)."""
    opts = SwitchingOptions(max_line_actions=3)
    model = ReconfigModel(case57_congested, opts)
    f_star, best = solve_least_cost(model, GAP)
    ctx = EvalContext.from_least_cost(case57_congested, best.topology)
    runs = {}
    for seed in (0, 1):
        mga = generate_mga_set(model, f_star, EPSILON, 20, seed, gap=GAP)
        hitl = {}
        for fn in ("u4", "u5"):
            ranking = rank_alternatives(mga.alternatives, fn, ctx, top_k=5)
            hitl[fn] = run_hitl_round(model, mga, ranking,
                                      HitlParams("v2", round_count=20), seed, gap=GAP)
        runs[seed] = {"mga": mga, "hitl": hitl}
    return {"net": case57_congested, "opts": opts, "model": model, "f_star": f_star,
            "best": best, "ctx": ctx, "runs": runs}


def _all_alternatives(tri_runs, reduced_study):
    for alt_set in tri_runs["rounds"].values():
        for alt in alt_set.alternatives:
            yield tri_runs["f_star"], alt
    for seed_run in reduced_study["runs"].values():
        for alt in seed_run["mga"].alternatives:
            yield reduced_study["f_star"], alt
        for alt_set in seed_run["hitl"].values():
            for alt in alt_set.alternatives:
                yield reduced_study["f_star"], alt


def test_01_near_optimal_cost_bound(tri_runs, reduced_study):
    """Every generated alternative stays within cost <= f* * 1.05 + 1e-6."""
    worst = -float("inf")
    count = 0
    for f_star, alt in _all_alternatives(tri_runs, reduced_study):
        excess = alt.cost - (f_star * (1 + EPSILON) + 1e-6)
        worst = max(worst, excess)
        assert excess <= 0.0, f"cost {alt.cost} exceeds budget by {excess}"
        count += 1
    report(f"near-optimal cost bound held for {count} alternatives "
           f"(worst margin {worst:.3e} <= 0)")


def test_02_dispatch_stays_cost_optimal(tri_runs, reduced_study):
    """A dispatch-only re-solve with the topology fixed moves the cost by at
    most 0.001*f* + 0.5%*f*."""
    checked = 0
    worst = 0.0
    for label, payload in (("triangle", tri_runs), ("case57", reduced_study)):
        model, f_star = payload["model"], payload["f_star"]
        tolerance = 0.001 * f_star + 0.005 * f_star
        sets = (payload["rounds"].values() if label == "triangle"
                else [payload["runs"][0]["mga"], payload["runs"][0]["hitl"]["u4"]])
        for alt_set in sets:
            for alt in alt_set.alternatives:
                redo = dispatch_only_cost(model, alt)
                diff = abs(redo - alt.cost)
                worst = max(worst, diff / f_star)
                assert diff <= tolerance, f"{label}: re-solve moved cost by {diff}"
                checked += 1
    report(f"dispatch optimality within 0.6% of f* for {checked} alternatives "
           f"(worst {worst:.2e} of f*)")


def test_03_feedback_encoding_exactness():
    """Hand-computed encodings are met exactly; the mean-based single vector
    coincides with the per-rank encoding for a single top alternative;
    composition is invariant to positive feedback scaling at 1e-12."""
    # thresholded per-rank encoding on a 10-alternative column
    rows = [[1], [1], [1]] + [[0]] * 7
    vectors = encode_feedback_baseline(bit_set(rows), RankingFeedback((0,)), 0.15)
    assert vectors[0].values == (-1.0,)            # delta -0.7 below -tau
    rows_band = [[1]] + [[0]] * 9
    vec_band = encode_feedback_baseline(bit_set(rows_band), RankingFeedback((1,)), 0.15)
    assert vec_band[0].values == (0.0,)            # delta 0.1 inside the dead-band
    rows_sum = [[1], [1]] + [[0]] * 8
    vec_sum = encode_feedback_baseline(bit_set(rows_sum), RankingFeedback((0, 1)), 0.15)
    assert vec_sum[2].values == (-2.0,)            # summed vector

    rows_v1 = [[1], [1], [1], [0], [0], [0], [0], [0], [0], [0]]
    v1 = encode_feedback_v1(bit_set(rows_v1), RankingFeedback((0, 1, 3)), 0.15)
    assert v1.values == (-1.0,)                    # delta -0.3667

    rows_v2 = [[1]] * 6 + [[0]] * 4
    v2 = encode_feedback_v2(bit_set(rows_v2), RankingFeedback((6,)))
    assert v2.values[0] == pytest.approx(0.6)
    v2b = encode_feedback_v2(bit_set(rows_v2), RankingFeedback((0,)))
    assert v2b.values[0] == pytest.approx(-0.4)

    rng = np.random.default_rng(17)
    for _ in range(20):
        rows = rng.integers(0, 2, size=(12, 6)).tolist()
        k = int(rng.integers(0, 12))
        tau = float(rng.uniform(0.0, 0.9))
        base = encode_feedback_baseline(bit_set(rows), RankingFeedback((k,)), tau)
        v1 = encode_feedback_v1(bit_set(rows), RankingFeedback((k,)), tau)
        assert base[0].values == v1.values

    for _ in range(20):
        w_d = WeightVector(tuple(rng.uniform(0.01, 1.0, 5)))
        raw = rng.normal(size=5)
        scale = float(rng.uniform(1e-3, 1e3))
        a = compose_hitl_objective(w_d, WeightVector(tuple(raw), "feedback"), 1.0, 1.0, 100.0)
        b = compose_hitl_objective(w_d, WeightVector(tuple(scale * raw), "feedback"),
                                   1.0, 1.0, 100.0)
        assert np.allclose(a.z_coefficients, b.z_coefficients, atol=1e-12)
    report("feedback encodings exact on fixtures; single-top equivalence and "
           "1e-12 scaling invariance hold")


def test_04_brute_force_equivalence(tri_runs):
    """Enumeration over all topologies with an LP dispatch per topology
    reproduces both solve modes within 0.001 relative."""
    net, model = tri_runs["net"], tri_runs["model"]
    f_star = tri_runs["f_star"]
    oracle_cost, _ = brute_force_least_cost(net, 3)
    assert f_star == pytest.approx(oracle_cost, rel=1e-3)

    for weights in [(1.0, 1.0, 0.1), (0.7, 0.2, 0.9), (0.05, 0.8, 0.4)]:
        oracle_obj, _ = brute_force_alternative(net, 3, weights, f_star, EPSILON)
        alt = solve_alternative(model, ObjectiveSpec(weights, -1 / (100 * f_star)),
                                f_star, EPSILON, GAP)
        assert alt.objective_value == pytest.approx(
            oracle_obj, abs=1e-3 * max(1.0, abs(oracle_obj)))
    report(f"least cost {f_star:.1f} and 3 weighted solves match exhaustive "
           "enumeration within 0.001 relative")


def test_05_feedback_median_improvement(reduced_study):
    """On the congested 57-bus case the v2 feedback round's median overload
    and quadratic-load values do not exceed the diversity round's median in
    at least 1 of 2 seeds (reduced configuration)."""
    ctx = reduced_study["ctx"]
    for fn in ("u4", "u5"):
        improved = 0
        detail = []
        for seed, run in reduced_study["runs"].items():
            mga_median = median(evaluate(fn, a, ctx).value for a in run["mga"].alternatives)
            hitl_median = median(evaluate(fn, a, ctx).value
                                 for a in run["hitl"][fn].alternatives)
            detail.append(f"seed {seed}: {mga_median:.4f} -> {hitl_median:.4f}")
            if hitl_median <= mga_median + 1e-12:
                improved += 1
        assert improved >= 1, f"{fn}: no seed improved ({detail})"
        report(f"median {fn} improved in {improved}/2 seeds ({'; '.join(detail)})")


@pytest.mark.slow
def test_05b_feedback_median_improvement_full_scale(case57_congested):
    """Full-scale variant: 100 alternatives, top 10, 4 seeds; the v2 round's
    median must not exceed the diversity median in at least 3 of 4 seeds for
    both loading metrics. Takes a few minutes; deselect with -m 'not slow'."""
    from gridmga.evaluation import rank_alternatives
    opts = SwitchingOptions(max_line_actions=3)
    model = ReconfigModel(case57_congested, opts)
    f_star, best = solve_least_cost(model, GAP)
    ctx = EvalContext.from_least_cost(case57_congested, best.topology)
    improved = {"u4": 0, "u5": 0}
    for seed in (0, 1, 2, 3):
        mga = generate_mga_set(model, f_star, EPSILON, 100, seed, gap=GAP)
        for fn in ("u4", "u5"):
            ranking = rank_alternatives(mga.alternatives, fn, ctx, top_k=10)
            hitl = run_hitl_round(model, mga, ranking, HitlParams("v2", round_count=100),
                                  seed, gap=GAP)
            mga_median = median(evaluate(fn, a, ctx).value for a in mga.alternatives)
            hitl_median = median(evaluate(fn, a, ctx).value for a in hitl.alternatives)
            if hitl_median <= mga_median + 1e-12:
                improved[fn] += 1
    for fn, wins in improved.items():
        assert wins >= 3, f"{fn}: median improved in only {wins}/4 seeds"
    report(f"full scale: median improved in {improved['u4']}/4 (u4) and "
           f"{improved['u5']}/4 (u5) seeds")


def test_06_metric_bounds_dominate(tri_runs, reduced_study):
    """Direct metric optima inside the near-optimal set bound every
    alternative's value in the right direction; the quadratic-load bound
    carries its chord-approximation gap as tolerance."""
    for label, payload in (("triangle", tri_runs), ("case57", reduced_study)):
        net = payload["net"]
        opts = payload["model"].options
        ctx, f_star = payload["ctx"], payload["f_star"]
        alternatives = []
        if label == "triangle":
            for alt_set in payload["rounds"].values():
                alternatives.extend(alt_set.alternatives)
        else:
            for run in payload["runs"].values():
                alternatives.extend(run["mga"].alternatives)
                for alt_set in run["hitl"].values():
                    alternatives.extend(alt_set.alternatives)
        for fn in ("u1", "u2", "u3", "u4", "u5"):
            bound = solve_eval_optimum(net, opts, fn, f_star, EPSILON, GAP, context=ctx)
            if fn == "u5":
                assert bound.pwl_gap <= 0.0025 * len(net.branches) + 1e-12
                if bound.value > 1e-6:
                    assert bound.pwl_gap <= 0.02 * bound.value + 1e-9, (
                        f"chord gap {bound.pwl_gap} above 2% of bound {bound.value}")
            for alt in alternatives:
                value = evaluate(fn, alt, ctx).value
                assert bound.respects(value, tol=1e-6), (
                    f"{label}/{fn}: value {value} violates bound {bound.bound} "
                    f"(pwl_gap {bound.pwl_gap})")
        report(f"{label}: metric optima bound all {len(alternatives)} alternatives "
               "for u1-u5")


def test_07_threshold_insensitivity():
    """Raising the dead-band from 0.15 to 0.75 only changes the encoding when
    some |delta| falls inside (0.15, 0.75]; a constructed delta of 0.5 flips."""
    rng = np.random.default_rng(23)
    checked = crossings = 0
    for _ in range(300):
        # switching bits in congested studies sit near all-0 or all-1 columns,
        # which is exactly where the dead-band stops mattering
        p = rng.choice([0.02, 0.5, 0.98], size=5)
        rows = (rng.random((10, 5)) < p).astype(int).tolist()
        ids = tuple(int(i) for i in rng.choice(10, 3, replace=False))
        z = np.array(rows, dtype=float)
        deltas = np.array([z.mean(axis=0) - z[k] for k in ids])
        crossing = np.any((np.abs(deltas) > 0.15) & (np.abs(deltas) <= 0.75))
        low = encode_feedback_baseline(bit_set(rows), RankingFeedback(ids), 0.15)
        high = encode_feedback_baseline(bit_set(rows), RankingFeedback(ids), 0.75)
        if crossing:
            crossings += 1
        else:
            assert all(a.values == b.values for a, b in zip(low, high))
            checked += 1
    assert checked > 0 and crossings > 0

    rows = [[1], [1], [1], [1], [1], [0], [0], [0], [0], [0]]
    low = encode_feedback_baseline(bit_set(rows), RankingFeedback((5,)), 0.15)
    high = encode_feedback_baseline(bit_set(rows), RankingFeedback((5,)), 0.75)
    assert low[0].values == (1.0,) and high[0].values == (0.0,)
    report(f"dead-band encodings identical on {checked} non-crossing draws; "
           "constructed delta=0.5 flips between 0.15 and 0.75")


def test_08_sequence_search_oracle_equivalence():
    """The subset-state sequencing search agrees with explicit permutation
    enumeration on 200 random instances with up to 4 actions, and the
    single-action case equals the final-state check."""
    from gridmga.dcflow import check_operating_state
    from gridmga.network import Branch, Bus, Generator
    rng = np.random.default_rng(321)
    singles = 0
    for trial in range(200):
        n_bus = int(rng.integers(4, 7))
        buses = [Bus(1, 1.0, True, 0.0)]
        load_total = 0.0
        for b in range(2, n_bus + 1):
            load = float(rng.integers(0, 40))
            load_total += load
            buses.append(Bus(b, 1.0, False, load))
        branches = []
        for b in range(2, n_bus + 1):
            other = int(rng.integers(1, b))
            branches.append(Branch(len(branches) + 1, other, b, float(rng.uniform(5, 15)),
                                   float(rng.uniform(30, 90))))
        for _ in range(int(rng.integers(2, 5))):
            u, v = rng.choice(n_bus, 2, replace=False) + 1
            branches.append(Branch(len(branches) + 1, int(u), int(v),
                                   float(rng.uniform(5, 15)), float(rng.uniform(30, 90))))
        net = make_net(f"seq{trial}", buses, branches, [Generator(1, 1, 0.0, 400.0, 10.0)])
        n_actions = int(rng.integers(1, 5))
        bits = [0] * len(branches)
        for idx in rng.choice(len(branches), n_actions, replace=False):
            bits[idx] = 1
        alt = alt_for(net, bits, dispatch={1: load_total})
        fast = eval_switching_sequence(alt, net).value
        assert fast == permutation_oracle(net, alt)
        if n_actions == 1:
            final = check_operating_state(net, alt.topology, alt.dispatch).feasible
            assert (fast == 1.0) == final
            singles += 1
    report(f"sequencing search matches permutation enumeration on 200 instances "
           f"({singles} single-action cases equal the final-state check)")


def test_09_case_parsing_counts(case57_net, case118_net):
    """Bundled cases parse with the published table sizes and the native
    format round-trips losslessly."""
    assert len(case57_net.buses) == 57 and len(case57_net.branches) == 80
    assert len(case118_net.buses) == 118 and len(case118_net.branches) == 186
    for net in (case57_net, case118_net):
        doc = serialize_network(net)
        again = parse_network_json(doc)
        assert again.to_dict() == net.to_dict()
        assert parse_matpower_case(doc).to_dict() == net.to_dict()
    report("case57 parses 57/80, case118 parses 118/186; native round-trip lossless")


def test_10_valuable_classification():
    """Round classification matches its definitions on synthetic fixtures."""
    from tests.test_experiment import synthetic_report
    from gridmga.experiment import classify_valuable

    flat = classify_valuable(synthetic_report([2.0, 2.0, 2.0], [2.0, 2.0, 2.0]))[0]["u4"]
    assert flat["mga_valuable"] is False

    better = classify_valuable(synthetic_report([2.0, 3.0], [1.0, 9.0]))[0]["u4"]
    assert better["mga_valuable"] is True
    assert better["variants"]["v2"]["more_valuable"] is True

    richer = classify_valuable(synthetic_report([2.0, 3.0, 4.0], [2.0, 2.0, 9.0]))[0]["u4"]
    assert richer["variants"]["v2"]["strictly_better"] is False
    assert richer["variants"]["v2"]["more_valuable"] is True
    report("valuable / more-valuable classification matches all three fixtures")
