"""Independent reference implementations used to check the optimizer.

These deliberately take a different computational route: explicit
enumeration over switching states plus a dispatch LP (scipy linprog on a
dense formulation) instead of the big-M MILP.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.optimize import linprog

THETA_BOUND = 0.6


def lp_dispatch(net, open_branch_ids, injection_tol=1e-6):
    """Min-cost dispatch for a fixed set of opened lines.

    Returns (cost, flows by branch id) or (None, None) when infeasible or
    when the cost-optimal dispatch leaves net injection on a bus that is
    disconnected from the slack bus (the same rejection the optimizer
    applies post-solve).
    """
    open_ids = set(open_branch_ids)
    closed = [br for br in net.branches if br.id not in open_ids]
    buses = list(net.buses)
    bus_pos = {b.id: i for i, b in enumerate(buses)}
    gens = list(net.generators)
    slack = net.slack_bus.id

    theta_ids = [b.id for b in buses if b.id != slack]
    theta_pos = {bid: len(gens) + i for i, bid in enumerate(theta_ids)}
    n_var = len(gens) + len(theta_ids)

    def theta_coeff(row, bus_id, coef):
        if bus_id != slack:
            row[theta_pos[bus_id]] += coef

    a_eq = np.zeros((len(buses), n_var))
    b_eq = np.zeros(len(buses))
    for i, bus in enumerate(buses):
        b_eq[i] = bus.load_mw
    for j, g in enumerate(gens):
        a_eq[bus_pos[g.bus], j] += 1.0
    for br in closed:
        b_mw = net.base_mva * br.susceptance
        # flow = b_mw * (theta_f - theta_t); leaves the from bus, enters the to bus
        theta_coeff(a_eq[bus_pos[br.from_bus]], br.from_bus, -b_mw)
        theta_coeff(a_eq[bus_pos[br.from_bus]], br.to_bus, b_mw)
        theta_coeff(a_eq[bus_pos[br.to_bus]], br.from_bus, b_mw)
        theta_coeff(a_eq[bus_pos[br.to_bus]], br.to_bus, -b_mw)

    a_ub = np.zeros((2 * len(closed), n_var))
    b_ub = np.zeros(2 * len(closed))
    for k, br in enumerate(closed):
        b_mw = net.base_mva * br.susceptance
        theta_coeff(a_ub[2 * k], br.from_bus, b_mw)
        theta_coeff(a_ub[2 * k], br.to_bus, -b_mw)
        b_ub[2 * k] = br.limit_mw
        theta_coeff(a_ub[2 * k + 1], br.from_bus, -b_mw)
        theta_coeff(a_ub[2 * k + 1], br.to_bus, b_mw)
        b_ub[2 * k + 1] = br.limit_mw

    c = np.array([g.cost_per_mwh for g in gens] + [0.0] * len(theta_ids))
    bounds = ([(g.p_min, g.p_max) for g in gens]
              + [(-THETA_BOUND, THETA_BOUND)] * len(theta_ids))
    res = linprog(c, A_ub=a_ub if len(closed) else None, b_ub=b_ub if len(closed) else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        return None, None

    theta = {slack: 0.0}
    for bid in theta_ids:
        theta[bid] = res.x[theta_pos[bid]]
    flows = {br.id: net.base_mva * br.susceptance * (theta[br.from_bus] - theta[br.to_bus])
             for br in closed}

    # reject dispatches that island net injection away from the slack bus
    adjacency = {b.id: set() for b in buses}
    for br in closed:
        adjacency[br.from_bus].add(br.to_bus)
        adjacency[br.to_bus].add(br.from_bus)
    reach = {slack}
    stack = [slack]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in reach:
                reach.add(nxt)
                stack.append(nxt)
    gen_out = {b.id: 0.0 for b in buses}
    for j, g in enumerate(gens):
        gen_out[g.bus] += res.x[j]
    for bus in buses:
        if bus.id not in reach and abs(gen_out[bus.id] - bus.load_mw) > injection_tol:
            return None, None
    return float(res.fun), flows


def enumerate_topologies(net, max_actions):
    """All open-line subsets within the action budget (line switching only)."""
    switchable = [br.id for br in net.switchable_branches]
    for k in range(max_actions + 1):
        for combo in combinations(switchable, k):
            yield frozenset(combo)


def brute_force_least_cost(net, max_actions):
    """(cost, open set) minimizing dispatch cost over all topologies."""
    best_cost, best_open = None, None
    for open_ids in enumerate_topologies(net, max_actions):
        cost, _ = lp_dispatch(net, open_ids)
        if cost is not None and (best_cost is None or cost < best_cost - 1e-9):
            best_cost, best_open = cost, open_ids
    return best_cost, best_open


def brute_force_alternative(net, max_actions, weights, f_star, epsilon):
    """(objective, open set) minimizing the weighted open-line sum with the
    cost-buffer term, over topologies whose best dispatch fits the budget."""
    switchable = [br.id for br in net.switchable_branches]
    pos = {bid: i for i, bid in enumerate(switchable)}
    budget = f_star * (1 + epsilon)
    best_obj, best_open = None, None
    for open_ids in enumerate_topologies(net, max_actions):
        cost, _ = lp_dispatch(net, open_ids)
        if cost is None or cost > budget + 1e-6:
            continue
        slack = budget - cost
        objective = sum(weights[pos[b]] for b in open_ids) - slack / (100.0 * f_star)
        if best_obj is None or objective < best_obj - 1e-12:
            best_obj, best_open = objective, open_ids
    return best_obj, best_open


def brute_force_quadratic_load(net, max_actions, f_star, epsilon):
    """Minimal summed squared loading over budget-feasible topologies, with
    the per-topology dispatch chosen by a fine cost sweep.

    For each topology the dispatch that minimizes the quadratic load is not
    the cost-optimal one, so this scans dispatch vertices by minimizing the
    quadratic load via quadratic programming on a grid of cost caps.
    """
    budget = f_star * (1 + epsilon)
    best = None
    for open_ids in enumerate_topologies(net, max_actions):
        cost, flows = lp_dispatch(net, open_ids)
        if cost is None or cost > budget + 1e-6:
            continue
        value = _min_quadratic_load(net, open_ids, budget)
        if value is not None and (best is None or value < best):
            best = value
    return best


def _min_quadratic_load(net, open_branch_ids, cost_budget):
    """Quadratic-load minimum for one topology under the cost budget, via
    SLSQP over (dispatch, angles)."""
    from scipy.optimize import minimize

    open_ids = set(open_branch_ids)
    closed = [br for br in net.branches if br.id not in open_ids]
    gens = list(net.generators)
    buses = list(net.buses)
    slack = net.slack_bus.id
    theta_ids = [b.id for b in buses if b.id != slack]
    theta_pos = {bid: len(gens) + i for i, bid in enumerate(theta_ids)}
    n = len(gens) + len(theta_ids)

    def theta_of(x, bid):
        return 0.0 if bid == slack else x[theta_pos[bid]]

    def flows_of(x):
        return np.array([net.base_mva * br.susceptance
                         * (theta_of(x, br.from_bus) - theta_of(x, br.to_bus))
                         for br in closed])

    def objective(x):
        f = flows_of(x)
        limits = np.array([br.limit_mw for br in closed])
        return float(np.sum((f / limits) ** 2))

    constraints = []
    for i, bus in enumerate(buses):
        def balance(x, bus=bus):
            total = -bus.load_mw
            for j, g in enumerate(gens):
                if g.bus == bus.id:
                    total += x[j]
            for br in closed:
                flow = net.base_mva * br.susceptance * (
                    theta_of(x, br.from_bus) - theta_of(x, br.to_bus))
                if br.from_bus == bus.id:
                    total -= flow
                if br.to_bus == bus.id:
                    total += flow
            return total
        constraints.append({"type": "eq", "fun": balance})
    costs = np.array([g.cost_per_mwh for g in gens])

    def cost_slack(x):
        return cost_budget - float(costs @ x[:len(gens)])
    constraints.append({"type": "ineq", "fun": cost_slack})
    for k, br in enumerate(closed):
        def cap_hi(x, br=br):
            return br.limit_mw - net.base_mva * br.susceptance * (
                theta_of(x, br.from_bus) - theta_of(x, br.to_bus))
        def cap_lo(x, br=br):
            return br.limit_mw + net.base_mva * br.susceptance * (
                theta_of(x, br.from_bus) - theta_of(x, br.to_bus))
        constraints.append({"type": "ineq", "fun": cap_hi})
        constraints.append({"type": "ineq", "fun": cap_lo})

    bounds = ([(g.p_min, g.p_max) for g in gens]
              + [(-THETA_BOUND, THETA_BOUND)] * len(theta_ids))
    x0 = np.array([min(g.p_max, sum(b.load_mw for b in buses) / len(gens)) for g in gens]
                  + [0.0] * len(theta_ids))
    res = minimize(objective, x0, bounds=bounds, constraints=constraints,
                   method="SLSQP", options={"maxiter": 400, "ftol": 1e-12})
    if not res.success:
        return None
    return float(res.fun)
