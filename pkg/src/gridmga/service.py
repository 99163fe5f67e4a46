"""Stateful HTTP service for interactive feedback sessions.

One session = one network + one rolling history of generation rounds.
Solves run on a bounded background pool; clients poll session status
(idle -> solving -> awaiting_ranking -> solving -> ...). Sessions persist
as one JSON document each (atomic replace on write) and reload on
restart; a solve interrupted by a restart marks the session error state,
and the session can start a fresh round afterwards.

Endpoints:
    GET  /networks
    POST /sessions                                {case | network, config}
    GET  /sessions
    GET  /sessions/{id}
    POST /sessions/{id}/rounds                    {count, seed}
    GET  /sessions/{id}/rounds/{k}/alternatives
    POST /sessions/{id}/rounds/{k}/ranking        {ranked_ids, params}
    GET  /sessions/{id}/rounds/{k}/simulated-ranking?fn=u4&top_k=10
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException

from . import cases
from .evaluation import (EVAL_IDS, EvalContext, RankingFeedback, evaluate,
                         rank_alternatives)
from .hitl import HitlParams, run_hitl_round
from .mga import AlternativeSet, generate_mga_set
from .milp import Alternative, ReconfigModel, SwitchingOptions, solve_least_cost
from .network import Network, Topology, hamming_distance, scale_line_capacities, \
    validate_network

log = logging.getLogger("gridmga.service")

DATA_DIR_ENV = "GRIDMGA_DATA_DIR"

DEFAULT_CONFIG = {
    "epsilon": 0.05,
    "gap": 0.001,
    "congestion_factor": 1.0,
    "allow_line_switching": True,
    "allow_busbar_splitting": False,
    "max_line_actions": 3,
    "max_busbar_actions": 0,
    "overload_threshold": 0.9,
}


@dataclass
class SessionState:
    id: str
    case_name: str
    network_doc: dict
    config: dict
    status: str = "idle"  # idle | solving | awaiting_ranking | error
    error: str | None = None
    f_star: float | None = None
    least_cost: dict | None = None
    rounds: list = field(default_factory=list)
    created_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "SessionState":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


class SessionStore:
    """One JSON document per session; atomic replace on write."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def load_all(self) -> dict[str, SessionState]:
        sessions = {}
        for path in sorted(self.directory.glob("session-*.json")):
            try:
                state = SessionState.from_dict(json.loads(path.read_text()))
            except (json.JSONDecodeError, KeyError) as exc:
                log.warning("skipping unreadable session file %s: %s", path, exc)
                continue
            if state.status == "solving":
                state.status = "error"
                state.error = "solve interrupted by service restart"
            sessions[state.id] = state
        return sessions

    def save(self, state: SessionState) -> None:
        path = self.directory / f"session-{state.id}.json"
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".session-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(state.to_dict(), fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class _Engine:
    """Runtime (non-persisted) solver state for one session."""

    def __init__(self, state: SessionState):
        net = Network.from_dict(state.network_doc)
        factor = float(state.config.get("congestion_factor", 1.0))
        if factor != 1.0:
            net = scale_line_capacities(net, factor)
        self.network = net
        cfg = state.config
        self.options = SwitchingOptions(
            allow_line_switching=bool(cfg.get("allow_line_switching", True)),
            allow_busbar_splitting=bool(cfg.get("allow_busbar_splitting", False)),
            max_line_actions=int(cfg.get("max_line_actions", 3)),
            max_busbar_actions=int(cfg.get("max_busbar_actions", 0)),
        )
        self.epsilon = float(cfg.get("epsilon", 0.05))
        self.gap = float(cfg.get("gap", 0.001))
        self.threshold = float(cfg.get("overload_threshold", 0.9))
        self._model: ReconfigModel | None = None
        self._ctx: EvalContext | None = None

    @property
    def model(self) -> ReconfigModel:
        if self._model is None:
            self._model = ReconfigModel(self.network, self.options)
        return self._model

    def context(self, state: SessionState) -> EvalContext:
        if self._ctx is None:
            if state.least_cost is None:
                raise RuntimeError("least-cost solve has not run yet")
            topo = Topology.from_dict(state.least_cost["topology"])
            self._ctx = EvalContext.from_least_cost(self.network, topo, self.threshold)
        return self._ctx

    def alternative_set(self, state: SessionState, k: int) -> AlternativeSet:
        rnd = state.rounds[k]
        return AlternativeSet(
            alternatives=[Alternative.from_dict(a) for a in rnd["alternatives"]],
            f_star=state.f_star, epsilon=self.epsilon, network=self.network,
            seed=rnd["seed"], label=rnd["label"], options=self.options, gap=self.gap,
            least_cost_topology=Topology.from_dict(state.least_cost["topology"]),
        )


def _alternative_payload(alt: Alternative, engine: _Engine, ctx: EvalContext,
                         least_cost_topology: Topology, f_star: float) -> dict:
    net = engine.network
    open_ids = {br.id for bit, br in zip(alt.topology.line_open, net.switchable_branches) if bit}
    loadings = {str(bid): (0.0 if bid in open_ids
                           else abs(flow) / net.branch_by_id[bid].limit_mw)
                for bid, flow in alt.flows.items()}
    eval_values = {fn: evaluate(fn, alt, ctx).value for fn in EVAL_IDS}
    return {
        "index": alt.index,
        "topology": alt.topology.to_dict(),
        "actions": [list(a) for a in net.topology_actions(alt.topology)],
        "cost": alt.cost,
        "slack": alt.slack,
        "cost_delta_pct": 100.0 * (alt.cost - f_star) / f_star,
        "objective_value": alt.objective_value,
        "unique": alt.unique,
        "hamming_to_least_cost": hamming_distance(alt.topology, least_cost_topology),
        "loadings": loadings,
        "eval": eval_values,
        "round": alt.round,
    }


def create_app(data_dir: str | Path | None = None, workers: int = 2) -> FastAPI:
    app = FastAPI(title="gridmga sessions", version="0.1.0")
    store = SessionStore(data_dir or os.environ.get(DATA_DIR_ENV, "./gridmga-data"))
    sessions: dict[str, SessionState] = store.load_all()
    engines: dict[str, _Engine] = {}
    locks: dict[str, threading.Lock] = {sid: threading.Lock() for sid in sessions}
    registry_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=workers)
    app.state.store = store
    app.state.pool = pool
    app.state.sessions = sessions

    def get_session(session_id: str) -> SessionState:
        state = sessions.get(session_id)
        if state is None:
            raise HTTPException(404, f"unknown session {session_id}")
        return state

    def get_engine(state: SessionState) -> _Engine:
        with registry_lock:
            if state.id not in engines:
                engines[state.id] = _Engine(state)
            return engines[state.id]

    @app.get("/networks")
    def networks():
        out = []
        for name in cases.list_cases():
            net = cases.load_case(name)
            out.append({
                "name": name,
                "buses": len(net.buses),
                "branches": len(net.branches),
                "generators": len(net.generators),
                "splittable_substations": len(net.splittable_substations),
            })
        return out

    @app.get("/networks/{name}")
    def network_detail(name: str):
        if name not in cases.list_cases():
            raise HTTPException(404, f"unknown bundled case {name}")
        net = cases.load_case(name)
        return {"network": net.to_dict(), "layout": cases.layout(name)}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        config = {**DEFAULT_CONFIG, **(body.get("config") or {})}
        if "network" in body and body["network"]:
            try:
                net = Network.from_dict(body["network"])
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(422, {"issues": [f"network document: {exc}"]})
            case_name = net.name
        elif body.get("case"):
            case_name = str(body["case"])
            if case_name not in cases.list_cases():
                raise HTTPException(422, {"issues": [f"unknown bundled case {case_name}"]})
            net = cases.load_case(case_name)
        else:
            raise HTTPException(422, {"issues": ["provide 'case' or 'network'"]})
        report = validate_network(net)
        if not report.ok:
            raise HTTPException(422, {"issues": list(report)})
        try:
            SwitchingOptions(
                allow_line_switching=bool(config["allow_line_switching"]),
                allow_busbar_splitting=bool(config["allow_busbar_splitting"]),
                max_line_actions=int(config["max_line_actions"]),
                max_busbar_actions=int(config["max_busbar_actions"]),
            )
        except (ValueError, KeyError) as exc:
            raise HTTPException(422, {"issues": [f"config: {exc}"]})
        state = SessionState(id=uuid.uuid4().hex[:12], case_name=case_name,
                             network_doc=net.to_dict(), config=config)
        with registry_lock:
            sessions[state.id] = state
            locks[state.id] = threading.Lock()
        store.save(state)
        return {"id": state.id, "status": state.status}

    def session_summary(state: SessionState) -> dict:
        return {
            "id": state.id,
            "case": state.case_name,
            "status": state.status,
            "error": state.error,
            "f_star": state.f_star,
            "config": state.config,
            "least_cost_actions": (state.least_cost or {}).get("actions"),
            "rounds": [{
                "index": i,
                "label": r["label"],
                "count": len(r["alternatives"]),
                "seed": r["seed"],
                "has_ranking": r.get("ranking") is not None,
                "params": r.get("params"),
            } for i, r in enumerate(state.rounds)],
        }

    @app.get("/sessions")
    def list_sessions():
        return [session_summary(s) for s in sessions.values()]

    @app.get("/sessions/{session_id}")
    def show_session(session_id: str):
        return session_summary(get_session(session_id))

    def _run_generate(state: SessionState, count: int, seed: int):
        engine = get_engine(state)
        try:
            if state.f_star is None:
                f_star, best = solve_least_cost(engine.model, engine.gap)
                state.f_star = f_star
                best_doc = best.to_dict()
                best_doc["actions"] = [list(a) for a in
                                       engine.network.topology_actions(best.topology)]
                state.least_cost = best_doc
            alt_set = generate_mga_set(engine.model, state.f_star, engine.epsilon,
                                       count, seed, gap=engine.gap)
            state.rounds.append({
                "label": "mga", "seed": seed, "ranking": None, "params": None,
                "alternatives": [a.to_dict() for a in alt_set.alternatives],
            })
            state.status = "awaiting_ranking"
            state.error = None
        except Exception as exc:
            log.exception("generate round failed for session %s", state.id)
            state.status = "error"
            state.error = f"{type(exc).__name__}: {exc}"
        store.save(state)

    @app.post("/sessions/{session_id}/rounds", status_code=202)
    def generate_round(session_id: str, body: dict):
        state = get_session(session_id)
        count = int(body.get("count", 20))
        seed = int(body.get("seed", 0))
        if count < 1:
            raise HTTPException(422, {"issues": ["count must be >= 1"]})
        if seed < 0:
            raise HTTPException(422, {"issues": ["seed must be >= 0"]})
        with locks[session_id]:
            if state.status == "solving":
                raise HTTPException(409, "a solve is already in flight for this session")
            state.status = "solving"
            store.save(state)
        pool.submit(_run_generate, state, count, seed)
        return {"round": len(state.rounds), "status": state.status}

    def _run_ranking(state: SessionState, k: int, ranking: RankingFeedback,
                     params: HitlParams, seed: int):
        engine = get_engine(state)
        try:
            alt_set = engine.alternative_set(state, k)
            out = run_hitl_round(engine.model, alt_set, ranking, params, seed,
                                 gap=engine.gap)
            state.rounds[k]["ranking"] = ranking.to_dict()
            state.rounds[k]["params"] = params.to_dict()
            state.rounds.append({
                "label": out.label, "seed": seed, "ranking": None, "params": None,
                "alternatives": [a.to_dict() for a in out.alternatives],
            })
            state.status = "awaiting_ranking"
            state.error = None
        except Exception as exc:
            log.exception("ranking round failed for session %s", state.id)
            state.status = "error"
            state.error = f"{type(exc).__name__}: {exc}"
        store.save(state)

    @app.post("/sessions/{session_id}/rounds/{k}/ranking", status_code=202)
    def submit_ranking(session_id: str, k: int, body: dict):
        state = get_session(session_id)
        if not state.rounds or k != len(state.rounds) - 1:
            raise HTTPException(422, {"issues": [
                f"ranking must reference the latest round ({len(state.rounds) - 1 if state.rounds else 'none'})"]})
        ranked = body.get("ranked_ids") or []
        if not ranked:
            raise HTTPException(422, {"issues": ["ranking must contain at least one id"]})
        known = {a["index"] for a in state.rounds[k]["alternatives"]}
        unknown = [i for i in ranked if i not in known]
        if unknown:
            raise HTTPException(422, {"issues": [f"unknown alternative ids {unknown}"]})
        try:
            ranking = RankingFeedback(tuple(int(i) for i in ranked),
                                      source=str(body.get("source", "operator")))
            raw = body.get("params") or {}
            params = HitlParams(
                variant=str(raw.get("variant", "v2")),
                tau=float(raw.get("tau", 0.15)),
                a=float(raw.get("a", 1.0)),
                b=float(raw.get("b", 1.0)),
                round_count=int(raw.get("count", len(state.rounds[k]["alternatives"]))),
            )
        except ValueError as exc:
            raise HTTPException(422, {"issues": [str(exc)]})
        seed = int(body.get("seed", state.rounds[k]["seed"] + 1))
        with locks[session_id]:
            if state.status == "solving":
                raise HTTPException(409, "a solve is already in flight for this session")
            if state.status not in ("awaiting_ranking",):
                raise HTTPException(409, f"session is {state.status}, not awaiting a ranking")
            state.status = "solving"
            store.save(state)
        pool.submit(_run_ranking, state, k, ranking, params, seed)
        return {"round": len(state.rounds), "status": state.status}

    @app.get("/sessions/{session_id}/rounds/{k}/alternatives")
    def round_alternatives(session_id: str, k: int):
        state = get_session(session_id)
        if k < 0 or k >= len(state.rounds):
            raise HTTPException(404, f"round {k} does not exist")
        engine = get_engine(state)
        ctx = engine.context(state)
        least = Topology.from_dict(state.least_cost["topology"])
        rnd = state.rounds[k]
        alternatives = [Alternative.from_dict(a) for a in rnd["alternatives"]]
        return {
            "round": k,
            "label": rnd["label"],
            "f_star": state.f_star,
            "epsilon": engine.epsilon,
            "alternatives": [_alternative_payload(a, engine, ctx, least, state.f_star)
                             for a in alternatives],
        }

    @app.get("/sessions/{session_id}/rounds/{k}/simulated-ranking")
    def simulated_ranking(session_id: str, k: int, fn: str = "u4", top_k: int = 10):
        state = get_session(session_id)
        if k < 0 or k >= len(state.rounds):
            raise HTTPException(404, f"round {k} does not exist")
        if fn not in EVAL_IDS:
            raise HTTPException(422, {"issues": [f"unknown evaluation function {fn}"]})
        engine = get_engine(state)
        ctx = engine.context(state)
        alternatives = [Alternative.from_dict(a) for a in state.rounds[k]["alternatives"]]
        ranking = rank_alternatives(alternatives, fn, ctx, top_k)
        return ranking.to_dict()

    return app
