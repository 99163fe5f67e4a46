"""Minimal mixed-integer linear programming layer.

A LinearModel accumulates columns and rows; a backend turns one solve
call into a Solution. The boundary is deliberately small (variables,
constraints, objective, relative gap, solve, values, reported gap) so
any MILP engine can be plugged in. The default backend drives HiGHS
through scipy.
"""

from __future__ import annotations

import copy
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

log = logging.getLogger("gridmga.solver")

INF = float("inf")


class SolverError(RuntimeError):
    pass


class InfeasibleError(SolverError):
    """The model admits no feasible point; message names the likely cause."""


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time_limit"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    FAILED = "failed"


@dataclass
class Solution:
    status: SolveStatus
    objective: float = float("nan")
    values: np.ndarray | None = None
    gap: float = 0.0
    dual_bound: float = float("nan")
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.TIME_LIMIT) and self.values is not None

    def value(self, col: int) -> float:
        assert self.values is not None
        return float(self.values[col])


@dataclass
class _Row:
    coeffs: dict[int, float]
    lb: float
    ub: float
    name: str = ""


class LinearModel:
    """Column/row container with a minimize-sense linear objective."""

    def __init__(self) -> None:
        self.col_lb: list[float] = []
        self.col_ub: list[float] = []
        self.col_integer: list[bool] = []
        self.col_names: list[str] = []
        self.rows: list[_Row] = []
        self.objective: dict[int, float] = {}

    @property
    def num_variables(self) -> int:
        return len(self.col_lb)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def add_variable(self, lb: float = -INF, ub: float = INF, integer: bool = False,
                     name: str = "") -> int:
        if lb > ub:
            raise SolverError(f"variable {name or self.num_variables}: lb {lb} > ub {ub}")
        self.col_lb.append(lb)
        self.col_ub.append(ub)
        self.col_integer.append(integer)
        self.col_names.append(name)
        return self.num_variables - 1

    def add_binary(self, name: str = "") -> int:
        return self.add_variable(0.0, 1.0, integer=True, name=name)

    def add_constraint(self, coeffs: dict[int, float], lb: float = -INF, ub: float = INF,
                       name: str = "") -> int:
        self.rows.append(_Row(dict(coeffs), lb, ub, name))
        return self.num_rows - 1

    def set_row_bounds(self, row: int, lb: float, ub: float) -> None:
        self.rows[row].lb = lb
        self.rows[row].ub = ub

    def disable_row(self, row: int) -> None:
        self.set_row_bounds(row, -INF, INF)

    def set_variable_bounds(self, col: int, lb: float, ub: float) -> None:
        self.col_lb[col] = lb
        self.col_ub[col] = ub

    def fix_variable(self, col: int, value: float) -> None:
        self.set_variable_bounds(col, value, value)

    def set_objective(self, coeffs: dict[int, float]) -> None:
        self.objective = dict(coeffs)

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_variables)
        for col, coef in self.objective.items():
            c[col] = coef
        return c

    def clone(self) -> "LinearModel":
        return copy.deepcopy(self)


class SolverBackend(ABC):
    """One instance per concurrent solve; implementations hold no shared state."""

    @abstractmethod
    def solve(self, model: LinearModel, rel_gap: float = 1e-4,
              time_limit: float | None = None) -> Solution:
        ...


class HighsBackend(SolverBackend):
    """HiGHS via scipy.optimize.milp; deterministic single-thread solves."""

    def solve(self, model: LinearModel, rel_gap: float = 1e-4,
              time_limit: float | None = None) -> Solution:
        n = model.num_variables
        c = model.objective_vector()
        integrality = np.array(model.col_integer, dtype=np.uint8)
        bounds = Bounds(np.array(model.col_lb), np.array(model.col_ub))

        constraints = []
        if model.rows:
            data, row_idx, col_idx = [], [], []
            lbs, ubs = [], []
            for i, row in enumerate(model.rows):
                for col, coef in row.coeffs.items():
                    row_idx.append(i)
                    col_idx.append(col)
                    data.append(coef)
                lbs.append(row.lb)
                ubs.append(row.ub)
            matrix = sparse.csr_matrix((data, (row_idx, col_idx)), shape=(model.num_rows, n))
            constraints.append(LinearConstraint(matrix, np.array(lbs), np.array(ubs)))

        options: dict = {"mip_rel_gap": rel_gap}
        if time_limit is not None:
            options["time_limit"] = time_limit

        started = time.perf_counter()
        res = milp(c, constraints=constraints, integrality=integrality, bounds=bounds,
                   options=options)
        elapsed = time.perf_counter() - started

        status = {
            0: SolveStatus.OPTIMAL,
            1: SolveStatus.TIME_LIMIT,
            2: SolveStatus.INFEASIBLE,
            3: SolveStatus.UNBOUNDED,
        }.get(res.status, SolveStatus.FAILED)

        values = np.asarray(res.x, dtype=float) if res.x is not None else None
        objective = float(res.fun) if res.fun is not None else float("nan")
        gap = float(res.mip_gap) if getattr(res, "mip_gap", None) is not None else 0.0
        dual = (float(res.mip_dual_bound)
                if getattr(res, "mip_dual_bound", None) is not None else objective)
        log.debug("solve: %d vars / %d rows -> %s obj=%.6g gap=%.2e in %.3fs",
                  n, model.num_rows, status.value, objective, gap, elapsed)
        return Solution(status, objective, values, gap, dual, res.message)


#: Registered backends by name; plug alternatives in here.
BACKENDS: dict[str, type[SolverBackend]] = {"highs": HighsBackend}

DEFAULT_BACKEND = "highs"


def make_backend(name: str = DEFAULT_BACKEND) -> SolverBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown solver backend {name!r}; available: {sorted(BACKENDS)}")


def default_backend() -> SolverBackend:
    return make_backend(DEFAULT_BACKEND)
