"""
A thin layer over cvxpy for the linear matrix inequality programs of lureid.

Constraints are registered in named groups so that an infeasible program can be
narrowed down to the group that makes it infeasible.
"""

import dataclasses
import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import cvxpy as cp
import numpy as np
import scipy.sparse

from lureid.utils.config import ConfigMixin
from lureid.utils.exceptions import ConfigurationError
from lureid.utils.io import write_json

logger = logging.getLogger(__name__)

SDP_DUMP_SCHEMA_VERSION = 1

# Clarabel stores max_iter as a 32-bit unsigned integer
_CLARABEL_MAX_ITER = 2**32 - 1


@dataclass
class SolverSettings(ConfigMixin):
    """Settings shared by all semidefinite programs.

    Args:
        solver (str): name of an installed cvxpy conic solver supporting PSD cones
        tol_feas (float): primal/dual feasibility tolerance passed to the solver
        max_iter (int): iteration limit passed to the solver
        margin (float): strictness margin on every LMI, e.g. -F >= margin * I
        s_hat_min (float): lower bound on 1/s^2 when maximizing the region
        verbose (bool): print solver output
    """

    solver: str = "CLARABEL"
    tol_feas: float = 1e-9
    max_iter: int = 100_000
    margin: float = 1e-8
    s_hat_min: float = 1e-8
    verbose: bool = False

    def __post_init__(self) -> None:
        """Validate."""
        if self.tol_feas <= 0:
            raise ConfigurationError(f"tol_feas must be > 0, got {self.tol_feas}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.margin < 0:
            raise ConfigurationError(f"margin must be >= 0, got {self.margin}")
        if self.s_hat_min <= 0:
            raise ConfigurationError(f"s_hat_min must be > 0, got {self.s_hat_min}")
        self.solver = self.solver.upper()

    def solver_options(self) -> Dict:
        """Keyword arguments for cvxpy's Problem.solve."""
        if self.solver == "CLARABEL":
            return {"tol_feas": self.tol_feas, "max_iter": min(self.max_iter, _CLARABEL_MAX_ITER)}
        if self.solver == "SCS":
            return {"eps": self.tol_feas, "max_iters": self.max_iter}
        if self.solver == "CVXOPT":
            return {"feastol": self.tol_feas, "max_iters": self.max_iter}
        return {}


class SdpStatus(str, enum.Enum):
    """Outcome of a solve."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


_STATUS_MAP = {
    cp.OPTIMAL: SdpStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SdpStatus.OPTIMAL,
    cp.INFEASIBLE: SdpStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SdpStatus.INFEASIBLE,
}


@dataclass
class SdpSolution:
    """Solver output. `values` is set iff the status is optimal."""

    status: SdpStatus
    values: Optional[Dict[str, np.ndarray]] = None
    objective: Optional[float] = None
    diagnostics: Dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check that values accompany an optimal status only."""
        if (self.values is not None) != (self.status == SdpStatus.OPTIMAL):
            raise ValueError(f"values must be present iff status is optimal (status {self.status.value})")

    @property
    def optimal(self) -> bool:
        """True when the solver found a solution."""
        return self.status == SdpStatus.OPTIMAL


@dataclass
class VariableSpec:
    """Descriptor of a declared decision variable."""

    name: str
    kind: str
    shape: tuple


class SdpProblem:
    """A semidefinite program with named variables and named constraint groups.

    Example:

    ```python
    import numpy as np
    from lureid.sdp import SdpProblem

    problem = SdpProblem("lyapunov")
    P = problem.add_symmetric("P", 2)
    A = 0.5 * np.eye(2)
    problem.add_lmi("decrease", A.T @ P @ A - P, upper=0.0, margin=1e-6)
    problem.add_lmi("positivity", P, lower=1.0)
    solution = problem.solve()
    assert solution.optimal
    ```
    """

    def __init__(self, name: str):
        """Empty problem.

        Args:
            name (str): label used in logs and dumps
        """
        self.name = name
        self.variables: Dict[str, cp.Variable] = {}
        self.specs: List[VariableSpec] = []
        self.groups: Dict[str, List[cp.Constraint]] = {}
        self.objective: Optional[cp.Expression] = None

    def _declare(self, name, variable, kind, shape):
        if name in self.variables:
            raise ConfigurationError(f"variable {name!r} declared twice")
        self.variables[name] = variable
        self.specs.append(VariableSpec(name=name, kind=kind, shape=tuple(shape)))
        return variable

    def add_symmetric(self, name: str, n: int) -> cp.Variable:
        """Symmetric n x n matrix variable."""
        return self._declare(name, cp.Variable((n, n), symmetric=True, name=name), "symmetric", (n, n))

    def add_diagonal(self, name: str, m: int) -> cp.Expression:
        """Diagonal m x m matrix variable; the stored variable is its diagonal."""
        diagonal = self._declare(name, cp.Variable(m, name=name), "diagonal", (m,))
        return cp.diag(diagonal)

    def add_matrix(self, name: str, shape) -> cp.Variable:
        """General matrix variable."""
        return self._declare(name, cp.Variable(tuple(shape), name=name), "matrix", shape)

    def add_scalar(self, name: str) -> cp.Variable:
        """Scalar variable."""
        return self._declare(name, cp.Variable(name=name), "scalar", ())

    def add_constraints(self, group: str, constraints) -> None:
        """Append affine constraints to a named group."""
        self.groups.setdefault(group, []).extend(constraints)

    def add_lmi(self, group: str, expr, upper: Optional[float] = None, lower: Optional[float] = None, margin=0.0):
        """Constrain the symmetric part of a square affine expression.

        `upper=c` imposes expr <= (c - margin) I, `lower=c` imposes expr >= (c + margin) I.
        """
        if (upper is None) == (lower is None):
            raise ConfigurationError("pass exactly one of upper and lower")
        expr = cp.Constant(expr) if isinstance(expr, np.ndarray) else expr
        size = expr.shape[0]
        symmetric = 0.5 * (expr + expr.T)
        if upper is not None:
            constraint = symmetric << (upper - margin) * np.eye(size)
        else:
            constraint = symmetric >> (lower + margin) * np.eye(size)
        self.add_constraints(group, [constraint])

    def minimize(self, expr) -> None:
        """Set a linear objective. Without one the problem is a feasibility problem."""
        self.objective = expr

    def constraints(self, groups=None) -> List[cp.Constraint]:
        """All constraints, or those of the given groups, in registration order."""
        names = list(self.groups) if groups is None else groups
        return [c for name in names for c in self.groups[name]]

    def to_cvxpy(self, groups=None) -> cp.Problem:
        """The cvxpy problem."""
        objective = cp.Minimize(0 if self.objective is None else self.objective)
        return cp.Problem(objective, self.constraints(groups))

    def solve(self, settings: Optional[SolverSettings] = None, groups=None) -> SdpSolution:
        """Solve and wrap the outcome.

        Args:
            settings (SolverSettings): solver choice and tolerances
            groups (list): restrict to these constraint groups

        Returns:
            SdpSolution
        """
        settings = settings or SolverSettings()
        problem = self.to_cvxpy(groups)
        diagnostics = {"problem": self.name, "solver": settings.solver, "settings": settings.as_dict()}
        try:
            problem.solve(solver=settings.solver, verbose=settings.verbose, **settings.solver_options())
        except cp.error.SolverError as e:
            logger.warning(f"{self.name}: solver failure ({e})")
            diagnostics["error"] = str(e)
            return SdpSolution(status=SdpStatus.NUMERICAL_FAILURE, diagnostics=diagnostics)

        stats = problem.solver_stats
        diagnostics.update(
            {
                "cvxpy_status": problem.status,
                "iterations": getattr(stats, "num_iters", None),
                "solve_time": getattr(stats, "solve_time", None),
            }
        )
        status = _STATUS_MAP.get(problem.status, SdpStatus.NUMERICAL_FAILURE)
        if status == SdpStatus.OPTIMAL and any(v.value is None for v in self.variables.values()):
            status = SdpStatus.NUMERICAL_FAILURE
        logger.debug(f"{self.name}: status {problem.status} after {diagnostics['iterations']} iterations")
        if status != SdpStatus.OPTIMAL:
            return SdpSolution(status=status, diagnostics=diagnostics)

        values = {name: np.array(var.value, dtype=float) for name, var in self.variables.items()}
        objective = None if self.objective is None else float(problem.value)
        return SdpSolution(status=status, values=values, objective=objective, diagnostics=diagnostics)

    def locate_infeasibility(self, settings: Optional[SolverSettings] = None) -> Optional[str]:
        """Name of the first constraint group whose addition makes the program infeasible.

        Groups are added in registration order; None when every prefix is feasible
        (the failure was numerical, not structural).
        """
        names = list(self.groups)
        for k in range(1, len(names) + 1):
            solution = self.solve(settings, groups=names[:k])
            if solution.status == SdpStatus.INFEASIBLE:
                return names[k - 1]
        return None

    def to_dict(self, settings: Optional[SolverSettings] = None) -> Dict:
        """Self-describing representation of the conic problem.

        Holds the declared variables, the constraint groups with their sizes, and the
        solver-ready conic data (objective c, constraint matrix A, right-hand side b and
        cone dimensions) as produced by cvxpy for the configured solver, with sparse
        matrices stored as COO triplets.
        """
        settings = settings or SolverSettings()
        data, _, _ = self.to_cvxpy().get_problem_data(settings.solver)
        conic = {}
        for key, value in data.items():
            if scipy.sparse.issparse(value):
                coo = scipy.sparse.coo_matrix(value)
                conic[key] = {
                    "shape": list(coo.shape),
                    "row": coo.row.tolist(),
                    "col": coo.col.tolist(),
                    "val": coo.data.tolist(),
                }
            elif isinstance(value, np.ndarray):
                conic[key] = value.tolist()
            elif isinstance(value, (int, float)):
                conic[key] = value
            elif key == "dims":
                conic[key] = _cone_dims(value)
        return {
            "schema_version": SDP_DUMP_SCHEMA_VERSION,
            "name": self.name,
            "solver": settings.solver,
            "variables": [dataclasses.asdict(spec) for spec in self.specs],
            "constraint_groups": {name: [list(c.shape) for c in cons] for name, cons in self.groups.items()},
            "conic_data": conic,
        }

    def dump(self, path, settings: Optional[SolverSettings] = None) -> None:
        """Write to_dict() as JSON."""
        write_json(self.to_dict(settings), path)


def _cone_dims(dims) -> Dict:
    out = {}
    for attr in ("zero", "nonneg", "exp", "soc", "psd", "p3d"):
        if hasattr(dims, attr):
            value = getattr(dims, attr)
            out[attr] = [int(v) if not isinstance(v, float) else v for v in value] if isinstance(value, list) else value
    return out
