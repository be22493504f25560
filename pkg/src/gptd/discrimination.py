"""Minimum-error discrimination as a pair of linear programs.

Primal, over effects ``e_1..e_N``::

    maximize  sum_x q_x e_x . w_x
    s.t.      e_x . v >= 0  for every vertex v,   sum_x e_x = u

Dual, over ``K`` and conic weights ``lam[x, i] >= 0``::

    minimize  u . K
    s.t.      K - q_x w_x = sum_i lam[x, i] v_i   for every x

The dual's cone constraint is the polytopic form of ``e . (K - q_x w_x) >= 0``
for all effects ``e``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gptd import lp
from gptd.errors import DimensionError, DualityGapError, InvalidProblemError, SolverError
from gptd.model import DEFAULT_TOL, GptModel, Measurement, is_state, load_model, validate_model
from gptd.report import ValidationReport

GAP_TOL = 1e-8


@dataclass(frozen=True)
class DiscriminationProblem:
    model: GptModel
    states: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        W = np.array(self.states, dtype=float)
        if W.ndim != 2 or W.shape[0] == 0 or W.shape[1] != self.model.dim:
            raise DimensionError(
                f"states must be an (N, {self.model.dim}) array with N >= 1, got shape {W.shape}"
            )
        q = np.array(self.priors, dtype=float).ravel()
        if q.size != W.shape[0]:
            raise DimensionError(f"{q.size} priors for {W.shape[0]} states")
        W.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "states", W)
        object.__setattr__(self, "priors", q)

    @property
    def n_states(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.model.dim

    @classmethod
    def from_vertices(cls, model: GptModel, indices, priors=None) -> "DiscriminationProblem":
        """States picked from the model's vertices by 0-based index; uniform priors by default."""
        indices = list(indices)
        if priors is None:
            priors = np.full(len(indices), 1.0 / len(indices))
        return cls(model, model.vertices[indices], priors)

    def is_uniform(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.abs(self.priors - 1.0 / self.n_states).max() <= tol)


def validate_problem(problem: DiscriminationProblem, tol: float = DEFAULT_TOL) -> ValidationReport:
    report = validate_model(problem.model, tol)
    q = problem.priors
    if not np.all(np.isfinite(q)) or q.min() < -tol:
        report.add("priors must be finite and nonnegative")
    if abs(q.sum() - 1.0) > tol:
        report.add(f"priors sum to {q.sum()!r}, not 1")
    for x, w in enumerate(problem.states):
        if not np.all(np.isfinite(w)):
            report.add(f"state {x} has non-finite entries")
        elif not is_state(problem.model, w, tol):
            report.add(f"state {x} is not in the state space")
    return report


def build_primal(problem: DiscriminationProblem) -> lp.LinearProgram:
    N, d = problem.n_states, problem.dim
    V = problem.model.vertices
    m = V.shape[0]
    c = (problem.priors[:, None] * problem.states).ravel()
    G = np.zeros((N * m, N * d))
    for x in range(N):
        G[x * m:(x + 1) * m, x * d:(x + 1) * d] = V
    A = np.tile(np.eye(d), (1, N))
    return lp.LinearProgram(c, A, problem.model.unit, G, np.zeros(N * m))


def build_dual(problem: DiscriminationProblem) -> lp.LinearProgram:
    """Dual program, phrased as a maximisation of ``-u . K``."""
    N, d = problem.n_states, problem.dim
    V = problem.model.vertices
    m = V.shape[0]
    n = d + N * m
    c = np.zeros(n)
    c[:d] = -problem.model.unit
    A = np.zeros((N * d, n))
    b = np.zeros(N * d)
    for x in range(N):
        A[x * d:(x + 1) * d, :d] = np.eye(d)
        A[x * d:(x + 1) * d, d + x * m:d + (x + 1) * m] = -V.T
        b[x * d:(x + 1) * d] = problem.priors[x] * problem.states[x]
    G = np.zeros((N * m, n))
    G[:, d:] = np.eye(N * m)
    return lp.LinearProgram(c, A, b, G, np.zeros(N * m))


def success_probability(problem: DiscriminationProblem, measurement: Measurement) -> float:
    """Average probability of a correct guess, ``sum_x q_x e_x . w_x``."""
    E = measurement.effects
    if E.shape != problem.states.shape:
        raise DimensionError(f"measurement shape {E.shape} does not match states {problem.states.shape}")
    return float(problem.priors @ np.einsum("xd,xd->x", E, problem.states))


@dataclass(frozen=True)
class DiscriminationResult:
    p_guess: float
    measurement: Measurement
    K: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    solver_stats: dict = field(default_factory=dict)


def solve_discrimination(problem: DiscriminationProblem, tol: float = DEFAULT_TOL,
                         gap_tol: float = GAP_TOL) -> DiscriminationResult:
    """Solve primal and dual, insist on strong duality, and package both optima."""
    report = validate_problem(problem, tol)
    if not report.ok:
        raise InvalidProblemError("invalid discrimination problem", report.violations)

    primal = lp.solve(build_primal(problem), tol)
    dual = lp.solve(build_dual(problem), tol)
    for label, sol in (("primal", primal), ("dual", dual)):
        if not sol.optimal:
            raise SolverError(f"{label} program is {sol.status}; a valid problem cannot be")
    p_star = primal.objective_value
    d_star = -dual.objective_value
    if abs(p_star - d_star) > gap_tol:
        raise DualityGapError(p_star, d_star, gap_tol)

    N, d = problem.n_states, problem.dim
    effects = primal.primal_point.reshape(N, d)
    K = np.array(dual.primal_point[:d])
    K.setflags(write=False)
    stats = {
        "primal": {"iterations": primal.iterations, "pivots": primal.pivots},
        "dual": {"iterations": dual.iterations, "pivots": dual.pivots},
    }
    return DiscriminationResult(d_star, Measurement(effects, True), K, p_star, d_star,
                                abs(p_star - d_star), stats)


# --------------------------------------------------------------------------
# problem files


def problem_from_dict(data: dict, base_dir=None) -> DiscriminationProblem:
    """Build a problem from its JSON form.

    ``model`` is either an inline model object or a path (relative paths are
    resolved against ``base_dir``).  ``states`` is a list of coordinate lists or
    ``{"vertex_indices": [...]}`` with 0-based vertex indices.
    """
    source = data["model"]
    if isinstance(source, str):
        path = Path(source)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        model = load_model(path)
    else:
        model = GptModel.from_dict(source)
    states = data["states"]
    if isinstance(states, dict):
        indices = [int(i) for i in states["vertex_indices"]]
        if any(not 0 <= i < model.n_vertices for i in indices):
            raise InvalidProblemError(f"vertex index out of range 0..{model.n_vertices - 1}")
        states = model.vertices[indices]
    return DiscriminationProblem(model, states, data["priors"])


def problem_to_dict(problem: DiscriminationProblem) -> dict:
    return {
        "model": problem.model.to_dict(),
        "states": problem.states.tolist(),
        "priors": problem.priors.tolist(),
    }


def load_problem(path) -> DiscriminationProblem:
    path = Path(path)
    return problem_from_dict(json.loads(path.read_text()), base_dir=path.parent)
