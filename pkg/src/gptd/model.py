"""Polytopic state spaces, effects and measurements.

Vectors are plain float arrays; effects act on states through the Euclidean
inner product of their coordinates.  The state set is the convex hull of the
model's vertices and an effect is valid when it takes values in [0, 1] on
every vertex.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gptd import lp
from gptd.errors import DimensionError, SolverError
from gptd.report import ValidationReport

DEFAULT_TOL = 1e-9


def as_vec(values, dim: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.array(values, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"{name} has length {v.size}, expected {dim}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class GptModel:
    vertices: np.ndarray
    unit: np.ndarray
    name: str = ""

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0 or V.shape[1] == 0:
            raise DimensionError(f"vertices must be a non-empty (m, d) array, got shape {V.shape}")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "unit", as_vec(self.unit, V.shape[1], "unit"))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "unit": self.unit.tolist(),
            "vertices": self.vertices.tolist(),
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GptModel":
        model = cls(data["vertices"], data["unit"], str(data.get("name", "")))
        if "dim" in data and int(data["dim"]) != model.dim:
            raise DimensionError(f"declared dim {data['dim']} but vertices have length {model.dim}")
        return model


def load_model(path) -> GptModel:
    return GptModel.from_dict(json.loads(Path(path).read_text()))


def save_model(model: GptModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class Measurement:
    """Effects indexed by outcome; ``complete`` when they sum to the unit effect."""

    effects: np.ndarray
    complete: bool = True

    def __post_init__(self):
        E = np.array(self.effects, dtype=float)
        if E.ndim != 2:
            raise DimensionError(f"effects must be an (N, d) array, got shape {E.shape}")
        E.setflags(write=False)
        object.__setattr__(self, "effects", E)

    def __len__(self) -> int:
        return self.effects.shape[0]

    @classmethod
    def from_effects(cls, model: GptModel, effects, tol: float = DEFAULT_TOL) -> "Measurement":
        E = np.array(effects, dtype=float).reshape(-1, model.dim)
        return cls(E, bool(np.abs(E.sum(axis=0) - model.unit).max() <= tol))


# --------------------------------------------------------------------------
# validation


def validate_model(model: GptModel, tol: float = DEFAULT_TOL) -> ValidationReport:
    report = ValidationReport()
    V = model.vertices
    if not np.all(np.isfinite(model.unit)):
        report.add("unit effect has non-finite entries")
    for i, v in enumerate(V):
        if not np.all(np.isfinite(v)):
            report.add(f"vertex {i} has non-finite entries")
            continue
        value = float(model.unit @ v)
        if abs(value - 1.0) > tol:
            report.add(f"vertex {i} not normalized (unit.v = {value!r})")
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            if np.abs(V[i] - V[j]).max() <= tol:
                report.add(f"vertices {i} and {j} coincide")
    return report


def is_effect(model: GptModel, effect, tol: float = DEFAULT_TOL) -> bool:
    values = model.vertices @ as_vec(effect, model.dim, "effect")
    return bool(values.min() >= -tol and values.max() <= 1.0 + tol)


def effect_violation(model: GptModel, effect) -> float:
    """How far ``effect`` leaves [0, 1] on the worst vertex."""
    values = model.vertices @ as_vec(effect, model.dim, "effect")
    return float(max(0.0, -values.min(), values.max() - 1.0))


def validate_measurement(model: GptModel, measurement: Measurement,
                         tol: float = DEFAULT_TOL) -> ValidationReport:
    report = ValidationReport()
    if measurement.effects.shape[1] != model.dim:
        report.add(f"effects have length {measurement.effects.shape[1]}, model dim is {model.dim}")
        return report
    for x, e in enumerate(measurement.effects):
        if not is_effect(model, e, tol):
            report.add(f"effect {x} is not valid (violation {effect_violation(model, e):.3e})")
    rest = model.unit - measurement.effects.sum(axis=0)
    if measurement.complete:
        if np.abs(rest).max() > tol:
            report.add(f"effects do not sum to the unit effect (max deviation {np.abs(rest).max():.3e})")
    elif not is_effect(model, rest, tol):
        report.add("unit minus the sum of effects is not a valid effect")
    return report


def evaluate(effect, state) -> float:
    e = np.asarray(effect, dtype=float)
    w = np.asarray(state, dtype=float)
    if e.shape != w.shape or e.ndim != 1:
        raise DimensionError(f"effect shape {e.shape} does not match state shape {w.shape}")
    return float(e @ w)


# --------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class Membership:
    member: bool
    weights: np.ndarray | None
    residual: float

    def __bool__(self) -> bool:
        return self.member


def _l1_fit(rows: np.ndarray, target: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    """min ||rows @ lam - target||_1 over lam >= 0, returned as (lam, residual)."""
    k, m = rows.shape
    # variables: lam (m), t_plus (k), t_minus (k); all nonnegative
    n = m + 2 * k
    A = np.hstack([rows, np.eye(k), -np.eye(k)])
    c = np.concatenate([np.zeros(m), -np.ones(2 * k)])
    sol = lp.solve(lp.LinearProgram(c, A, target, np.eye(n), np.zeros(n)), tol)
    if not sol.optimal:
        raise SolverError(f"membership program returned {sol.status}")
    return np.asarray(sol.primal_point[:m]), max(0.0, -sol.objective_value)


def _canonical_weights(rows, target, lam, tol):
    # the minimum-norm solution is unique and respects symmetry; use it when it is admissible
    mn = np.linalg.lstsq(rows, target, rcond=None)[0]
    if mn.min() >= -tol and np.abs(rows @ mn - target).max() <= tol:
        return np.clip(mn, 0.0, None)
    return lam


def _membership(rows, target, tol) -> Membership:
    lam, residual = _l1_fit(rows, target, tol)
    if residual > tol:
        return Membership(False, None, residual)
    w = _canonical_weights(rows, target, lam, tol)
    w.setflags(write=False)
    return Membership(True, w, residual)


def is_state(model: GptModel, v, tol: float = DEFAULT_TOL) -> Membership:
    """Is ``v`` a convex combination of the vertices?  Weights are returned when it is."""
    v = as_vec(v, model.dim, "state")
    rows = np.vstack([model.vertices.T, np.ones(model.n_vertices)])
    return _membership(rows, np.append(v, 1.0), tol)


def in_state_cone(model: GptModel, v, tol: float = DEFAULT_TOL) -> Membership:
    """Is ``v`` a nonnegative combination of the vertices?"""
    v = as_vec(v, model.dim, "vector")
    return _membership(model.vertices.T, v, tol)


# --------------------------------------------------------------------------
# regular polygons


def polygon_model(n: int) -> GptModel:
    """Regular n-gon with vertex x at angle 2 pi x / n, radius 1/sqrt(cos(pi/n)).

    Vertex ``x`` (1-based, as usually written) is stored at index ``x - 1``.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"polygon needs n >= 3, got {n}")
    x = np.arange(1, n + 1)
    radius = 1.0 / math.sqrt(math.cos(math.pi / n))
    V = np.stack([radius * np.cos(2 * np.pi * x / n),
                  radius * np.sin(2 * np.pi * x / n),
                  np.ones(n)], axis=1)
    return GptModel(V, [0.0, 0.0, 1.0], f"polygon-{n}")


def polygon_effect(n: int, x: int) -> np.ndarray:
    """Extremal effect number ``x`` (1-based) of the n-gon.

    Even n: half of the facet functional at angle (2x - 1) pi / n, which is 1 on
    vertices x - 1, x and 0 on the opposite pair.  Odd n: the functional pointing
    at vertex x, which is 1 there and 0 on the opposite edge.  The even-n form
    applied to odd n would go negative on the vertex opposite the facet.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"polygon needs n >= 3, got {n}")
    if not 1 <= x <= n:
        raise IndexError(f"effect index {x} outside 1..{n}")
    radius = 1.0 / math.sqrt(math.cos(math.pi / n))
    if n % 2 == 0:
        angle = (2 * x - 1) * math.pi / n
        e = 0.5 * np.array([radius * math.cos(angle), radius * math.sin(angle), 1.0])
    else:
        angle = 2 * math.pi * x / n
        e = np.array([radius * math.cos(angle), radius * math.sin(angle), 1.0]) / (1.0 + radius**2)
    e.setflags(write=False)
    return e


def polygon_measurement(n: int) -> Measurement:
    """Complete n-outcome measurement made of all extremal effects, rescaled to sum to u."""
    F = np.array([polygon_effect(n, x) for x in range(1, n + 1)])
    return Measurement(F / F.sum(axis=0)[2], True)
