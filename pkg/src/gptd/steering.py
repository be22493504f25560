"""Ensemble steering and the no-signaling bound on guessing.

A steering scenario is one ensemble written in N ways,
``ensemble = p_x w_x + (1 - p_x) c_x``.  A measurement on the ensemble cannot
depend on which decomposition was prepared, so the table
``P(x|y) = e_x . (p_y w_y + (1 - p_y) c_y)`` has constant rows and
``sum_x P(x|x) <= 1``.  That caps the guessing probability at
``1 / sum_x p_x``, and the decomposition read off an optimal dual point
reaches the cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gptd.discrimination import DiscriminationProblem, DiscriminationResult
from gptd.errors import DegenerateScenarioError, DimensionError, InvalidProblemError
from gptd.kkt import KktCertificate
from gptd.model import DEFAULT_TOL, GptModel, Measurement, is_state
from gptd.report import CheckReport, ValidationReport


@dataclass(frozen=True)
class SteeringScenario:
    ensemble: np.ndarray
    weights: np.ndarray  # p_x
    signals: np.ndarray  # w_x
    complements: np.ndarray  # c_x

    def __post_init__(self):
        e = np.array(self.ensemble, dtype=float)
        p = np.array(self.weights, dtype=float).ravel()
        W = np.array(self.signals, dtype=float)
        C = np.array(self.complements, dtype=float)
        if e.ndim != 1 or W.shape != (p.size, e.size) or C.shape != W.shape:
            raise DimensionError(
                f"inconsistent scenario shapes: ensemble {e.shape}, weights {p.shape}, "
                f"signals {W.shape}, complements {C.shape}"
            )
        for name, a in (("ensemble", e), ("weights", p), ("signals", W), ("complements", C)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def N(self) -> int:
        return self.weights.size

    def decompositions(self) -> np.ndarray:
        """Row y is ``p_y w_y + (1 - p_y) c_y``."""
        p = self.weights[:, None]
        return p * self.signals + (1.0 - p) * self.complements

    def implied_priors(self) -> np.ndarray:
        return self.weights / self.weights.sum()


def validate_scenario(scenario: SteeringScenario, model: GptModel | None = None, priors=None,
                      tol: float = DEFAULT_TOL) -> ValidationReport:
    report = ValidationReport()
    p = scenario.weights
    if p.min() < -tol or p.max() > 1 + tol:
        report.add("weights must lie in [0, 1]")
    if p.sum() <= tol:
        report.add("weights sum to zero")
        return report
    spread = np.abs(scenario.decompositions() - scenario.ensemble).max(axis=1)
    for y in np.flatnonzero(spread > tol):
        report.add(f"decomposition {y} does not reproduce the ensemble (deviation {spread[y]:.3e})")
    if priors is not None:
        dev = np.abs(scenario.implied_priors() - np.asarray(priors, dtype=float)).max()
        if dev > tol:
            report.add(f"weights do not reproduce the priors (deviation {dev:.3e})")
    if model is not None:
        for name, rows in (("signal", scenario.signals), ("complement", scenario.complements)):
            for x, v in enumerate(rows):
                # a complement carrying zero weight is irrelevant
                if name == "complement" and 1 - p[x] <= tol:
                    continue
                if not is_state(model, v, tol):
                    report.add(f"{name} {x} is not a state")
    return report


def build_scenario(problem: DiscriminationProblem, cert: KktCertificate,
                   tol: float = DEFAULT_TOL) -> SteeringScenario:
    """Normalise K into an ensemble and read its N decompositions off the certificate."""
    missing = [x for x, dx in enumerate(cert.d) if dx is None]
    if missing:
        raise DegenerateScenarioError(
            f"complementary weight r_x vanishes for x in {missing}; no steering scenario"
        )
    uK = float(problem.model.unit @ cert.K)
    if uK <= tol:
        raise DegenerateScenarioError("u.K is not positive")
    scenario = SteeringScenario(cert.K / uK, problem.priors / uK, problem.states, np.array(cert.d))
    report = validate_scenario(scenario, problem.model, problem.priors, tol)
    if not report.ok:
        raise InvalidProblemError("certificate does not yield a steering scenario", report.violations)
    return scenario


@dataclass(frozen=True)
class ConditionalTable:
    """``entries[x, y]``: probability of guess x when decomposition y was steered."""

    entries: np.ndarray
    measurement_complete: bool

    def __post_init__(self):
        P = np.array(self.entries, dtype=float)
        if P.ndim != 2:
            raise DimensionError("table must be two-dimensional")
        P.setflags(write=False)
        object.__setattr__(self, "entries", P)

    def diagonal_sum(self) -> float:
        k = min(self.entries.shape)
        return float(np.trace(self.entries[:k, :k]))


def conditional_table(scenario: SteeringScenario, measurement: Measurement,
                      tol: float = DEFAULT_TOL, pad: bool = False) -> ConditionalTable:
    """Guess statistics per steering choice, computed two ways.

    Each column is evaluated on its own decomposition and compared with the
    ensemble-only value; a disagreement beyond ``tol`` means the scenario is not
    one ensemble and raises ``InvalidProblemError``.  ``pad`` appends zero rows
    so an incomplete measurement with fewer outcomes than N gives a square table.
    """
    E = measurement.effects
    if E.shape[1] != scenario.ensemble.size:
        raise DimensionError("effects and states have different lengths")
    if E.shape[0] > scenario.N:
        raise DimensionError(f"{E.shape[0]} outcomes for {scenario.N} steering choices")
    per_decomposition = E @ scenario.decompositions().T
    from_ensemble = E @ scenario.ensemble
    mismatch = np.abs(per_decomposition - from_ensemble[:, None]).max(initial=0.0)
    if mismatch > tol:
        raise InvalidProblemError(f"decompositions disagree with the ensemble ({mismatch:.3e})")
    P = per_decomposition
    if pad and P.shape[0] < scenario.N:
        P = np.vstack([P, np.zeros((scenario.N - P.shape[0], scenario.N))])
    return ConditionalTable(P, measurement.complete)


def check_no_signaling(table: ConditionalTable, tol: float = DEFAULT_TOL) -> CheckReport:
    """Row constancy of P(x|y) in y, the diagonal bound, and column normalisation.

    When the diagonal sum exceeds 1 the report names a pair (x, x') with
    P(x|x) > P(x|x'), i.e. the outcome that would carry a signal.
    """
    P = table.entries
    rows, cols = P.shape
    constancy = float(np.ptp(P, axis=1).max(initial=0.0)) if cols else 0.0
    diag = table.diagonal_sum()
    col_sums = P.sum(axis=0)
    residuals = {
        "row_constancy": constancy,
        "diagonal_excess": max(0.0, diag - 1.0),
        "column_excess": float(max(0.0, col_sums.max(initial=0.0) - 1.0)),
        "entry_range": float(max(0.0, -P.min(initial=0.0), P.max(initial=0.0) - 1.0)),
    }
    if table.measurement_complete:
        residuals["column_normalization"] = float(np.abs(col_sums - 1.0).max(initial=0.0))

    witness = None
    for x in range(min(rows, cols)):
        y = int(np.argmin(P[x]))
        if P[x, x] > P[x, y] + tol:
            witness = [x, y]
            break
    details = {"diagonal_sum": diag, "column_sums": col_sums, "signaling_pair": witness}
    return CheckReport("no_signaling", residuals, tol, details)


def verify_bound_tightness(problem: DiscriminationProblem, result: DiscriminationResult,
                           scenario: SteeringScenario, tol: float = DEFAULT_TOL) -> CheckReport:
    """Compare p_guess with the steering bound ``1 / sum_x p_x`` (it should be attained)."""
    bound = 1.0 / float(scenario.weights.sum())
    p = result.p_guess
    residuals = {"bound_violation": max(0.0, p - bound), "tightness": abs(p - bound)}
    if scenario.N != problem.n_states:
        residuals["label_count"] = float(abs(scenario.N - problem.n_states))
    return CheckReport("bound", residuals, tol, {"bound": bound, "p_guess": p,
                                                "sum_weights": float(scenario.weights.sum())})


def audit_diagonal_decomposition(scenario: SteeringScenario, measurement: Measurement,
                                 table: ConditionalTable | None = None,
                                 tol: float = DEFAULT_TOL) -> CheckReport:
    """``p_x e_x . w_x <= P(x|x)`` for each x, and ``sum_x p_x e_x . w_x <= 1``.

    ``table`` defaults to the one computed from the scenario; pass another to
    audit externally supplied statistics.
    """
    if table is None:
        table = conditional_table(scenario, measurement, tol, pad=True)
    E = measurement.effects
    k = min(E.shape[0], scenario.N, *table.entries.shape)
    terms = scenario.weights[:k] * np.einsum("xd,xd->x", E[:k], scenario.signals[:k])
    diag = np.diag(table.entries)[:k]
    residuals = {
        "per_outcome": float(max(0.0, (terms - diag).max(initial=0.0))),
        "weighted_sum_excess": max(0.0, float(terms.sum()) - 1.0),
    }
    return CheckReport("diagonal_decomposition", residuals, tol,
                       {"terms": terms, "weighted_sum": float(terms.sum())})
