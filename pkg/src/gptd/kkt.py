"""Optimality certificates and the geometric picture behind them.

An optimal dual point ``K`` splits, for every label x, as
``K = q_x w_x + r_x d_x`` with ``r_x = u . K - q_x`` and a normalised
complementary state ``d_x``.  Optimal effects annihilate the complementary
part: ``e_x . (K - q_x w_x) = 0``.  Because ``K`` is shared, the polytope with
vertices ``q_x w_x`` and the one with vertices ``r_x d_x`` have equal and
opposite edges.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from gptd import lp
from gptd.discrimination import DiscriminationProblem, DiscriminationResult, success_probability
from gptd.errors import CertificateError, DimensionError
from gptd.model import DEFAULT_TOL, Measurement, in_state_cone, is_state
from gptd.report import CheckReport, jsonable


@dataclass(frozen=True)
class KktCertificate:
    K: np.ndarray
    r: np.ndarray
    d: tuple  # complementary states; None where r_x is negligible
    residuals: dict = field(default_factory=dict)

    def defined(self) -> list[int]:
        return [x for x, dx in enumerate(self.d) if dx is not None]

    def to_dict(self) -> dict:
        return jsonable({
            "K": self.K,
            "r": self.r,
            "d": [None if dx is None else dx for dx in self.d],
            "residuals": self.residuals,
        })


def decompose(problem: DiscriminationProblem, K, tol: float = DEFAULT_TOL) -> KktCertificate:
    """Split ``K`` into ``q_x w_x + r_x d_x`` without checking that ``d_x`` are states."""
    K = np.array(K, dtype=float)
    if K.shape != (problem.dim,):
        raise DimensionError(f"K has shape {K.shape}, expected ({problem.dim},)")
    K.setflags(write=False)
    uK = float(problem.model.unit @ K)
    r = uK - problem.priors
    d = []
    for x in range(problem.n_states):
        if r[x] > tol:
            dx = (K - problem.priors[x] * problem.states[x]) / r[x]
            dx.setflags(write=False)
            d.append(dx)
        else:
            d.append(None)
    r.setflags(write=False)
    return KktCertificate(K, r, tuple(d))


def _complement_residuals(problem, cert: KktCertificate, tol: float) -> dict:
    unit = problem.model.unit
    symmetry = 0.0
    normalisation = 0.0
    membership = 0.0
    r_range = float(max(0.0, -cert.r.min(), cert.r.max() - 1.0))
    for x in cert.defined():
        dx = cert.d[x]
        rest = cert.K - problem.priors[x] * problem.states[x] - cert.r[x] * dx
        symmetry = max(symmetry, float(np.abs(rest).max()))
        normalisation = max(normalisation, abs(float(unit @ dx) - 1.0))
        # weighted by r_x: the decomposition is only determined up to r_x * d_x
        membership = max(membership, cert.r[x] * max(0.0, is_state(problem.model, dx, tol).residual))
    return {
        "symmetry": symmetry,
        "normalization": normalisation,
        "complement_membership": membership,
        "r_range": r_range,
    }


def extract_certificate(problem: DiscriminationProblem, result: DiscriminationResult,
                        tol: float = DEFAULT_TOL) -> KktCertificate:
    """Complementary states for the dual optimum in ``result``.

    Raises ``CertificateError`` if some ``d_x`` falls outside the state space.
    """
    cert = decompose(problem, result.K, tol)
    for x in cert.defined():
        m = is_state(problem.model, cert.d[x], tol)
        if cert.r[x] * m.residual > tol:
            raise CertificateError(
                f"complementary state {x} lies outside the state space (residual {m.residual:.3e})"
            )
    return KktCertificate(cert.K, cert.r, cert.d, _complement_residuals(problem, cert, tol))


def verify_kkt(problem: DiscriminationProblem, measurement: Measurement, cert: KktCertificate,
               tol: float = DEFAULT_TOL) -> CheckReport:
    """Check primal and dual feasibility, the decomposition of K, and orthogonality."""
    E = measurement.effects
    if E.shape != problem.states.shape:
        raise DimensionError(f"measurement shape {E.shape} does not match states {problem.states.shape}")
    model = problem.model
    values = E @ model.vertices.T
    primal = float(max(0.0, -values.min(), np.abs(E.sum(axis=0) - model.unit).max()))

    gaps = cert.K[None, :] - problem.priors[:, None] * problem.states
    dual = max(max(0.0, in_state_cone(model, g, tol).residual) for g in gaps)
    orthogonality = float(np.abs(np.einsum("xd,xd->x", E, gaps)).max())
    value = success_probability(problem, measurement)
    residuals = {
        "primal_feasibility": primal,
        "dual_feasibility": float(dual),
        **_complement_residuals(problem, cert, tol),
        "orthogonality": orthogonality,
    }
    details = {"p_guess": float(model.unit @ cert.K), "objective": value}
    return CheckReport("kkt", residuals, tol, details)


def check_congruence(problem: DiscriminationProblem, cert: KktCertificate,
                     tol: float = DEFAULT_TOL) -> CheckReport:
    """Edges ``q_x w_x - q_y w_y`` against ``r_y d_y - r_x d_x`` for every pair.

    Labels whose complementary state is undefined are skipped.
    """
    xs = cert.defined()
    given = problem.priors[:, None] * problem.states
    pair = length = direction = 0.0
    for x, y in itertools.combinations(xs, 2):
        a = given[x] - given[y]
        b = cert.r[x] * cert.d[x] - cert.r[y] * cert.d[y]
        pair = max(pair, float(np.abs(a + b).max()))
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        length = max(length, abs(float(na - nb)))
        if na > tol and nb > tol:
            direction = max(direction, float(np.abs(a / na + b / nb).max()))
    skipped = [x for x in range(problem.n_states) if x not in xs]
    return CheckReport(
        "congruence",
        {"pair": pair, "edge_length": length, "antiparallel": direction},
        tol,
        {"skipped": skipped},
    )


def pairwise_ratios(problem: DiscriminationProblem, cert: KktCertificate,
                    tol: float = DEFAULT_TOL) -> dict[tuple[int, int], float]:
    """``||(w_x - w_y)/N|| / ||d_x - d_y||`` for every usable pair (Euclidean norm)."""
    N = problem.n_states
    out = {}
    for x, y in itertools.combinations(cert.defined(), 2):
        top = np.linalg.norm((problem.states[x] - problem.states[y]) / N)
        bottom = np.linalg.norm(cert.d[x] - cert.d[y])
        if top > tol and bottom > tol:
            out[(x, y)] = float(top / bottom)
    return out


def uniform_ratio(problem: DiscriminationProblem, cert: KktCertificate,
                  tol: float = DEFAULT_TOL) -> float:
    """Size ratio r of the given-state and complement polytopes, with p_guess = 1/N + r.

    Requires uniform priors.  Raises ``CertificateError`` when no pair is usable,
    when pairs disagree, or when ``1/N + r`` differs from ``u . K``.
    """
    N = problem.n_states
    if N < 2 or not problem.is_uniform(tol):
        raise CertificateError("the ratio formula needs N >= 2 states with uniform priors")
    ratios = pairwise_ratios(problem, cert, tol)
    if not ratios:
        raise CertificateError("no pair with distinct states and distinct complements")
    values = np.array(list(ratios.values()))
    r = float(values[0])
    if np.abs(values - r).max() > tol:
        raise CertificateError(f"pairwise ratios disagree (spread {np.ptp(values):.3e})")
    p_guess = float(problem.model.unit @ cert.K)
    if abs(1.0 / N + r - p_guess) > tol:
        raise CertificateError(f"1/N + r = {1.0 / N + r!r} but u.K = {p_guess!r}")
    return r


# --------------------------------------------------------------------------
# geometric search


@dataclass(frozen=True)
class GeometricSolution:
    p_guess: float
    K: np.ndarray
    certificate: KktCertificate
    measurement: Measurement
    candidate: tuple  # position of the winning tuple (pool indices when searching a pool)
    report: CheckReport


def _fit_batch(D: np.ndarray, given: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least squares for ``K - r_x d_x = q_x w_x`` over a batch of complement tuples."""
    B, N, d = D.shape
    M = np.zeros((B, N * d, d + N))
    for x in range(N):
        M[:, x * d:(x + 1) * d, :d] = np.eye(d)
        M[:, x * d:(x + 1) * d, d + x] = -D[:, x, :]
    rhs = given.ravel()
    sol = np.linalg.pinv(M) @ rhs
    resid = np.abs(M @ sol[..., None] - rhs[:, None])[..., 0].max(axis=1)
    return sol, resid


def _orthogonal_measurement(problem: DiscriminationProblem, K: np.ndarray,
                            tol: float) -> Measurement | None:
    N, d = problem.n_states, problem.dim
    V = problem.model.vertices
    m = V.shape[0]
    gaps = K[None, :] - problem.priors[:, None] * problem.states
    A = np.zeros((d + N, N * d))
    A[:d] = np.tile(np.eye(d), (1, N))
    for x in range(N):
        A[d + x, x * d:(x + 1) * d] = gaps[x]
    b = np.concatenate([problem.model.unit, np.zeros(N)])
    G = np.zeros((N * m, N * d))
    for x in range(N):
        G[x * m:(x + 1) * m, x * d:(x + 1) * d] = V
    sol = lp.solve(lp.LinearProgram(np.zeros(N * d), A, b, G, np.zeros(N * m)), tol)
    if not sol.optimal:
        return None
    return Measurement(sol.primal_point.reshape(N, d), True)


def _pool_tuples(pool_size: int, N: int, chunk: int):
    total = pool_size**N
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        yield np.stack(np.unravel_index(flat, (pool_size,) * N), axis=1)


def geometric_search(problem: DiscriminationProblem, candidates=None, *, pool=None,
                     tol: float = DEFAULT_TOL, chunk: int = 8192) -> GeometricSolution | None:
    """Find complementary states among candidates and certify them.

    ``candidates`` is an explicit sequence of N-tuples of states.  When it is
    omitted every tuple over ``pool`` (default: the model's vertices) is tried
    in lexicographic order.  For each tuple K and r are fitted by least squares;
    tuples with residual above ``tol`` or negative weights are dropped.  The
    first survivor whose K is dual feasible and admits a measurement orthogonal
    to every ``K - q_x w_x`` is returned; ``None`` if nothing certifies.
    """
    N, d = problem.n_states, problem.dim
    given = problem.priors[:, None] * problem.states

    if candidates is not None:
        cand = [np.asarray(c, dtype=float) for c in candidates]
        if not cand:
            return None
        batches = ((np.arange(i, min(i + chunk, len(cand)))[:, None],
                    np.stack(cand[i:i + chunk])) for i in range(0, len(cand), chunk))
    else:
        P = problem.model.vertices if pool is None else np.asarray(pool, dtype=float)
        if len(P) == 0:
            return None
        batches = ((idx, P[idx]) for idx in _pool_tuples(len(P), N, chunk))

    for idx, D in batches:
        if D.shape[1:] != (N, d):
            raise DimensionError(f"candidate tuples must have shape ({N}, {d}), got {D.shape[1:]}")
        sol, resid = _fit_batch(D, given)
        ok = (resid <= tol) & (sol[:, d:].min(axis=1) >= -tol)
        for j in np.flatnonzero(ok):
            K = sol[j, :d]
            if any(in_state_cone(problem.model, g, tol).residual > tol
                   for g in K - given):
                continue
            measurement = _orthogonal_measurement(problem, K, tol)
            if measurement is None:
                continue
            cert = decompose(problem, K, tol)
            report = verify_kkt(problem, measurement, cert, tol)
            if not report.passed:
                continue
            K = cert.K
            return GeometricSolution(float(problem.model.unit @ K), K, cert, measurement,
                                     tuple(int(i) for i in idx[j]), report)
    return None


def vertex_and_midpoint_pool(model, pairs=None) -> np.ndarray:
    """Vertices followed by midpoints of the given vertex pairs (default: all pairs)."""
    V = model.vertices
    if pairs is None:
        pairs = itertools.combinations(range(len(V)), 2)
    mids = [(V[i] + V[j]) / 2 for i, j in pairs]
    return np.vstack([V] + ([np.array(mids)] if mids else []))
