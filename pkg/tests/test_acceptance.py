"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``[PASS]`` / ``[FAIL]`` line and the lines are repeated
in the terminal summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest

from conftest import record
from gptd import lp
from gptd.discrimination import DiscriminationProblem, build_primal, solve_discrimination
from gptd.errors import DegenerateScenarioError
from gptd.instances import random_polygon_problem, square_measurements, square_problem
from gptd.kkt import extract_certificate, geometric_search, verify_kkt
from gptd.model import Measurement, polygon_effect, polygon_measurement, polygon_model
from gptd.steering import build_scenario, check_no_signaling, conditional_table, verify_bound_tightness

SWEEP_SEED = 20260101
ORACLE_SEED = 20260102
MEASUREMENT_SEED = 20260103


@pytest.fixture(scope="module")
def sweep():
    """200 seeded random problems with their solutions and timing."""
    rng = np.random.default_rng(SWEEP_SEED)
    problems = [random_polygon_problem(rng, n_range=(3, 8)) for _ in range(200)]
    start = time.perf_counter()
    solved = []
    for problem in problems:
        result = solve_discrimination(problem)
        solved.append((problem, result, extract_certificate(problem, result)))
    return solved, time.perf_counter() - start


def test_square_golden_values():
    start = time.perf_counter()
    problem = square_problem()
    result = solve_discrimination(problem)
    cert = extract_certificate(problem, result)
    elapsed = time.perf_counter() - start
    W = problem.states
    p_err = abs(result.p_guess - 0.5)
    r_err = float(np.abs(cert.r - 0.25).max())
    d_err = max(float(np.abs(cert.d[x] - W[(x + 2) % 4]).max()) for x in range(4))
    ok = p_err <= 1e-9 and r_err <= 1e-9 and d_err <= 1e-8 and elapsed < 1.0
    record("1 square golden values", ok,
           f"|p-0.5|={p_err:.1e} |r-0.25|={r_err:.1e} |d-w|={d_err:.1e} t={elapsed:.3f}s")
    assert ok


def test_three_optimal_measurements():
    problem = square_problem()
    cert = extract_certificate(problem, solve_discrimination(problem))
    details, ok = [], True
    for name, m in square_measurements().items():
        report = verify_kkt(problem, m, cert, 1e-9)
        err = abs(report.details["objective"] - 0.5)
        ok &= report.passed and err <= 1e-9
        details.append(f"{name}: kkt={'ok' if report.passed else report.failing()} |obj-0.5|={err:.1e}")
    record("2 three optimal measurements", ok, "; ".join(details))
    assert ok


def test_zero_effect_identities():
    W = polygon_model(4).vertices
    e1 = polygon_effect(4, 1)
    a, b = abs(float(e1 @ W[1])), abs(float(e1 @ W[2]))
    ok = a <= 1e-12 and b <= 1e-12
    record("3 e_1 vanishes on w_2 and w_3", ok, f"|e1.w2|={a:.1e} |e1.w3|={b:.1e}")
    assert ok


def test_strong_duality_sweep(sweep):
    solved, elapsed = sweep
    worst_gap = max(result.gap for _, result, _ in solved)
    worst_kkt = 0.0
    for problem, result, cert in solved:
        report = verify_kkt(problem, result.measurement, cert, 1e-8)
        worst_kkt = max(worst_kkt, max(report.residuals.values()))
    ok = worst_gap <= 1e-8 and worst_kkt <= 1e-8 and elapsed < 30
    record("4 strong duality on 200 random problems", ok,
           f"max gap={worst_gap:.1e} max kkt residual={worst_kkt:.1e} t={elapsed:.2f}s")
    assert ok


def test_oracle_equivalence():
    rng = np.random.default_rng(ORACLE_SEED)
    worst = 0.0
    for _ in range(50):
        problem = random_polygon_problem(rng, n_range=(3, 5), N_max=4)
        program = build_primal(problem)
        oracle = lp.enumerate_bfs_optimum(program)
        worst = max(worst, abs(oracle.objective_value - solve_discrimination(problem).p_guess))
    ok = worst <= 1e-8
    record("5 basis enumeration matches simplex on 50 instances", ok, f"max delta={worst:.1e}")
    assert ok


def test_bound_tightness(sweep):
    solved, _ = sweep
    worst, used, degenerate = 0.0, 0, 0
    for problem, result, cert in solved:
        try:
            scenario = build_scenario(problem, cert)
        except DegenerateScenarioError:
            degenerate += 1
            continue
        used += 1
        worst = max(worst, abs(result.p_guess * float(scenario.weights.sum()) - 1))
        assert verify_bound_tightness(problem, result, scenario, 1e-8).passed
    ok = worst <= 1e-8 and used > 0
    record("6 steering bound is tight", ok,
           f"max |p*sum(p_x)-1|={worst:.1e} over {used} instances ({degenerate} degenerate skipped)")
    assert ok


def _post_processed(rng, n, N):
    # relabel the outcomes of the full polygon measurement with a random stochastic map
    M = rng.dirichlet(np.ones(N), size=n)
    return Measurement(M.T @ polygon_measurement(n).effects, True)


def test_no_signaling_audit(sweep):
    solved, _ = sweep
    rng = np.random.default_rng(MEASUREMENT_SEED)
    worst_rows = worst_diag = 0.0
    tables = 0
    for problem, result, cert in solved:
        try:
            scenario = build_scenario(problem, cert)
        except DegenerateScenarioError:
            continue
        n = problem.model.n_vertices
        for m in (result.measurement, *(_post_processed(rng, n, problem.n_states) for _ in range(2))):
            report = check_no_signaling(conditional_table(scenario, m, 1e-9), 1e-9)
            worst_rows = max(worst_rows, report.residuals["row_constancy"])
            worst_diag = max(worst_diag, abs(report.details["diagonal_sum"] - 1))
            tables += 1
    ok = worst_rows <= 1e-9 and worst_diag <= 1e-9
    record("7 no-signaling audit", ok,
           f"max row spread={worst_rows:.1e} max |diag-1|={worst_diag:.1e} over {tables} tables")
    assert ok


def test_perfect_pair():
    problem = square_problem((0, 2))
    oracle = lp.enumerate_bfs_optimum(build_primal(problem)).objective_value
    p = solve_discrimination(problem).p_guess
    ok = abs(oracle - 1) <= 1e-9 and abs(p - 1) <= 1e-9
    record("8 perfect pair {w_1, w_3}", ok, f"oracle={oracle!r} solver={p!r}")
    assert ok


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_geometric_search_vertex_pool(n):
    problem = DiscriminationProblem.from_vertices(polygon_model(n), range(n))
    p_lp = solve_discrimination(problem).p_guess
    found = geometric_search(problem)
    if found is None:
        record(f"9 geometric search, vertex pool, n={n}", False,
               f"no vertex tuple certifies; LP p_guess={p_lp:.10f}")
    else:
        delta = abs(found.p_guess - p_lp)
        record(f"9 geometric search, vertex pool, n={n}", delta <= 1e-8,
               f"tuple={found.candidate} delta={delta:.1e}")
    assert found is not None, f"vertex pool has no certifying tuple for n={n}"
    assert abs(found.p_guess - p_lp) <= 1e-8
