"""Command-line front end.

    gptd polygon --n 4 -o square.json
    gptd solve problem.json [--tol 1e-9] [--dump-geometry geometry.csv]
    gptd verify problem.json report.json
    gptd steer problem.json
    gptd oracle problem.json [--cap 1000000]

Every command prints one JSON report (or ``--format text``).  Exit codes:
0 all checks pass, 1 some check fails, 2 invalid input, 3 solver failure,
4 degenerate steering scenario, 5 oracle cap exceeded.  Errors are reported
as JSON on stderr.  ``GPTD_TOL`` overrides the default tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gptd import lp
from gptd.discrimination import (
    GAP_TOL,
    DiscriminationProblem,
    build_primal,
    load_problem,
    solve_discrimination,
    success_probability,
)
from gptd.errors import (
    CapExceededError,
    CertificateError,
    DegenerateScenarioError,
    GptdError,
    InvalidProblemError,
    SolverError,
)
from gptd.kkt import (
    KktCertificate,
    check_congruence,
    extract_certificate,
    pairwise_ratios,
    uniform_ratio,
    verify_kkt,
)
from gptd.model import DEFAULT_TOL, Measurement, polygon_model, save_model
from gptd.report import jsonable
from gptd.steering import (
    audit_diagonal_decomposition,
    build_scenario,
    check_no_signaling,
    conditional_table,
    verify_bound_tightness,
)

SCHEMA = "1"
EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_SOLVER, EXIT_DEGENERATE, EXIT_CAP = range(6)
DEFAULT_CAP = 10**6


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Path | None = None
    tol: float = DEFAULT_TOL
    output: str = "json"
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise CliError(EXIT_INVALID, "config", f"tolerance must be positive, got {self.tol}")
        if self.input_path is not None and not Path(self.input_path).is_file():
            raise CliError(EXIT_INVALID, "config", f"no such file: {self.input_path}")


def default_tol() -> float:
    raw = os.environ.get("GPTD_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise CliError(EXIT_INVALID, "config", f"GPTD_TOL is not a number: {raw!r}") from None


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(EXIT_INVALID, "io", f"cannot write {path}: {exc}") from None


def _load(path) -> DiscriminationProblem:
    try:
        return load_problem(path)
    except (OSError, ValueError, KeyError, TypeError, GptdError) as exc:
        raise CliError(EXIT_INVALID, "invalid_problem", f"{type(exc).__name__}: {exc}") from None


def _solve(problem: DiscriminationProblem, tol: float):
    try:
        result = solve_discrimination(problem, tol)
        cert = extract_certificate(problem, result, tol)
    except InvalidProblemError as exc:
        raise CliError(EXIT_INVALID, "invalid_problem", "; ".join([str(exc)] + exc.violations)) from None
    except (SolverError, CertificateError) as exc:
        raise CliError(EXIT_SOLVER, "solver_failure", str(exc)) from None
    return result, cert


def _ratio_block(problem: DiscriminationProblem, cert: KktCertificate, tol: float) -> dict | None:
    if problem.n_states < 2 or not problem.is_uniform(tol):
        return None
    if not pairwise_ratios(problem, cert, tol):
        return {"applicable": False, "pass": True}
    try:
        r = uniform_ratio(problem, cert, tol)
    except CertificateError as exc:
        return {"applicable": True, "pass": False, "error": str(exc)}
    return {"applicable": True, "pass": True, "r": r, "p_guess": 1.0 / problem.n_states + r}


def _certificate_report(problem, measurement, cert, tol, p_guess) -> dict:
    kkt = verify_kkt(problem, measurement, cert, tol)
    congruence = check_congruence(problem, cert, tol)
    ratio = _ratio_block(problem, cert, tol)
    residuals = dict(kkt.residuals)
    residuals.update({f"congruence_{k}": v for k, v in congruence.residuals.items()})
    residuals["objective_gap"] = abs(success_probability(problem, measurement) - p_guess)
    residuals["dual_value_gap"] = abs(float(problem.model.unit @ cert.K) - p_guess)
    ok = (kkt.passed and congruence.passed and (ratio is None or ratio["pass"])
          and residuals["objective_gap"] <= max(tol, GAP_TOL)
          and residuals["dual_value_gap"] <= tol)
    return {
        "p_guess": p_guess,
        "K": cert.K,
        "r": cert.r,
        "d": list(cert.d),
        "measurement": measurement.effects,
        "residuals": residuals,
        "uniform_ratio": ratio,
        "pass": ok,
    }


# --------------------------------------------------------------------------
# commands; each returns (report, exit code)


def cmd_polygon(n: int, out_path=None) -> tuple[dict, int]:
    try:
        model = polygon_model(n)
    except ValueError as exc:
        raise CliError(EXIT_INVALID, "usage", str(exc)) from None
    if out_path is not None:
        _atomic_write(out_path, json.dumps(model.to_dict(), indent=2) + "\n")
    report = {"schema": SCHEMA, "command": "polygon", "model": model.to_dict(),
              "path": None if out_path is None else str(out_path), "pass": True}
    return report, EXIT_OK


def cmd_solve(problem_path, tol: float = DEFAULT_TOL, dump_geometry=None) -> tuple[dict, int]:
    problem = _load(problem_path)
    result, cert = _solve(problem, tol)
    report = {
        "schema": SCHEMA,
        "command": "solve",
        "tol": tol,
        "n_states": problem.n_states,
        "priors": problem.priors,
        "primal_value": result.primal_value,
        "dual_value": result.dual_value,
        "gap": result.gap,
        **_certificate_report(problem, result.measurement, cert, tol, result.p_guess),
        "solver": result.solver_stats,
    }
    if dump_geometry is not None:
        _atomic_write(dump_geometry, geometry_csv(problem, cert))
    return jsonable(report), EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_verify(problem_path, report_path, tol: float = DEFAULT_TOL) -> tuple[dict, int]:
    problem = _load(problem_path)
    try:
        data = json.loads(Path(report_path).read_text())
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        K = np.array(data["K"], dtype=float)
        r = np.array(data["r"], dtype=float)
        d = tuple(None if v is None else np.array(v, dtype=float) for v in data["d"])
        measurement = Measurement(np.array(data["measurement"], dtype=float))
        p_guess = float(data["p_guess"])
        cert = KktCertificate(K, r, d)
        if len(d) != problem.n_states or r.size != problem.n_states:
            raise ValueError("report does not match the problem's number of states")
        body = _certificate_report(problem, measurement, cert, tol, p_guess)
    except (OSError, ValueError, KeyError, TypeError, GptdError) as exc:
        raise CliError(EXIT_INVALID, "invalid_report", f"{type(exc).__name__}: {exc}") from None
    report = {"schema": SCHEMA, "command": "verify", "tol": tol,
              "residuals": body["residuals"], "uniform_ratio": body["uniform_ratio"],
              "p_guess": p_guess, "pass": body["pass"]}
    return jsonable(report), EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_steer(problem_path, tol: float = DEFAULT_TOL) -> tuple[dict, int]:
    problem = _load(problem_path)
    result, cert = _solve(problem, tol)
    try:
        scenario = build_scenario(problem, cert, tol)
    except DegenerateScenarioError as exc:
        raise CliError(EXIT_DEGENERATE, "degenerate_scenario", str(exc)) from None
    except InvalidProblemError as exc:
        raise CliError(EXIT_SOLVER, "solver_failure", "; ".join([str(exc)] + exc.violations)) from None
    try:
        table = conditional_table(scenario, result.measurement, tol)
    except InvalidProblemError as exc:
        raise CliError(EXIT_SOLVER, "solver_failure", str(exc)) from None
    ns = check_no_signaling(table, tol)
    bound = verify_bound_tightness(problem, result, scenario, tol)
    diagonal = audit_diagonal_decomposition(scenario, result.measurement, table, tol)
    report = {
        "schema": SCHEMA,
        "command": "steer",
        "tol": tol,
        "bound": bound.details["bound"],
        "p_guess": result.p_guess,
        "tight": bound.passed,
        "ns_residual": ns.residuals["row_constancy"],
        "diagonal_sum": table.diagonal_sum(),
        "table": table.entries,
        "weights": scenario.weights,
        "ensemble": scenario.ensemble,
        "checks": {"no_signaling": ns.to_dict(), "bound": bound.to_dict(),
                   "diagonal_decomposition": diagonal.to_dict()},
        "pass": bound.passed and ns.passed and diagonal.passed,
    }
    return jsonable(report), EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_oracle(problem_path, cap: int = DEFAULT_CAP, tol: float = DEFAULT_TOL) -> tuple[dict, int]:
    problem = _load(problem_path)
    program = build_primal(problem)
    try:
        oracle = lp.enumerate_bfs_optimum(program, cap=cap, tol=tol)
    except CapExceededError as exc:
        raise CliError(EXIT_CAP, "cap_exceeded", str(exc)) from None
    solved = lp.solve(program, tol)
    if not (oracle.optimal and solved.optimal):
        raise CliError(EXIT_SOLVER, "solver_failure",
                       f"oracle {oracle.status}, simplex {solved.status}")
    delta = abs(oracle.objective_value - solved.objective_value)
    report = {
        "schema": SCHEMA,
        "command": "oracle",
        "oracle_value": oracle.objective_value,
        "solver_value": solved.objective_value,
        "delta": delta,
        "bases_examined": oracle.stats["bases_examined"],
        "cap": cap,
        "pass": delta <= GAP_TOL,
    }
    return jsonable(report), EXIT_OK if report["pass"] else EXIT_FAIL


def geometry_csv(problem: DiscriminationProblem, cert: KktCertificate) -> str:
    """Vertices of the state space and of the two congruent polytopes, one row each."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["set", "index"] + [f"x{k}" for k in range(problem.dim)])
    for i, v in enumerate(problem.model.vertices):
        writer.writerow(["state_space", i, *map(repr, v.tolist())])
    for x, w in enumerate(problem.states):
        writer.writerow(["given", x, *map(repr, (problem.priors[x] * w).tolist())])
    for x in cert.defined():
        writer.writerow(["complement", x, *map(repr, (cert.r[x] * cert.d[x]).tolist())])
    return buf.getvalue()


# --------------------------------------------------------------------------
# entry point


def _text(report: dict) -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _vertex_table(report: dict) -> str:
    model = report["model"]
    lines = [f"{'x':>3}  " + "  ".join(f"{'c' + str(k):>20}" for k in range(model["dim"]))]
    for i, v in enumerate(model["vertices"], start=1):
        lines.append(f"{i:>3}  " + "  ".join(f"{c:>20.15f}" for c in v))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="equality tolerance (default 1e-9 or $GPTD_TOL)")
    common.add_argument("--format", dest="output", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="gptd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("polygon", parents=[common], help="write a regular polygon model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("-o", "--out", type=Path, default=None)

    p = sub.add_parser("solve", parents=[common], help="solve and certify a problem")
    p.add_argument("problem", type=Path)
    p.add_argument("--dump-geometry", type=Path, default=None)

    p = sub.add_parser("verify", parents=[common], help="re-check a solve report")
    p.add_argument("problem", type=Path)
    p.add_argument("report", type=Path)

    p = sub.add_parser("steer", parents=[common], help="steering / no-signaling audit")
    p.add_argument("problem", type=Path)

    p = sub.add_parser("oracle", parents=[common], help="compare simplex with basis enumeration")
    p.add_argument("problem", type=Path)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "polygon" and args.n < 3:
            raise CliError(EXIT_INVALID, "usage", f"polygon needs --n >= 3, got {args.n}")
        tol = default_tol() if args.tol is None else args.tol
        config = RunConfig(args.command, getattr(args, "problem", None), tol, args.output, args.seed)
        if args.command == "polygon":
            report, code = cmd_polygon(args.n, args.out)
        elif args.command == "solve":
            report, code = cmd_solve(config.input_path, config.tol, args.dump_geometry)
        elif args.command == "verify":
            report, code = cmd_verify(config.input_path, args.report, config.tol)
        elif args.command == "steer":
            report, code = cmd_steer(config.input_path, config.tol)
        else:
            report, code = cmd_oracle(config.input_path, args.cap, config.tol)
    except CliError as exc:
        sys.stderr.write(json.dumps({"error": exc.kind, "message": str(exc),
                                     "exit_code": exc.code}, sort_keys=True) + "\n")
        return exc.code

    if args.command == "polygon" and args.out is not None:
        text = _vertex_table(report)
    elif config.output == "text":
        text = _text(report)
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
