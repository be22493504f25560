"""Solve a batch of seeded random polygon problems and report the worst residuals.

    python3 scripts/random_sweep.py --count 200 --seed 20260101
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from gptd import (
    build_scenario,
    check_congruence,
    extract_certificate,
    solve_discrimination,
    verify_bound_tightness,
    verify_kkt,
)
from gptd.errors import DegenerateScenarioError
from gptd.instances import random_polygon_problem


@dataclass(frozen=True)
class SweepConfig:
    count: int = 200
    seed: int = 20260101
    n_min: int = 3
    n_max: int = 8
    uniform: bool = False
    tol: float = 1e-8


def run(config: SweepConfig) -> dict:
    rng = np.random.default_rng(config.seed)
    worst = {"gap": 0.0, "kkt": 0.0, "congruence": 0.0, "tightness": 0.0}
    degenerate = 0
    start = time.perf_counter()
    for _ in range(config.count):
        problem = random_polygon_problem(rng, (config.n_min, config.n_max), uniform=config.uniform)
        result = solve_discrimination(problem)
        cert = extract_certificate(problem, result)
        worst["gap"] = max(worst["gap"], result.gap)
        kkt = verify_kkt(problem, result.measurement, cert, config.tol)
        worst["kkt"] = max(worst["kkt"], max(kkt.residuals.values()))
        congruence = check_congruence(problem, cert, config.tol)
        worst["congruence"] = max(worst["congruence"], max(congruence.residuals.values()))
        try:
            scenario = build_scenario(problem, cert)
        except DegenerateScenarioError:
            degenerate += 1
            continue
        bound = verify_bound_tightness(problem, result, scenario, config.tol)
        worst["tightness"] = max(worst["tightness"], bound.residuals["tightness"])
    elapsed = time.perf_counter() - start
    return {
        "config": asdict(config),
        "worst": worst,
        "degenerate": degenerate,
        "seconds": round(elapsed, 3),
        "pass": all(v <= config.tol for v in worst.values()),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    defaults = SweepConfig()
    parser.add_argument("--count", type=int, default=defaults.count)
    parser.add_argument("--seed", type=int, default=defaults.seed)
    parser.add_argument("--n-min", type=int, default=defaults.n_min)
    parser.add_argument("--n-max", type=int, default=defaults.n_max)
    parser.add_argument("--uniform", action="store_true")
    parser.add_argument("--tol", type=float, default=defaults.tol)
    args = parser.parse_args()
    config = SweepConfig(args.count, args.seed, args.n_min, args.n_max, args.uniform, args.tol)
    print(json.dumps(run(config), indent=2))


if __name__ == "__main__":
    main()
