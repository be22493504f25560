"""Guessing probability for uniform discrimination of all vertices of regular polygons.

For each n the LP value is compared with the geometric search over two
candidate pools: vertices only, and vertices plus adjacent-edge midpoints.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from gptd import DiscriminationProblem, geometric_search, polygon_model, solve_discrimination
from gptd.kkt import vertex_and_midpoint_pool


@dataclass(frozen=True)
class TableConfig:
    n_min: int = 3
    n_max: int = 8
    geometric_up_to: int = 6  # the vertex pool search grows as n**n


def _geometric(problem, pool):
    found = geometric_search(problem, pool=pool)
    return "-" if found is None else f"{found.p_guess:.10f}"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    defaults = TableConfig()
    parser.add_argument("--n-min", type=int, default=defaults.n_min)
    parser.add_argument("--n-max", type=int, default=defaults.n_max)
    parser.add_argument("--geometric-up-to", type=int, default=defaults.geometric_up_to)
    args = parser.parse_args()
    config = TableConfig(args.n_min, args.n_max, args.geometric_up_to)

    print(f"{'n':>3}  {'LP p_guess':>14}  {'vertex pool':>14}  {'with midpoints':>14}")
    for n in range(config.n_min, config.n_max + 1):
        model = polygon_model(n)
        problem = DiscriminationProblem.from_vertices(model, range(n))
        p = solve_discrimination(problem).p_guess
        if n <= config.geometric_up_to:
            edges = [(i, (i + 1) % n) for i in range(n)]
            plain = _geometric(problem, None)
            mixed = _geometric(problem, vertex_and_midpoint_pool(model, edges))
        else:
            plain = mixed = "skipped"
        print(f"{n:>3}  {p:>14.10f}  {plain:>14}  {mixed:>14}")


if __name__ == "__main__":
    main()
