"""Problem generators used by tests, scripts and the CLI."""

from __future__ import annotations

import numpy as np

from gptd.discrimination import DiscriminationProblem
from gptd.model import Measurement, polygon_effect, polygon_model


def square_problem(indices=(0, 1, 2, 3), priors=None) -> DiscriminationProblem:
    """States of the four-vertex polygon chosen by 0-based index (uniform priors by default)."""
    return DiscriminationProblem.from_vertices(polygon_model(4), indices, priors)


def square_measurements() -> dict[str, Measurement]:
    """The three optimal four-outcome measurements for the uniform square problem.

    ``half``: every facet effect at half weight.  ``pair13`` / ``pair24``: a
    two-outcome measurement whose clicks are split evenly between the two
    vertices the effect cannot tell apart.
    """
    e = [polygon_effect(4, x) for x in range(1, 5)]
    return {
        "half": Measurement(np.array(e) / 2),
        # e_1 is 1 on w_1, w_4; e_3 on w_2, w_3
        "pair13": Measurement(np.array([e[0], e[2], e[2], e[0]]) / 2),
        # e_2 is 1 on w_1, w_2; e_4 on w_3, w_4
        "pair24": Measurement(np.array([e[1], e[1], e[3], e[3]]) / 2),
    }


def random_polygon_problem(rng: np.random.Generator, n_range=(3, 8), N_max=None,
                           uniform: bool = False) -> DiscriminationProblem:
    """Random distinct polygon vertices with Dirichlet(1) (or uniform) priors."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    hi = n if N_max is None else min(n, N_max)
    N = int(rng.integers(2, hi + 1))
    indices = rng.choice(n, size=N, replace=False)
    priors = np.full(N, 1.0 / N) if uniform else rng.dirichlet(np.ones(N))
    return DiscriminationProblem.from_vertices(polygon_model(n), indices, priors)
