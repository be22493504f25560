"""Minimum-error state discrimination in polytopic probabilistic theories."""

from gptd.discrimination import (
    DiscriminationProblem,
    DiscriminationResult,
    build_dual,
    build_primal,
    load_problem,
    solve_discrimination,
)
from gptd.kkt import (
    KktCertificate,
    check_congruence,
    extract_certificate,
    geometric_search,
    uniform_ratio,
    verify_kkt,
)
from gptd.lp import LinearProgram, LpSolution, enumerate_bfs_optimum, solve
from gptd.model import (
    GptModel,
    Measurement,
    evaluate,
    in_state_cone,
    is_effect,
    is_state,
    polygon_effect,
    polygon_model,
    validate_model,
)
from gptd.steering import (
    ConditionalTable,
    SteeringScenario,
    audit_diagonal_decomposition,
    build_scenario,
    check_no_signaling,
    conditional_table,
    verify_bound_tightness,
)

__version__ = "0.1.0"
