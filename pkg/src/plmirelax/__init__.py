"""Relaxations of parameterized matrix inequalities in double convex-sum form.

The classical pair relaxation and the binary-pattern relaxation, with
brute-force grid oracles, a margin-maximizing SDP feasibility layer, and
state-feedback synthesis for rule-blended linear systems.
"""

from .kernels import BACKEND
from .plmi import (
    AffinePlmi,
    ConstantPlmi,
    SchemaError,
    SimplexPoint,
    SymMat,
    counterexample_instance,
    evaluate,
    is_negative_definite,
    load_instance,
    max_eigenvalue,
    save_instance,
    symmetric_pair,
)
from .relaxation import (
    LmiSet,
    PatternTable,
    Verdict,
    binary_table,
    check_constant,
    col_index,
    generate_naive,
    generate_theorem1,
    generate_tuan,
)
from .sdp import (
    AffineSymExpr,
    FeasibilityResult,
    SdpProblem,
    SolverOptions,
    Status,
    evaluate_expr,
    solve_feasibility,
    verify_solution,
)
from .oracle import (
    GridReport,
    TrialOutcome,
    implication_trial,
    lemma3_residual,
    sample_simplex,
    simplex_grid,
    verify_plmi_on_grid,
    young_check,
)
from .stabilization import (
    FeasibilityMap,
    FuzzySystem,
    SynthesisOutcome,
    SynthesisResult,
    ValidationReport,
    build_phi,
    example_system,
    sweep,
    synthesize,
    validate_controller,
)

__version__ = "0.1.0"

__all__ = [
    "AffinePlmi",
    "AffineSymExpr",
    "BACKEND",
    "ConstantPlmi",
    "FeasibilityMap",
    "FeasibilityResult",
    "FuzzySystem",
    "GridReport",
    "LmiSet",
    "PatternTable",
    "SchemaError",
    "SdpProblem",
    "SimplexPoint",
    "SolverOptions",
    "Status",
    "SymMat",
    "SynthesisOutcome",
    "SynthesisResult",
    "TrialOutcome",
    "ValidationReport",
    "Verdict",
    "binary_table",
    "build_phi",
    "check_constant",
    "col_index",
    "counterexample_instance",
    "evaluate",
    "evaluate_expr",
    "example_system",
    "generate_naive",
    "generate_theorem1",
    "generate_tuan",
    "implication_trial",
    "is_negative_definite",
    "lemma3_residual",
    "load_instance",
    "max_eigenvalue",
    "sample_simplex",
    "save_instance",
    "simplex_grid",
    "solve_feasibility",
    "sweep",
    "symmetric_pair",
    "synthesize",
    "validate_controller",
    "verify_plmi_on_grid",
    "verify_solution",
    "young_check",
]
