"""Exact synthesis and verification of polynomial loops from invariants.

The pipeline, bottom to top:

- :mod:`loopforge.ring` — sparse multivariate polynomials over ℚ and
  polynomial self-maps, all arithmetic exact.
- :mod:`loopforge.groebner` — Gröbner bases, ideal and radical membership,
  zero-dimensionality and solution counting.
- :mod:`loopforge.invariant` — the fixed-point chain computing all
  polynomial invariants implied by a set of seeds under one or many maps.
- :mod:`loopforge.synth` — loop templates and the generation of the
  polynomial constraint system whose solutions are valid loops.
- :mod:`loopforge.universal` — the fast path for universally inductive
  invariants: coefficient comparison and exact affine solution spaces.
- :mod:`loopforge.solve` — SMT-LIB emission, external solver orchestration
  with exact model checking, rational root finding, and zero-dimensional
  enumeration.
- :mod:`loopforge.verify` — independent oracles (identity, membership,
  simulation) certifying synthesized loops.
- :mod:`loopforge.cli` — problem files, ``loopforge synth|check|bench``.
"""

from .groebner import (
    GroebnerBasis,
    buchberger,
    elimination_ideal,
    in_radical,
    is_zero_dimensional,
    normal_form,
    solution_count,
)
from .invariant import (
    InvariantSetResult,
    RoundCapExceeded,
    invariant_set,
    invariant_set_branch,
)
from .ring import (
    PolyMap,
    Polynomial,
    RingError,
    VarContext,
    compose,
    parse_poly,
)
from .solve import (
    Finiteness,
    SmtJob,
    SolveOutcome,
    classify_finiteness,
    emit_smtlib,
    rational_roots,
    run_smt,
    solve_zero_dim_rational,
)
from .synth import (
    ConcreteLoop,
    Guard,
    LoopTemplate,
    PolynomialSystem,
    SynthesisProblem,
    generate_loops,
    instantiate_loop,
)
from .universal import (
    AffineSpace,
    compute_loops_linear_universal,
    compute_loops_universal,
    nullspace_basis,
    solve_linear,
)
from .verify import (
    FailureWitness,
    VerificationReport,
    simulate_loop,
    verify_invariants,
    verify_universal,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSpace",
    "ConcreteLoop",
    "FailureWitness",
    "Finiteness",
    "GroebnerBasis",
    "Guard",
    "InvariantSetResult",
    "LoopTemplate",
    "PolyMap",
    "Polynomial",
    "PolynomialSystem",
    "RingError",
    "RoundCapExceeded",
    "SmtJob",
    "SolveOutcome",
    "SynthesisProblem",
    "VarContext",
    "VerificationReport",
    "buchberger",
    "classify_finiteness",
    "compose",
    "compute_loops_linear_universal",
    "compute_loops_universal",
    "elimination_ideal",
    "emit_smtlib",
    "generate_loops",
    "in_radical",
    "instantiate_loop",
    "invariant_set",
    "invariant_set_branch",
    "is_zero_dimensional",
    "normal_form",
    "nullspace_basis",
    "parse_poly",
    "rational_roots",
    "run_smt",
    "simulate_loop",
    "solution_count",
    "solve_linear",
    "solve_zero_dim_rational",
    "verify_invariants",
    "verify_universal",
]
