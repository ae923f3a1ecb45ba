"""Ultra-weak DPG solver: meshes, solves, estimators and convergence studies."""

from ._core import (
    ConfigError,
    Domain,
    Mesh,
    Problem,
    ProblemKind,
    SolverError,
    StudyMode,
    TrialKind,
    fit_slope,
    fit_slope_span,
    lshape_mesh,
    lshape_singular,
    mark,
    refine_marked,
    refine_uniform,
    run_study,
    solve,
    square_smooth,
    unit_square_mesh,
)

__all__ = [
    "ConfigError",
    "Domain",
    "Mesh",
    "Problem",
    "ProblemKind",
    "SolverError",
    "StudyMode",
    "TrialKind",
    "fit_slope",
    "fit_slope_span",
    "lshape_mesh",
    "lshape_singular",
    "mark",
    "refine_marked",
    "refine_uniform",
    "run_study",
    "solve",
    "square_smooth",
    "unit_square_mesh",
]
