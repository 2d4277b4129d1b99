"""Manufactured solutions, error norms, study drivers and the command line."""

from .norms import convergence_rate, error_norms
from .solutions import NAMES, ManufacturedSolution, manufactured
from .studies import (
    CSV_HEADER,
    CsvRow,
    MeshSpec,
    StudyConfig,
    alternating_grid,
    run_case,
    run_convergence_study,
    run_odd_degree_study,
    run_quality_study,
    solve_system,
)

__all__ = [
    "CSV_HEADER",
    "CsvRow",
    "ManufacturedSolution",
    "MeshSpec",
    "NAMES",
    "StudyConfig",
    "alternating_grid",
    "convergence_rate",
    "error_norms",
    "manufactured",
    "run_case",
    "run_convergence_study",
    "run_odd_degree_study",
    "run_quality_study",
    "solve_system",
]
