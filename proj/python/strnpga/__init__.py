"""Python bindings for the strnpga portfolio library."""

import json as _json

from . import _strnpga
from ._strnpga import (
    FactorModel,
    FeasibleSet,
    StrnpgaError,
    annualize,
    apply_sketch,
    build_model,
    center_and_factor,
    condition_number,
    energy_rank,
    generate_synthetic,
    load_panel,
    objective_gap,
    project_exact,
    project_simplex,
    recommended_sketch_size,
    relative_spectral_error,
    select_truncation_level,
    solve_exact,
)

__all__ = [
    "FactorModel",
    "FeasibleSet",
    "StrnpgaError",
    "annualize",
    "apply_sketch",
    "build_model",
    "center_and_factor",
    "condition_number",
    "dykstra_project",
    "energy_rank",
    "generate_synthetic",
    "load_panel",
    "objective_gap",
    "project_exact",
    "project_feasible",
    "project_simplex",
    "recommended_sketch_size",
    "relative_spectral_error",
    "run_bench",
    "select_truncation_level",
    "solve",
    "solve_exact",
    "spectrum",
]


def _dump(cfg):
    return "" if not cfg else _json.dumps(cfg)


def spectrum(A):
    """Singular values, eigenvalues, cumulative energy and numerical rank of A."""
    return _json.loads(_strnpga.spectrum(A))


def project_feasible(v, F, config=None):
    """Euclidean projection onto the simplex cut by mu^T x >= R. Returns (x, diagnostics)."""
    return _strnpga.project_feasible(v, F, _dump(config))


def dykstra_project(v, F, config=None):
    return _strnpga.dykstra_project(v, F, _dump(config))


def solve(model, F, x0=None, solver=None, projection=None):
    """Run the projected gradient solver; returns the result as a dict."""
    return _json.loads(_strnpga.solve(model, F, x0, _dump(solver), _dump(projection)))


def run_bench(experiment, config=None):
    """Run one of the "approx", "rate", "solver" or "real" experiments."""
    return _json.loads(_strnpga.run_bench(experiment, _dump(config)))
