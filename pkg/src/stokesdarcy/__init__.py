"""Mixed finite-element solver for the coupled free-flow / porous-media
problem on the split unit square, with a decoupled nested-MINRES
iteration, block-diagonal preconditioning and multilevel / auxiliary-space
velocity blocks."""

from .assembly import InvalidCaseError, PhysicalParams
from .krylov import LinOp, SolveStats, minres
from .manufactured import ManufacturedCase, ZeroCase
from .mesh import CoupledMesh, build_unit_square, interface_trace, refine_uniform
from .solver import (PAIRS, Problem, SolveConfig, SolveReport, canonical_pair,
                     estimate_infsup, parse_combo, solve_coupled,
                     solve_monolithic_oracle)
from .verify import ErrorRecord, RateRecord, compute_errors, compute_rates

__all__ = [
    "CoupledMesh", "ErrorRecord", "InvalidCaseError", "LinOp",
    "ManufacturedCase", "PAIRS", "PhysicalParams", "Problem", "RateRecord",
    "SolveConfig", "SolveReport", "SolveStats", "ZeroCase",
    "build_unit_square", "canonical_pair", "compute_errors", "compute_rates",
    "estimate_infsup", "interface_trace", "minres", "parse_combo",
    "refine_uniform", "solve_coupled", "solve_monolithic_oracle",
]
