"""Spectral quality of the preconditioner blocks.

Lanczos extreme-eigenvalue estimates show that the block-diagonal outer
preconditioner keeps the (indefinite) coupled operator's generalized
condition number essentially constant under refinement, and likewise for
the auxiliary-space treatment of the div-elliptic porous block.
"""

import numpy as np

from stokesdarcy import Problem, SolveConfig
from stokesdarcy import ftp, precond
from stokesdarcy.krylov import (indefinite_condition_estimate,
                                spd_condition_estimate)
from stokesdarcy.solver import _outer_operator, outer_preconditioner

# ---------------------------------------------------------------------
# outer saddle operator, exact interface coupling
print("outer coupled operator, block-diagonal preconditioner")
for n in (8, 16, 32):
    problem = Problem("mini", n)
    sub = problem.make_subsolver(mode="exact")
    op = _outer_operator(problem, ftp.CouplingOperator(problem.R_f, sub))
    P = outer_preconditioner(problem, SolveConfig("mini", n,
                                                  mass_mode="exact"))
    cond = indefinite_condition_estimate(op, P, k=110, seed=3)
    print("  h = 1/%-3d cond ~ %.2f" % (n, cond))

# ---------------------------------------------------------------------
# div-elliptic porous block with the auxiliary-space preconditioner
print("\nporous div-elliptic block, auxiliary-space preconditioner")
for family, pair in (("bdm1", "mini"), ("rt1", "th")):
    conds = []
    for n in (8, 16, 32):
        problem = Problem(pair, n)
        free = np.where(~problem.flux.on_boundary)[0]
        ADD = (problem.A_D + problem.D_D)[np.ix_(free, free)].tocsr()
        transfer = precond.build_hx_transfers(
            problem.flux, problem.params, free_flux=free,
            operator_matrices=(problem.A_D, problem.D_D))
        hx = precond.build_hx_precond(transfer, "direct")
        conds.append(spd_condition_estimate(ADD, hx, k=100, seed=4))
    print("  %s: cond ~ %s" % (family, ", ".join("%.1f" % c for c in conds)))

print("""
both stay bounded under refinement; each application of the
auxiliary-space operator costs one diagonal scaling plus exactly two
second-order nodal solves, which is what makes the inner loop cheap
""")

# ---------------------------------------------------------------------
# stability constants of the half-problems
from stokesdarcy.solver import estimate_infsup

print("divergence inf-sup constants across refinement")
for pair in ("mini", "taylorhood"):
    rows = [estimate_infsup(pair, n) for n in (4, 8, 16)]
    print("  %-10s beta_S: %s   beta_D: %s" % (
        pair,
        " ".join("%.3f" % r["beta_S"] for r in rows),
        " ".join("%.3f" % r["beta_D"] for r in rows)))
